//! Tolerant HTML tokenizer that keeps source byte spans.
//!
//! Spans let the page model place resources at their parse offsets and let
//! transforms splice elements out of a document without re-serializing it.
//! Malformed markup never fails: an unterminated construct runs to the end of
//! input.

use std::ops::Range;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    /// Lowercased attribute name.
    pub name: String,
    /// Entity-decoded value; empty for bare attributes.
    pub value: String,
    /// Bytes from the whitespace preceding the name through the end of the value.
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    StartTag {
        name: String,
        attrs: Vec<Attribute>,
        self_closing: bool,
        span: Range<usize>,
    },
    EndTag {
        name: String,
        span: Range<usize>,
    },
    Text {
        span: Range<usize>,
    },
    /// Content of a raw-text element (`script`, `style`, ...), emitted between its start and end tags.
    RawText {
        span: Range<usize>,
    },
    Comment {
        span: Range<usize>,
    },
}

impl Token {
    pub fn span(&self) -> Range<usize> {
        match self {
            Token::StartTag { span, .. }
            | Token::EndTag { span, .. }
            | Token::Text { span }
            | Token::RawText { span }
            | Token::Comment { span } => span.clone(),
        }
    }
}

/// Looks up an attribute value by lowercase name.
pub fn attr<'a>(attrs: &'a [Attribute], name: &str) -> Option<&'a str> {
    attrs
        .iter()
        .find(|a| a.name == name)
        .map(|a| a.value.as_str())
}

pub fn has_attr(attrs: &[Attribute], name: &str) -> bool {
    attrs.iter().any(|a| a.name == name)
}

const RAW_TEXT: &[&str] = &["script", "style", "title", "textarea", "xmp", "template"];

pub fn tokenize(src: &str) -> Vec<Token> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    let mut text_start = 0;

    while pos < bytes.len() {
        if bytes[pos] != b'<' {
            pos += 1;
            continue;
        }
        let next = bytes.get(pos + 1).copied();
        let starts_markup = match next {
            Some(b'!') | Some(b'?') | Some(b'/') => true,
            Some(c) => c.is_ascii_alphabetic(),
            None => false,
        };
        if !starts_markup {
            pos += 1;
            continue;
        }
        if text_start < pos {
            tokens.push(Token::Text {
                span: text_start..pos,
            });
        }

        if src[pos..].starts_with("<!--") {
            let end = src[pos + 4..]
                .find("-->")
                .map(|i| pos + 4 + i + 3)
                .unwrap_or(bytes.len());
            tokens.push(Token::Comment { span: pos..end });
            pos = end;
        } else if next == Some(b'!') || next == Some(b'?') {
            let end = find_byte(bytes, pos, b'>').map(|i| i + 1).unwrap_or(bytes.len());
            tokens.push(Token::Comment { span: pos..end });
            pos = end;
        } else if next == Some(b'/') {
            let name_start = pos + 2;
            let name_end = scan_name(bytes, name_start);
            let end = find_byte(bytes, name_end, b'>').map(|i| i + 1).unwrap_or(bytes.len());
            if name_end == name_start {
                tokens.push(Token::Comment { span: pos..end });
            } else {
                tokens.push(Token::EndTag {
                    name: src[name_start..name_end].to_ascii_lowercase(),
                    span: pos..end,
                });
            }
            pos = end;
        } else {
            let (token, end) = parse_start_tag(src, pos);
            let raw_name = match &token {
                Token::StartTag {
                    name, self_closing, ..
                } if RAW_TEXT.contains(&name.as_str()) && !(*self_closing && name != "script") => {
                    Some(name.clone())
                }
                _ => None,
            };
            tokens.push(token);
            pos = end;
            if let Some(name) = raw_name {
                let close = find_close_tag(src, pos, &name);
                if close > pos {
                    tokens.push(Token::RawText { span: pos..close });
                }
                pos = close;
                if pos < bytes.len() {
                    let name_end = pos + 2 + name.len();
                    let end = find_byte(bytes, name_end, b'>').map(|i| i + 1).unwrap_or(bytes.len());
                    tokens.push(Token::EndTag {
                        name,
                        span: pos..end,
                    });
                    pos = end;
                }
            }
        }
        text_start = pos;
    }
    if text_start < bytes.len() {
        tokens.push(Token::Text {
            span: text_start..bytes.len(),
        });
    }
    tokens
}

fn find_byte(bytes: &[u8], from: usize, b: u8) -> Option<usize> {
    bytes[from.min(bytes.len())..]
        .iter()
        .position(|&c| c == b)
        .map(|i| from + i)
}

fn scan_name(bytes: &[u8], from: usize) -> usize {
    let mut i = from;
    while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' && bytes[i] != b'/' {
        i += 1;
    }
    i
}

/// Offset of the `</name` that closes a raw-text element, or end of input.
fn find_close_tag(src: &str, from: usize, name: &str) -> usize {
    let bytes = src.as_bytes();
    let mut i = from;
    while let Some(lt) = find_byte(bytes, i, b'<') {
        if bytes.get(lt + 1) == Some(&b'/') {
            let cand = &bytes[lt + 2..(lt + 2 + name.len()).min(bytes.len())];
            if cand.eq_ignore_ascii_case(name.as_bytes()) {
                let after = bytes.get(lt + 2 + name.len()).copied();
                if matches!(after, None | Some(b'>') | Some(b'/')) || after.is_some_and(|c| c.is_ascii_whitespace()) {
                    return lt;
                }
            }
        }
        i = lt + 1;
    }
    bytes.len()
}

fn parse_start_tag(src: &str, start: usize) -> (Token, usize) {
    let bytes = src.as_bytes();
    let name_end = scan_name(bytes, start + 1);
    let name = src[start + 1..name_end].to_ascii_lowercase();
    let mut attrs = Vec::new();
    let mut i = name_end;
    let mut self_closing = false;

    loop {
        let ws_start = i;
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i >= bytes.len() {
            break;
        }
        match bytes[i] {
            b'>' => {
                i += 1;
                break;
            }
            b'/' => {
                i += 1;
                if bytes.get(i) == Some(&b'>') {
                    self_closing = true;
                    i += 1;
                    break;
                }
                continue;
            }
            _ => {}
        }
        let attr_name_start = i;
        while i < bytes.len()
            && !bytes[i].is_ascii_whitespace()
            && !matches!(bytes[i], b'>' | b'=' | b'/')
        {
            i += 1;
        }
        if i == attr_name_start {
            // stray '=' or similar; skip it
            i += 1;
            continue;
        }
        let attr_name = src[attr_name_start..i].to_ascii_lowercase();
        let mut j = i;
        while j < bytes.len() && bytes[j].is_ascii_whitespace() {
            j += 1;
        }
        let mut value = String::new();
        if bytes.get(j) == Some(&b'=') {
            j += 1;
            while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                j += 1;
            }
            match bytes.get(j) {
                Some(&q) if q == b'"' || q == b'\'' => {
                    let close = find_byte(bytes, j + 1, q).unwrap_or(bytes.len());
                    value = decode_entities(&src[j + 1..close]);
                    i = (close + 1).min(bytes.len());
                }
                Some(_) => {
                    let vstart = j;
                    while j < bytes.len() && !bytes[j].is_ascii_whitespace() && bytes[j] != b'>' {
                        j += 1;
                    }
                    value = decode_entities(&src[vstart..j]);
                    i = j;
                }
                None => i = j,
            }
        }
        attrs.push(Attribute {
            name: attr_name,
            value,
            span: ws_start..i,
        });
    }
    let end = i.min(bytes.len());
    (
        Token::StartTag {
            name,
            attrs,
            self_closing,
            span: start..end,
        },
        end,
    )
}

/// Decodes the common named entities and numeric character references.
pub fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let semi = rest[..rest.len().min(12)].find(';');
        let decoded = semi.and_then(|semi| {
            let ent = &rest[1..semi];
            let ch = match ent {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some('\u{a0}'),
                _ if ent.starts_with("#x") || ent.starts_with("#X") => {
                    u32::from_str_radix(&ent[2..], 16).ok().and_then(char::from_u32)
                }
                _ if ent.starts_with('#') => ent[1..].parse().ok().and_then(char::from_u32),
                _ => None,
            };
            ch.map(|c| (c, semi + 1))
        });
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &rest[len..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}
