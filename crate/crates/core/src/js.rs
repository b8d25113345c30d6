//! Lexical JavaScript scanning.
//!
//! Not a parser: it skips strings, comments, template literals and regex
//! literals well enough to track brace depth, which is what top-level
//! declaration discovery needs. Reference counting is plain word matching
//! over the raw source, so it over-approximates uses.

use std::collections::BTreeSet;
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Ident,
    Punct(u8),
    Literal,
}

#[derive(Debug, Clone)]
struct Tok {
    kind: Kind,
    span: Range<usize>,
    newline_before: bool,
}

const KEYWORDS: &[&str] = &[
    "break", "case", "catch", "class", "const", "continue", "debugger", "default", "delete", "do",
    "else", "export", "extends", "finally", "for", "function", "if", "import", "in", "instanceof",
    "new", "return", "super", "switch", "this", "throw", "try", "typeof", "var", "void", "while",
    "with", "yield", "let", "static", "await", "async", "of", "true", "false", "null", "undefined",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b'$' || b >= 0x80
}

fn is_ident_char(b: u8) -> bool {
    is_ident_start(b) || b.is_ascii_digit()
}

fn regex_allowed(prev: Option<&Tok>, src: &str) -> bool {
    match prev {
        None => true,
        Some(t) => match t.kind {
            Kind::Punct(c) => !matches!(c, b')' | b']' | b'}'),
            Kind::Ident => matches!(
                &src[t.span.clone()],
                "return" | "typeof" | "case" | "do" | "else" | "in" | "of" | "new" | "delete" | "void" | "throw"
            ),
            Kind::Literal => false,
        },
    }
}

fn lex(src: &str) -> Vec<Tok> {
    let b = src.as_bytes();
    let mut toks: Vec<Tok> = Vec::new();
    let mut i = 0;
    let mut newline = false;
    while i < b.len() {
        let c = b[i];
        if c == b'\n' {
            newline = true;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind;
        if c == b'/' && b.get(i + 1) == Some(&b'/') {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        } else if c == b'/' && b.get(i + 1) == Some(&b'*') {
            i += 2;
            while i < b.len() && !(b[i] == b'*' && b.get(i + 1) == Some(&b'/')) {
                if b[i] == b'\n' {
                    newline = true;
                }
                i += 1;
            }
            i = (i + 2).min(b.len());
            continue;
        } else if c == b'"' || c == b'\'' {
            i += 1;
            while i < b.len() && b[i] != c && b[i] != b'\n' {
                if b[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            i = (i + 1).min(b.len());
            kind = Kind::Literal;
        } else if c == b'`' {
            i = skip_template(b, i + 1);
            kind = Kind::Literal;
        } else if c == b'/' && regex_allowed(toks.last(), src) {
            i += 1;
            let mut in_class = false;
            while i < b.len() && b[i] != b'\n' {
                match b[i] {
                    b'\\' => i += 1,
                    b'[' => in_class = true,
                    b']' => in_class = false,
                    b'/' if !in_class => break,
                    _ => {}
                }
                i += 1;
            }
            i = (i + 1).min(b.len());
            while i < b.len() && b[i].is_ascii_alphabetic() {
                i += 1;
            }
            kind = Kind::Literal;
        } else if is_ident_start(c) {
            while i < b.len() && is_ident_char(b[i]) {
                i += 1;
            }
            kind = Kind::Ident;
        } else if c.is_ascii_digit() {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'.' || b[i] == b'_') {
                i += 1;
            }
            kind = Kind::Literal;
        } else {
            i += 1;
            kind = Kind::Punct(c);
        }
        toks.push(Tok {
            kind,
            span: start..i,
            newline_before: newline,
        });
        newline = false;
    }
    toks
}

/// Skips a template literal body starting just after the opening backtick.
fn skip_template(b: &[u8], mut i: usize) -> usize {
    while i < b.len() {
        match b[i] {
            b'\\' => i += 2,
            b'`' => return i + 1,
            b'$' if b.get(i + 1) == Some(&b'{') => {
                let mut depth = 1;
                i += 2;
                while i < b.len() && depth > 0 {
                    match b[i] {
                        b'{' => depth += 1,
                        b'}' => depth -= 1,
                        b'`' => {
                            i = skip_template(b, i + 1);
                            continue;
                        }
                        b'"' | b'\'' => {
                            let q = b[i];
                            i += 1;
                            while i < b.len() && b[i] != q {
                                if b[i] == b'\\' {
                                    i += 1;
                                }
                                i += 1;
                            }
                        }
                        _ => {}
                    }
                    i += 1;
                }
            }
            _ => i += 1,
        }
    }
    b.len()
}

/// A top-level `function name(...) { ... }` declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDecl {
    pub name: String,
    /// From the `function` keyword through the closing brace.
    pub span: Range<usize>,
}

fn starts_statement(prev: Option<&Tok>, cur: &Tok) -> bool {
    match prev {
        None => true,
        Some(p) => match p.kind {
            Kind::Punct(b';') | Kind::Punct(b'}') | Kind::Punct(b'{') => true,
            Kind::Punct(c) => {
                cur.newline_before
                    && !matches!(
                        c,
                        b'=' | b'(' | b'[' | b',' | b':' | b'?' | b'!' | b'&' | b'|' | b'+' | b'-'
                            | b'*' | b'/' | b'%' | b'<' | b'>' | b'~' | b'^' | b'.'
                    )
            }
            Kind::Ident | Kind::Literal => cur.newline_before,
        },
    }
}

pub fn top_level_functions(src: &str) -> Vec<FunctionDecl> {
    let toks = lex(src);
    let mut out = Vec::new();
    let mut depth: i64 = 0;
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        match t.kind {
            Kind::Punct(b'{') | Kind::Punct(b'(') | Kind::Punct(b'[') => depth += 1,
            Kind::Punct(b'}') | Kind::Punct(b')') | Kind::Punct(b']') => depth -= 1,
            Kind::Ident
                if depth == 0
                    && &src[t.span.clone()] == "function"
                    && starts_statement(i.checked_sub(1).map(|p| &toks[p]), t) =>
            {
                if let Some((decl, next)) = read_declaration(src, &toks, i) {
                    out.push(decl);
                    i = next;
                    continue;
                }
            }
            _ => {}
        }
        i += 1;
    }
    out
}

fn read_declaration(src: &str, toks: &[Tok], at: usize) -> Option<(FunctionDecl, usize)> {
    let mut j = at + 1;
    if matches!(toks.get(j)?.kind, Kind::Punct(b'*')) {
        j += 1;
    }
    let name_tok = toks.get(j)?;
    if name_tok.kind != Kind::Ident {
        return None;
    }
    let name = src[name_tok.span.clone()].to_string();
    j += 1;
    if toks.get(j)?.kind != Kind::Punct(b'(') {
        return None;
    }
    let mut depth = 0i64;
    while j < toks.len() {
        match toks[j].kind {
            Kind::Punct(b'(') => depth += 1,
            Kind::Punct(b')') => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            _ => {}
        }
        j += 1;
    }
    j += 1;
    if toks.get(j)?.kind != Kind::Punct(b'{') {
        return None;
    }
    let mut depth = 0i64;
    while j < toks.len() {
        match toks[j].kind {
            Kind::Punct(b'{') => depth += 1,
            Kind::Punct(b'}') => {
                depth -= 1;
                if depth == 0 {
                    let span = toks[at].span.start..toks[j].span.end;
                    return Some((FunctionDecl { name, span }, j + 1));
                }
            }
            _ => {}
        }
        j += 1;
    }
    None
}

/// Names defined at top level, by `function name` declarations or `name =` assignments.
pub fn top_level_definitions(src: &str) -> BTreeSet<String> {
    let mut names: BTreeSet<String> = top_level_functions(src).into_iter().map(|d| d.name).collect();
    let toks = lex(src);
    let mut depth: i64 = 0;
    for (i, t) in toks.iter().enumerate() {
        match t.kind {
            Kind::Punct(b'{') | Kind::Punct(b'(') | Kind::Punct(b'[') => depth += 1,
            Kind::Punct(b'}') | Kind::Punct(b')') | Kind::Punct(b']') => depth -= 1,
            Kind::Ident if depth == 0 => {
                let Some(eq) = toks.get(i + 1) else { continue };
                if eq.kind != Kind::Punct(b'=') {
                    continue;
                }
                let follows = toks.get(i + 2);
                let compound = follows.is_some_and(|n| {
                    n.span.start == eq.span.end && matches!(n.kind, Kind::Punct(b'=') | Kind::Punct(b'>'))
                });
                let word = &src[t.span.clone()];
                if !compound && !is_keyword(word) {
                    names.insert(word.to_string());
                }
            }
            _ => {}
        }
    }
    names
}

/// Identifiers used in call position, e.g. `a` and `b` in `return a(b(1))`.
pub fn called_identifiers(src: &str) -> BTreeSet<String> {
    let toks = lex(src);
    (0..toks.len().saturating_sub(1))
        .filter(|&i| toks[i].kind == Kind::Ident && toks[i + 1].kind == Kind::Punct(b'('))
        .filter(|&i| i == 0 || toks[i - 1].kind != Kind::Punct(b'.'))
        .map(|i| src[toks[i].span.clone()].to_string())
        .filter(|w| !is_keyword(w))
        .collect()
}

/// Counts whole-word occurrences of `name` in `text`, ignoring the byte range `exclude`.
pub fn count_word(text: &str, name: &str, exclude: Option<&Range<usize>>) -> usize {
    if name.is_empty() {
        return 0;
    }
    let b = text.as_bytes();
    text.match_indices(name)
        .filter(|(at, _)| {
            let end = at + name.len();
            let before_ok = *at == 0 || !is_ident_char(b[at - 1]);
            let after_ok = end >= b.len() || !is_ident_char(b[end]);
            let excluded = exclude.is_some_and(|r| *at >= r.start && end <= r.end);
            before_ok && after_ok && !excluded
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_top_level_functions_only() {
        let src = "function a(x) { function inner() {} return x; }\n\
                   var f = function notDecl() {};\n\
                   (function iife() { function hidden() {} })();\n\
                   function b() { var s = '}'; /* } */ return `${'}'}`; }\n";
        let names: Vec<_> = top_level_functions(src).into_iter().map(|d| d.name).collect();
        assert_eq!(names, ["a", "b"]);
    }

    #[test]
    fn declaration_span_is_exact() {
        let src = "x();\nfunction g(a, b) { if (a) { return b; } }\ny();";
        let d = &top_level_functions(src)[0];
        assert_eq!(&src[d.span.clone()], "function g(a, b) { if (a) { return b; } }");
    }

    #[test]
    fn regex_literal_with_brace() {
        let src = "var r = /[{]/g;\nfunction after() {}";
        let names: Vec<_> = top_level_functions(src).into_iter().map(|d| d.name).collect();
        assert_eq!(names, ["after"]);
    }

    #[test]
    fn definitions_include_assignments() {
        let src = "handler = function () {};\nvar x = 1; if (a == b) {}\nconst arrow = y => y;\nfunction decl() {}";
        let defs = top_level_definitions(src);
        assert!(defs.contains("handler"));
        assert!(defs.contains("x"));
        assert!(defs.contains("arrow"));
        assert!(defs.contains("decl"));
        assert!(!defs.contains("a"));
        assert!(!defs.contains("y"));
    }

    #[test]
    fn calls_in_handler_text() {
        let calls = called_identifiers("return validate(this) && window.submitIt(event)");
        assert_eq!(calls.into_iter().collect::<Vec<_>>(), ["validate"]);
    }

    #[test]
    fn word_counting() {
        assert_eq!(count_word("foo foobar _foo foo()", "foo", None), 2);
        assert_eq!(count_word("foo foo", "foo", Some(&(0..3))), 1);
    }
}
