//! Structural and functional similarity of a variant page to its original,
//! scored from the parsed document rather than from screenshots.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::ArchivedPage;
use crate::pagemodel::{self, PageModelError, ResourceGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractiveKind {
    Link,
    Button,
    Input,
    Form,
    HandlerElement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractiveElement {
    pub kind: InteractiveKind,
    pub identity_key: String,
    /// Functions called from the element's inline `on*` attributes.
    pub handler_fn_names: BTreeSet<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("similarity weights must be non-negative and sum to 1 (got {0})")]
    BadWeights(f64),
    #[error(transparent)]
    Parse(#[from] PageModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityWeights {
    pub text: f64,
    pub image: f64,
    pub element: f64,
}

impl Default for SimilarityWeights {
    fn default() -> Self {
        SimilarityWeights {
            text: 0.5,
            image: 0.3,
            element: 0.2,
        }
    }
}

impl SimilarityWeights {
    pub fn validate(&self) -> Result<(), SimilarityError> {
        let sum = self.text + self.image + self.element;
        if self.text < 0.0 || self.image < 0.0 || self.element < 0.0 || (sum - 1.0).abs() > 1e-9 {
            return Err(SimilarityError::BadWeights(sum));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityComponents {
    pub text_sim: f64,
    pub image_sim: f64,
    pub element_sim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScores {
    pub structural: f64,
    pub functional: f64,
    pub components: SimilarityComponents,
}

/// Multiset Jaccard: sum of per-item minimum counts over sum of maximum counts.
pub fn multiset_jaccard<'a>(a: impl IntoIterator<Item = &'a str>, b: impl IntoIterator<Item = &'a str>) -> f64 {
    let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for t in a {
        counts.entry(t).or_default().0 += 1;
    }
    for t in b {
        counts.entry(t).or_default().1 += 1;
    }
    let (inter, union) = counts
        .values()
        .fold((0u64, 0u64), |(i, u), &(x, y)| (i + x.min(y), u + x.max(y)));
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn set_jaccard<'a>(a: impl IntoIterator<Item = &'a str>, b: impl IntoIterator<Item = &'a str>) -> f64 {
    let a: BTreeSet<&str> = a.into_iter().collect();
    let b: BTreeSet<&str> = b.into_iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        1.0
    } else {
        a.intersection(&b).count() as f64 / union as f64
    }
}

pub fn histogram_cosine(a: &BTreeMap<String, u64>, b: &BTreeMap<String, u64>) -> f64 {
    let norm = |h: &BTreeMap<String, u64>| h.values().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 && nb == 0.0 {
        return 1.0;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a
        .iter()
        .filter_map(|(k, &v)| b.get(k).map(|&w| v as f64 * w as f64))
        .sum();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

pub fn structural_components(original: &ResourceGraph, variant: &ResourceGraph) -> SimilarityComponents {
    SimilarityComponents {
        text_sim: multiset_jaccard(original.text_tokens(), variant.text_tokens()),
        image_sim: set_jaccard(original.image_urls(), variant.image_urls()),
        element_sim: histogram_cosine(&original.body_tags, &variant.body_tags),
    }
}

/// Weighted content-completeness score; returns `(structural, components)`.
pub fn structural_similarity(
    original: &ResourceGraph,
    variant: &ResourceGraph,
    weights: &SimilarityWeights,
) -> (f64, SimilarityComponents) {
    let c = structural_components(original, variant);
    let score = weights.text * c.text_sim + weights.image * c.image_sim + weights.element * c.element_sim;
    (score.clamp(0.0, 1.0), c)
}

/// Names defined at top level by any script the page still executes.
pub fn defined_functions(page: &ArchivedPage) -> BTreeSet<String> {
    pagemodel::collect_scripts(page)
        .iter()
        .flat_map(|s| crate::js::top_level_definitions(&s.text))
        .collect()
}

/// Fraction of the original's interactive elements that survive in the variant
/// with every handler function they call still defined.
pub fn functional_similarity(original: &ResourceGraph, variant: &ResourceGraph, variant_page: &ArchivedPage) -> f64 {
    if original.interactive_elements.is_empty() {
        return 1.0;
    }
    let mut available: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &variant.interactive_elements {
        *available.entry(e.identity_key.as_str()).or_default() += 1;
    }
    let defined = defined_functions(variant_page);
    let preserved = original
        .interactive_elements
        .iter()
        .filter(|e| {
            let slot = available.get_mut(e.identity_key.as_str());
            match slot {
                Some(n) if *n > 0 => {
                    *n -= 1;
                    e.handler_fn_names.iter().all(|f| defined.contains(f))
                }
                _ => false,
            }
        })
        .count();
    preserved as f64 / original.interactive_elements.len() as f64
}

/// Parses both pages and scores the variant against the original.
pub fn score_pages(
    original: &ArchivedPage,
    variant: &ArchivedPage,
    weights: &SimilarityWeights,
) -> Result<SimilarityScores, SimilarityError> {
    weights.validate()?;
    let og = pagemodel::parse_page(original)?;
    let vg = pagemodel::parse_page(variant)?;
    Ok(score_graphs(&og, &vg, variant, weights))
}

pub fn score_graphs(
    original: &ResourceGraph,
    variant: &ResourceGraph,
    variant_page: &ArchivedPage,
    weights: &SimilarityWeights,
) -> SimilarityScores {
    let (structural, components) = structural_similarity(original, variant, weights);
    SimilarityScores {
        structural,
        functional: functional_similarity(original, variant, variant_page),
        components,
    }
}
