//! Page-simplification transforms.
//!
//! A transform maps an archived page to a simplified variant of itself. The
//! registry holds the built-ins plus anything registered at runtime, either
//! in-process (implement [`Transform`]) or as an external program
//! ([`ExternalTransform`]).

mod builtin;
mod external;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::ArchivedPage;

pub use builtin::{ImgDownscale, Identity, JsBlockThirdParty, JsDce, JsStrip, DOWNSCALE_MARKER};
pub use external::ExternalTransform;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("unknown transform {0:?}")]
    UnknownTransform(String),
    #[error("transform {0:?} is already registered")]
    DuplicateTransform(String),
    #[error("invalid transform name {0:?}: expected [a-z0-9_-]+")]
    InvalidName(String),
    #[error("transform {transform}: invalid parameter {param}: {reason}")]
    InvalidParam {
        transform: String,
        param: String,
        reason: String,
    },
    #[error("transform {transform} failed: {cause}")]
    TransformFailed { transform: String, cause: String },
}

pub type Params = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub description: String,
    pub default: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformInfo {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
}

/// A solution to evaluate: a registered transform name plus its parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "SpecRepr")]
pub struct TransformSpec {
    pub name: String,
    #[serde(default)]
    pub params: Params,
    #[serde(default = "default_version")]
    pub version: String,
}

fn default_version() -> String {
    "1".to_string()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpecRepr {
    Name(String),
    Full {
        name: String,
        #[serde(default)]
        params: Params,
        #[serde(default = "default_version")]
        version: String,
    },
}

impl From<SpecRepr> for TransformSpec {
    fn from(r: SpecRepr) -> Self {
        match r {
            SpecRepr::Name(name) => TransformSpec::named(&name),
            SpecRepr::Full { name, params, version } => TransformSpec { name, params, version },
        }
    }
}

impl TransformSpec {
    pub fn named(name: &str) -> Self {
        TransformSpec {
            name: name.to_string(),
            params: Params::new(),
            version: default_version(),
        }
    }

    pub fn with_param(mut self, key: &str, value: &str) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Original total archived bytes minus variant total.
    pub bytes_removed: i64,
    pub resources_dropped: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantPage {
    pub base_page_id: String,
    pub transform: TransformSpec,
    pub page: ArchivedPage,
    pub provenance: Provenance,
}

/// Output of one transform run before the registry stamps identity and provenance.
#[derive(Debug, Clone)]
pub struct TransformOutput {
    pub page: ArchivedPage,
    pub notes: Vec<String>,
}

impl From<ArchivedPage> for TransformOutput {
    fn from(page: ArchivedPage) -> Self {
        TransformOutput { page, notes: Vec::new() }
    }
}

pub trait Transform: Send + Sync {
    fn name(&self) -> &str;
    fn description(&self) -> &str;
    fn params(&self) -> Vec<ParamSpec> {
        Vec::new()
    }
    /// Must be deterministic and keep the root URL.
    fn apply(&self, page: &ArchivedPage, params: &Params) -> Result<TransformOutput, TransformError>;
}

pub fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-')
}

#[derive(Clone)]
pub struct TransformRegistry {
    transforms: Vec<Arc<dyn Transform>>,
}

impl Default for TransformRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl TransformRegistry {
    pub fn empty() -> Self {
        TransformRegistry { transforms: Vec::new() }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        let builtins: [Arc<dyn Transform>; 5] = [
            Arc::new(Identity),
            Arc::new(JsStrip),
            Arc::new(JsBlockThirdParty),
            Arc::new(JsDce),
            Arc::new(ImgDownscale),
        ];
        for t in builtins {
            r.register(t).expect("builtin names are unique");
        }
        r
    }

    pub fn register(&mut self, transform: Arc<dyn Transform>) -> Result<(), TransformError> {
        let name = transform.name();
        if !valid_name(name) {
            return Err(TransformError::InvalidName(name.to_string()));
        }
        if self.get(name).is_some() {
            return Err(TransformError::DuplicateTransform(name.to_string()));
        }
        self.transforms.push(transform);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn Transform>> {
        self.transforms.iter().find(|t| t.name() == name)
    }

    /// Registered transforms in registration order.
    pub fn list(&self) -> Vec<TransformInfo> {
        self.transforms
            .iter()
            .map(|t| TransformInfo {
                name: t.name().to_string(),
                description: t.description().to_string(),
                params: t.params(),
            })
            .collect()
    }

    pub fn apply(&self, spec: &TransformSpec, page: &ArchivedPage) -> Result<VariantPage, TransformError> {
        let transform = self
            .get(&spec.name)
            .ok_or_else(|| TransformError::UnknownTransform(spec.name.clone()))?;
        let known: Vec<String> = transform.params().into_iter().map(|p| p.name).collect();
        if let Some(unknown) = spec.params.keys().find(|k| !known.contains(k)) {
            return Err(TransformError::InvalidParam {
                transform: spec.name.clone(),
                param: unknown.clone(),
                reason: "not accepted by this transform".to_string(),
            });
        }
        let TransformOutput { page: mut variant, notes } = transform.apply(page, &spec.params)?;
        let failed = |cause: String| TransformError::TransformFailed {
            transform: spec.name.clone(),
            cause,
        };
        if variant.root_url != page.root_url {
            return Err(failed(format!(
                "variant root {} differs from original {}",
                variant.root_url, page.root_url
            )));
        }
        variant.validate().map_err(|e| failed(e.to_string()))?;
        variant.page_id = format!("{}:{}", page.page_id, spec.name);
        let provenance = Provenance {
            bytes_removed: page.total_bytes() as i64 - variant.total_bytes() as i64,
            resources_dropped: page
                .exchanges
                .keys()
                .filter(|k| !variant.exchanges.contains_key(*k))
                .count(),
            notes,
        };
        Ok(VariantPage {
            base_page_id: page.page_id.clone(),
            transform: spec.clone(),
            page: variant,
            provenance,
        })
    }
}

/// Applies `spec` using the built-in registry.
pub fn apply_transform(spec: &TransformSpec, page: &ArchivedPage) -> Result<VariantPage, TransformError> {
    TransformRegistry::with_builtins().apply(spec, page)
}

pub fn list_transforms() -> Vec<TransformInfo> {
    TransformRegistry::with_builtins().list()
}
