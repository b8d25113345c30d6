//! End-to-end experiment: transform every page with every solution, simulate
//! each variant, score it against the original, then emit the report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::{self, ArchiveError, ArchivedPage, Corpus};
use crate::loadsim::{DeviceProfile, MeasurementAgent, NetworkProfile, Simulator};
use crate::pagemodel::{self, ResourceGraph};
use crate::report::{self, ReportBundle, ReportError, SimilarityRow};
use crate::similarity::{self, SimilarityWeights};
use crate::stats::{EvaluationRecord, SkipEntry};
use crate::transform::{TransformRegistry, TransformSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error at {field}: {message}")]
    ConfigError { field: String, message: String },
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("storage error at {path}: {source}")]
    StorageError {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn config_error(field: &str, message: impl Into<String>) -> PipelineError {
    PipelineError::ConfigError {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorpusRef {
    Named(String),
    Pages {
        pages: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group_labels: Option<BTreeMap<String, String>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileRef<T> {
    Named(String),
    Inline(T),
}

impl ProfileRef<NetworkProfile> {
    pub fn resolve(&self) -> Result<NetworkProfile, PipelineError> {
        let p = match self {
            ProfileRef::Named(n) => NetworkProfile::builtin(n)
                .ok_or_else(|| config_error("network", format!("unknown network profile {n:?}")))?,
            ProfileRef::Inline(p) => p.clone(),
        };
        p.validate().map_err(|e| config_error("network", e.to_string()))?;
        Ok(p)
    }
}

impl ProfileRef<DeviceProfile> {
    pub fn resolve(&self) -> Result<DeviceProfile, PipelineError> {
        let p = match self {
            ProfileRef::Named(n) => DeviceProfile::builtin(n)
                .ok_or_else(|| config_error("device", format!("unknown device profile {n:?}")))?,
            ProfileRef::Inline(p) => p.clone(),
        };
        p.validate().map_err(|e| config_error("device", e.to_string()))?;
        Ok(p)
    }
}

fn default_baseline() -> String {
    "identity".to_string()
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub archive_dir: PathBuf,
    pub corpus: CorpusRef,
    pub solutions: Vec<TransformSpec>,
    pub network: ProfileRef<NetworkProfile>,
    pub device: ProfileRef<DeviceProfile>,
    /// Where artifacts go; not part of the experiment's identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; not part of the experiment's identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Pages with fewer archived bytes are excluded; 0 disables the filter.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub min_page_bytes: u64,
    #[serde(default)]
    pub similarity_weights: SimilarityWeights,
    #[serde(default = "default_baseline")]
    pub baseline: String,
    #[serde(default = "default_true")]
    pub store_variants: bool,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn new(archive_dir: impl Into<PathBuf>, corpus: CorpusRef, solutions: Vec<TransformSpec>) -> Self {
        ExperimentConfig {
            archive_dir: archive_dir.into(),
            corpus,
            solutions,
            network: ProfileRef::Named("3g".into()),
            device: ProfileRef::Named("lowend".into()),
            out_dir: None,
            parallelism: None,
            seed: 0,
            min_page_bytes: 0,
            similarity_weights: SimilarityWeights::default(),
            baseline: default_baseline(),
            store_variants: true,
        }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, PipelineError> {
        serde_json::from_slice(bytes).map_err(|e| {
            let field = if e.is_data() { format!("line {} column {}", e.line(), e.column()) } else { "<root>".into() };
            config_error(&field, e.to_string())
        })
    }

    /// The config minus execution-only settings; identical snapshots give identical results.
    pub fn snapshot(&self) -> ExperimentConfig {
        ExperimentConfig {
            out_dir: None,
            parallelism: None,
            ..self.clone()
        }
    }

    pub fn experiment_id(&self) -> String {
        let json = serde_json::to_vec(&self.snapshot()).expect("config serializes");
        archive::sha256_hex(&json)[..16].to_string()
    }

    /// Solutions in evaluation order, with the baseline first.
    pub fn effective_solutions(&self) -> Vec<TransformSpec> {
        let mut out: Vec<TransformSpec> = self
            .solutions
            .iter()
            .filter(|s| s.name == self.baseline)
            .take(1)
            .cloned()
            .collect();
        if out.is_empty() {
            out.push(TransformSpec::named(&self.baseline));
        }
        out.extend(self.solutions.iter().filter(|s| s.name != self.baseline).cloned());
        out
    }

    pub fn validate(&self, registry: &TransformRegistry) -> Result<(), PipelineError> {
        if self.solutions.is_empty() {
            return Err(config_error("solutions", "at least one solution is required"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, s) in self.effective_solutions().iter().enumerate() {
            if registry.get(&s.name).is_none() {
                return Err(config_error(&format!("solutions[{i}].name"), format!("unknown transform {:?}", s.name)));
            }
            if !seen.insert(s.name.clone()) {
                return Err(config_error(&format!("solutions[{i}].name"), format!("duplicate solution {:?}", s.name)));
            }
        }
        if self.parallelism == Some(0) {
            return Err(config_error("parallelism", "must be positive"));
        }
        self.network.resolve()?;
        self.device.resolve()?;
        self.similarity_weights
            .validate()
            .map_err(|e| config_error("similarity_weights", e.to_string()))?;
        Ok(())
    }

    /// Resolves the corpus and checks that every page exists in the archive.
    pub fn resolve_corpus(&self) -> Result<Corpus, PipelineError> {
        let corpus = match &self.corpus {
            CorpusRef::Named(name) => {
                let path = self.archive_dir.join("corpora").join(format!("{name}.json"));
                if !path.is_file() {
                    return Err(config_error("corpus", format!("no corpus named {name:?} in {}", self.archive_dir.display())));
                }
                let bytes = fs::read(&path).map_err(|source| PipelineError::StorageError { path: path.clone(), source })?;
                serde_json::from_slice::<Corpus>(&bytes).map_err(|e| config_error("corpus", e.to_string()))?
            }
            CorpusRef::Pages { pages, group_labels } => Corpus {
                name: "inline".to_string(),
                pages: pages.clone(),
                group_labels: group_labels.clone(),
            },
        };
        if corpus.pages.is_empty() {
            return Err(config_error("corpus", "corpus is empty"));
        }
        for (i, page_id) in corpus.pages.iter().enumerate() {
            if !self.archive_dir.join(page_id).join("manifest.json").is_file() {
                return Err(config_error(&format!("corpus.pages[{i}]"), format!("page {page_id} not found in archive")));
            }
        }
        Ok(corpus)
    }
}

/// Contents of `results.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub experiment_id: String,
    pub config: Option<ExperimentConfig>,
    pub records: Vec<EvaluationRecord>,
    pub skips: Vec<SkipEntry>,
    /// Pages dropped by the size filter.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<String>,
}

impl ResultsFile {
    /// Pages with a record for every evaluated solution.
    pub fn fully_evaluated_pages(&self, solutions: usize) -> usize {
        let mut per_page: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &self.records {
            *per_page.entry(&r.page_id).or_default() += 1;
        }
        per_page.values().filter(|&&n| n >= solutions).count()
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), PipelineError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializes");
    bytes.push(b'\n');
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| PipelineError::StorageError { path: parent.to_path_buf(), source })?;
    }
    fs::write(path, bytes).map_err(|source| PipelineError::StorageError { path: path.to_path_buf(), source })
}

pub struct Evaluation {
    pub results: ResultsFile,
    pub similarity: Vec<SimilarityRow>,
    pub solutions: Vec<TransformSpec>,
}

struct Original {
    page: ArchivedPage,
    graph: ResourceGraph,
}

enum TaskOutcome {
    Done(Box<(EvaluationRecord, SimilarityRow)>),
    Skipped(SkipEntry),
}

/// Processing and evaluation phases: transform, simulate and score every `(page, solution)` pair.
pub fn evaluate(
    config: &ExperimentConfig,
    registry: &TransformRegistry,
    agent: &(dyn MeasurementAgent + Sync),
) -> Result<Evaluation, PipelineError> {
    config.validate(registry)?;
    let corpus = config.resolve_corpus()?;
    let net = config.network.resolve()?;
    let dev = config.device.resolve()?;
    let solutions = config.effective_solutions();
    let threads = config.parallelism.unwrap_or(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| config_error("parallelism", e.to_string()))?;

    let variants_dir = config
        .out_dir
        .as_ref()
        .filter(|_| config.store_variants)
        .map(|d| d.join("variants"));

    let (records, similarity, skips, excluded) = pool.install(|| {
        let loaded: Vec<(String, Result<Original, String>)> = corpus
            .pages
            .par_iter()
            .map(|id| {
                let original = archive::load_page(id, &config.archive_dir)
                    .map_err(|e| e.to_string())
                    .and_then(|page| {
                        let graph = pagemodel::parse_page(&page).map_err(|e| e.to_string())?;
                        Ok(Original { page, graph })
                    });
                (id.clone(), original)
            })
            .collect();

        let mut excluded = Vec::new();
        let mut originals: Vec<(String, Result<Original, String>)> = Vec::new();
        for (id, o) in loaded {
            match &o {
                Ok(orig) if orig.page.total_bytes() < config.min_page_bytes => {
                    info!("excluding {id}: below size floor");
                    excluded.push(id);
                }
                _ => originals.push((id, o)),
            }
        }

        let tasks: Vec<(usize, usize)> = (0..originals.len())
            .flat_map(|p| (0..solutions.len()).map(move |s| (p, s)))
            .collect();
        let outcomes: Vec<TaskOutcome> = tasks
            .par_iter()
            .map(|&(p, s)| {
                let (page_id, original) = &originals[p];
                let spec = &solutions[s];
                let skip = |reason: String| {
                    TaskOutcome::Skipped(SkipEntry {
                        page_id: page_id.clone(),
                        solution: spec.name.clone(),
                        reason,
                    })
                };
                let original = match original {
                    Ok(o) => o,
                    Err(e) => return skip(format!("original page unusable: {e}")),
                };
                let variant = match registry.apply(spec, &original.page) {
                    Ok(v) => v,
                    Err(e) => return skip(e.to_string()),
                };
                if let Some(dir) = &variants_dir {
                    if let Err(e) = archive::store_page(&variant.page, dir) {
                        return skip(format!("cannot store variant: {e}"));
                    }
                }
                let graph = match pagemodel::parse_page(&variant.page) {
                    Ok(g) => g,
                    Err(e) => return skip(format!("variant unparseable: {e}")),
                };
                let metrics = match agent.measure(&graph, &net, &dev) {
                    Ok(m) => m,
                    Err(e) => return skip(e.to_string()),
                };
                let scores = similarity::score_graphs(&original.graph, &graph, &variant.page, &config.similarity_weights);
                TaskOutcome::Done(Box::new((
                    EvaluationRecord {
                        page_id: page_id.clone(),
                        solution: spec.name.clone(),
                        group: corpus.group_of(page_id).map(str::to_string),
                        metrics,
                    },
                    SimilarityRow {
                        page_id: page_id.clone(),
                        solution: spec.name.clone(),
                        scores,
                    },
                )))
            })
            .collect();

        let mut records = Vec::new();
        let mut sims = Vec::new();
        let mut skips = Vec::new();
        for o in outcomes {
            match o {
                TaskOutcome::Done(b) => {
                    let (r, s) = *b;
                    records.push(r);
                    sims.push(s);
                }
                TaskOutcome::Skipped(s) => skips.push(s),
            }
        }
        (records, sims, skips, excluded)
    });

    let mut records = records;
    records.sort_by(|a, b| (&a.page_id, &a.solution).cmp(&(&b.page_id, &b.solution)));
    let mut similarity = similarity;
    similarity.sort_by(|a, b| (&a.page_id, &a.solution).cmp(&(&b.page_id, &b.solution)));
    let mut skips = skips;
    skips.sort();

    Ok(Evaluation {
        results: ResultsFile {
            experiment_id: config.experiment_id(),
            config: Some(config.snapshot()),
            records,
            skips,
            excluded,
        },
        similarity,
        solutions,
    })
}

/// What a finished run produced.
pub struct RunOutcome {
    pub bundle: ReportBundle,
    pub results: ResultsFile,
    pub files: Vec<PathBuf>,
    pub solutions: usize,
}

impl RunOutcome {
    pub fn fully_evaluated_pages(&self) -> usize {
        self.results.fully_evaluated_pages(self.solutions)
    }
}

/// Runs all three phases and writes `results.json`, `similarity.json` and the report into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, registry: &TransformRegistry) -> Result<RunOutcome, PipelineError> {
    let out_dir = config
        .out_dir
        .clone()
        .ok_or_else(|| config_error("out_dir", "an output directory is required"))?;
    let eval = evaluate(config, registry, &Simulator)?;
    fs::create_dir_all(&out_dir).map_err(|source| PipelineError::StorageError { path: out_dir.clone(), source })?;

    let results_path = out_dir.join("results.json");
    write_json(&eval.results, &results_path)?;
    let sim_path = out_dir.join("similarity.json");
    write_json(&eval.similarity, &sim_path)?;

    let bundle = ReportBundle::build(
        &eval.results.experiment_id,
        eval.results.config.clone(),
        &config.baseline,
        &eval.results.records,
        eval.similarity.clone(),
        eval.results.skips.clone(),
    );
    let mut files = vec![results_path, sim_path];
    files.extend(report::emit_all(&bundle, &out_dir)?);
    Ok(RunOutcome {
        bundle,
        results: eval.results,
        files,
        solutions: eval.solutions.len(),
    })
}

/// Applies one solution to one page and scores the variant.
pub fn score_solution(
    archive_dir: &Path,
    page_id: &str,
    spec: &TransformSpec,
    registry: &TransformRegistry,
    weights: &SimilarityWeights,
) -> anyhow::Result<similarity::SimilarityScores> {
    let page = archive::load_page(page_id, archive_dir)?;
    let variant = registry.apply(spec, &page)?;
    Ok(similarity::score_pages(&page, &variant.page, weights)?)
}
