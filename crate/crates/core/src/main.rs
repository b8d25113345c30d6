use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use wasef::archive;
use wasef::fixtures::{self, FixtureMix};
use wasef::loadsim::Simulator;
use wasef::pagemodel;
use wasef::pipeline::{self, CorpusRef, ExperimentConfig, PipelineError, ProfileRef, ResultsFile};
use wasef::replay::{self, ShapingConfig};
use wasef::report::{self, ReportBundle, SimilarityRow};
use wasef::similarity::SimilarityWeights;
use wasef::transform::{ExternalTransform, TransformRegistry, TransformSpec};

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;
const EXIT_TOTAL: u8 = 4;

#[derive(Parser)]
#[command(name = "wasef", version, about = "Evaluate web page simplification transforms on archived pages")]
struct Cli {
    /// Archive root directory.
    #[arg(long, global = true, env = "WASEF_ARCHIVE", default_value = "archive")]
    archive: PathBuf,
    /// Register an external transform as NAME=PROGRAM (repeatable).
    #[arg(long = "external", global = true, value_name = "NAME=PROGRAM")]
    external: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Import a HAR 1.2 file into the archive.
    ImportHar {
        har: PathBuf,
        #[arg(long)]
        root_url: Option<String>,
    },
    /// Print the parsed resource graph of an archived page.
    Inspect {
        #[arg(long = "page")]
        page_id: String,
    },
    /// List registered transforms.
    Transforms,
    /// Apply one transform and store the variant next to the original.
    Transform {
        #[arg(long = "page", required_unless_present = "corpus", conflicts_with = "corpus")]
        page_id: Option<String>,
        /// Transform every page of a corpus instead of a single page.
        #[arg(long)]
        corpus: Option<String>,
        #[command(flatten)]
        solution: SolutionArgs,
    },
    /// Serve an archived page over HTTP.
    Serve {
        #[arg(long = "page")]
        page_id: String,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Downlink in bytes per second; enables shaping.
        #[arg(long)]
        bandwidth: Option<f64>,
        /// Round-trip time in milliseconds; half is spent before the first byte.
        #[arg(long, default_value_t = 0.0)]
        rtt_ms: f64,
    },
    /// Simulate every page under every solution and write results.json.
    Evaluate {
        #[arg(long)]
        corpus: String,
        /// Comma-separated transform names.
        #[arg(long, value_delimiter = ',', default_value = "identity")]
        solutions: Vec<String>,
        #[arg(long, default_value = "3g")]
        network: String,
        #[arg(long, default_value = "lowend")]
        device: String,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long, default_value = "results.json")]
        out: PathBuf,
    },
    /// Score one transform against the original page.
    Similarity {
        #[arg(long = "page")]
        page_id: String,
        #[command(flatten)]
        solution: SolutionArgs,
    },
    /// Render deltas, summaries and the HTML report from results.json.
    Report {
        #[arg(long)]
        results: PathBuf,
        /// similarity.json produced alongside the results.
        #[arg(long)]
        similarity: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a complete experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's out_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's parallelism.
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Generate seeded synthetic pages and a corpus listing them.
    Fixtures {
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "fixtures")]
        corpus: String,
        #[arg(long)]
        js_heavy: bool,
    },
}

#[derive(Args)]
struct SolutionArgs {
    #[arg(long)]
    solution: String,
    /// Transform parameter as KEY=VALUE (repeatable).
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

impl SolutionArgs {
    fn spec(&self) -> Result<TransformSpec> {
        let mut spec = TransformSpec::named(&self.solution);
        for p in &self.params {
            let (k, v) = p.split_once('=').with_context(|| format!("parameter {p:?} is not KEY=VALUE"))?;
            spec = spec.with_param(k, v);
        }
        Ok(spec)
    }
}

fn registry(external: &[String]) -> Result<TransformRegistry> {
    let mut reg = TransformRegistry::with_builtins();
    for e in external {
        let (name, program) = e.split_once('=').with_context(|| format!("--external {e:?} is not NAME=PROGRAM"))?;
        reg.register(Arc::new(ExternalTransform::new(name, program)))?;
    }
    Ok(reg)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn exit_for(records_ok: usize, skips: usize) -> ExitCode {
    if records_ok == 0 {
        ExitCode::from(EXIT_TOTAL)
    } else if skips > 0 {
        ExitCode::from(EXIT_PARTIAL)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let reg = registry(&cli.external)?;
    let root = cli.archive.as_path();
    match cli.command {
        Command::ImportHar { har, root_url } => {
            let bytes = fs::read(&har).with_context(|| format!("reading {}", har.display()))?;
            let page = archive::import_har(&bytes, root_url.as_deref())?;
            println!("{}", archive::store_page(&page, root)?);
        }
        Command::Inspect { page_id } => {
            let page = archive::load_page(&page_id, root)?;
            print_json(&pagemodel::parse_page(&page)?)?;
        }
        Command::Transforms => print_json(&reg.list())?,
        Command::Transform { page_id, corpus, solution } => {
            let spec = solution.spec()?;
            let pages = match (page_id, corpus) {
                (Some(id), _) => vec![id],
                (None, Some(name)) => archive::load_corpus(&name, root)?.pages,
                (None, None) => bail!("either --page or --corpus is required"),
            };
            let mut failures = 0;
            for id in &pages {
                let outcome = archive::load_page(id, root)
                    .map_err(anyhow::Error::from)
                    .and_then(|page| Ok(reg.apply(&spec, &page)?))
                    .and_then(|variant| Ok((archive::store_page(&variant.page, root)?, variant.provenance)));
                match outcome {
                    Ok((variant_id, provenance)) => {
                        println!("{}", serde_json::json!({ "page_id": variant_id, "provenance": provenance }))
                    }
                    Err(e) => {
                        failures += 1;
                        eprintln!("skipping {id}: {e:#}");
                    }
                }
            }
            return Ok(exit_for(pages.len() - failures, failures));
        }
        Command::Serve { page_id, bind, bandwidth, rtt_ms } => {
            let page = archive::load_page(&page_id, root)?;
            let shaping = match bandwidth {
                Some(bw) => ShapingConfig::shaped(bw, rtt_ms / 1000.0),
                None => ShapingConfig::disabled(),
            };
            let handle = replay::serve(&page, &bind, shaping)?;
            eprintln!("serving {} on http://{}", page.page_id, handle.local_addr());
            handle.wait();
        }
        Command::Evaluate { corpus, solutions, network, device, parallelism, out } => {
            let mut config = ExperimentConfig::new(
                root,
                CorpusRef::Named(corpus),
                solutions.iter().map(|s| TransformSpec::named(s)).collect(),
            );
            config.network = ProfileRef::Named(network);
            config.device = ProfileRef::Named(device);
            config.parallelism = Some(parallelism);
            let eval = pipeline::evaluate(&config, &reg, &Simulator)?;
            pipeline::write_json(&eval.results, &out)?;
            let sim_path = out.with_file_name("similarity.json");
            pipeline::write_json(&eval.similarity, &sim_path)?;
            let full = eval.results.fully_evaluated_pages(eval.solutions.len());
            return Ok(exit_for(full, eval.results.skips.len()));
        }
        Command::Similarity { page_id, solution } => {
            let scores = pipeline::score_solution(root, &page_id, &solution.spec()?, &reg, &SimilarityWeights::default())?;
            print_json(&scores)?;
        }
        Command::Report { results, similarity, out } => {
            let bundle = bundle_from_files(&results, similarity.as_deref())?;
            for path in report::emit_all(&bundle, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Run { config, out, parallelism } => {
            let bytes = fs::read(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut config = ExperimentConfig::from_json(&bytes)?;
            if out.is_some() {
                config.out_dir = out;
            }
            if parallelism.is_some() {
                config.parallelism = parallelism;
            }
            let outcome = pipeline::run_experiment(&config, &reg)?;
            for path in &outcome.files {
                println!("{}", path.display());
            }
            return Ok(exit_for(outcome.fully_evaluated_pages(), outcome.results.skips.len()));
        }
        Command::Fixtures { count, seed, corpus, js_heavy } => {
            if count == 0 {
                bail!("--count must be positive");
            }
            let mix = if js_heavy { FixtureMix::JsHeavy } else { FixtureMix::Mixed };
            let corpus = fixtures::make_fixtures(root, &corpus, count, seed, mix)?;
            print_json(&corpus)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn bundle_from_files(results: &Path, similarity: Option<&Path>) -> Result<ReportBundle> {
    let bytes = fs::read(results).with_context(|| format!("reading {}", results.display()))?;
    let results: ResultsFile = serde_json::from_slice(&bytes).context("parsing results file")?;
    let sims: Vec<SimilarityRow> = match similarity {
        Some(p) => serde_json::from_slice(&fs::read(p).with_context(|| format!("reading {}", p.display()))?)
            .context("parsing similarity file")?,
        None => Vec::new(),
    };
    let baseline = results.config.as_ref().map_or("identity".to_string(), |c| c.baseline.clone());
    Ok(ReportBundle::build(
        &results.experiment_id,
        results.config.clone(),
        &baseline,
        &results.records,
        sims,
        results.skips.clone(),
    ))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let config_error = matches!(err.downcast_ref::<PipelineError>(), Some(PipelineError::ConfigError { .. }));
            ExitCode::from(if config_error { EXIT_CONFIG } else { 1 })
        }
    }
}
