//! Subcommands. Without `--corpus` the data pipelines run on a built-in
//! synthetic corpus and its thesaurus.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use tusample::corpus::{extract_cooccurrence, merge_except, parse_corpus, parse_tuples, split_folds, ExampleSet, TupleCounts};
use tusample::database::{parse_seed_database, SenseDatabase};
use tusample::engine::{DecisionMode, Disambiguator, EngineConfig, SimilarityBackend};
use tusample::eval::{
    cross_validate, lambda_sweep, learning_curve, median_labels, oracle, write_sweep_tsv, CurveConfig, CvConfig,
    InitMode, CURVE_HEADER,
};
use tusample::sampler::{SamplerConfig, SamplerState, Strategy, TuVariant};
use tusample::synth::{generate_synthetic, SyntheticConfig};
use tusample::thesaurus::{load_thesaurus, Thesaurus};
use tusample::vsm::{build_vectors, VectorTable};

use crate::api::{router, Session};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tusample::Error),
    #[error("{path}: {source}")]
    Open { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad synthetic config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// Exit status: 2 for usage mistakes, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(tusample::Error::InvalidConfig(_)) => 2,
            _ => 1,
        }
    }

    pub fn is_broken_pipe(&self) -> bool {
        matches!(self, CliError::Io(e) | CliError::Core(tusample::Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe)
    }
}

#[derive(Debug, Parser)]
#[command(name = "tusample", version, about = "Verb sense disambiguation with selective sampling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count (noun, case, verb) tuples in a tagged token stream.
    Ingest {
        /// Tagged stream; stdin when absent.
        #[arg(long)]
        tagged: Option<PathBuf>,
    },
    /// Disambiguate examples against a database and print one report per line.
    Disambiguate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        engine: EngineArgs,
        /// Examples to disambiguate; the corpus when absent.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run a sampling loop and print the history, one JSON record per line.
    Sample {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, value_enum, default_value = "gold")]
        oracle: OracleKind,
        /// Port for the http oracle.
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Cross-validated accuracy of every method.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, default_value_t = 6)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        rb_theta: f64,
    },
    /// Learning curves for one or more strategies.
    Curve {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        engine: EngineArgs,
        /// Repeatable; all four when absent.
        #[arg(long, value_parser = parse_strategy)]
        strategy: Vec<Strategy>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        budget: Option<usize>,
        /// First seed; runs use consecutive seeds.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        runs: u64,
        #[arg(long, default_value_t = 6)]
        folds: usize,
    },
    /// Coverage and accuracy against certainty thresholds for several lambdas.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        backend: BackendArgs,
        /// Repeatable; 0, 0.25, 0.5, 0.75 and 1 when absent.
        #[arg(long = "lambda", value_parser = parse_unit)]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long, default_value_t = 6)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Serve the annotation API.
    Serve {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Write a synthetic corpus and thesaurus.
    Synth {
        /// TOML synthetic config; defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Line-delimited JSON examples.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// `code<TAB>word` lines; required with --corpus.
    #[arg(long)]
    pub thesaurus: Option<PathBuf>,
    /// Seed database records.
    #[arg(long)]
    pub seed_db: Option<PathBuf>,
    /// `noun<TAB>case<TAB>verb<TAB>freq` lines for the vsm backend.
    #[arg(long)]
    pub tuples: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimilarityArg {
    Thesaurus,
    Vsm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecisionArg {
    Weighted,
    Lexicographic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Gold,
    Http,
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value = "thesaurus")]
    pub similarity: SimilarityArg,
    #[arg(long, value_enum, default_value = "lexicographic")]
    pub decision: DecisionArg,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long, default_value_t = 0.5, value_parser = parse_unit)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    #[arg(long, default_value = "tu", value_parser = parse_strategy)]
    pub strategy: Strategy,
    /// Senses considered by tu.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hold out fold 0 of this many for accuracy; nothing held out when absent.
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub positive_only: bool,
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse().map_err(|e: tusample::Error| e.to_string())
}

fn parse_unit(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} outside [0, 1]"))
    }
}

fn with_k(strategy: &Strategy, k: usize) -> Strategy {
    match strategy {
        Strategy::Tu { .. } => Strategy::tu(k),
        s => s.clone(),
    }
}

impl EngineArgs {
    pub fn config(&self) -> EngineConfig {
        EngineConfig {
            lambda: self.lambda,
            ..self.backend.config()
        }
    }
}

impl BackendArgs {
    pub fn config(&self) -> EngineConfig {
        EngineConfig {
            backend: match self.similarity {
                SimilarityArg::Thesaurus => SimilarityBackend::Thesaurus,
                SimilarityArg::Vsm => SimilarityBackend::Vsm,
            },
            decision: match self.decision {
                DecisionArg::Weighted => DecisionMode::Weighted,
                DecisionArg::Lexicographic => DecisionMode::Lexicographic,
            },
            alpha: self.alpha,
            ..EngineConfig::default()
        }
    }
}

/// The corpus used when none is given.
pub fn builtin_synthetic() -> SyntheticConfig {
    SyntheticConfig {
        num_verbs: 2,
        num_senses: 3,
        examples_per_sense: 50,
        concept_level: 4,
        concepts_per_sense: 8,
        confusion: 0.15,
        ..SyntheticConfig::default()
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| CliError::Open {
        path: path.to_path_buf(),
        source,
    })
}

pub struct Data {
    pub corpus: ExampleSet,
    pub thesaurus: Arc<Thesaurus>,
    pub seed_db: Option<SenseDatabase>,
    pub vectors: Option<Arc<VectorTable>>,
}

impl DataArgs {
    pub fn load(&self, engine: &EngineConfig) -> Result<Data> {
        let (corpus, thesaurus) = match (&self.corpus, &self.thesaurus) {
            (Some(c), Some(t)) => (parse_corpus(open(c)?)?, load_thesaurus(open(t)?)?),
            (Some(_), None) => return Err(CliError::Usage("--corpus needs --thesaurus".into())),
            (None, _) => {
                let s = generate_synthetic(&builtin_synthetic())?;
                (s.examples, s.thesaurus)
            }
        };
        let seed_db = match &self.seed_db {
            Some(p) => Some(parse_seed_database(open(p)?)?),
            None => None,
        };
        let vectors = if engine.backend == SimilarityBackend::Vsm {
            // without a tuple file the corpus's own fillers are the co-occurrence data
            let tc = match &self.tuples {
                Some(p) => parse_tuples(open(p)?)?,
                None => {
                    let mut tc = TupleCounts::new();
                    for ex in corpus.iter() {
                        for s in &ex.slots {
                            tc.add(&s.noun, &s.case, &ex.verb, 1);
                        }
                    }
                    tc
                }
            };
            Some(Arc::new(build_vectors(&tc)?))
        } else {
            None
        };
        Ok(Data {
            corpus,
            thesaurus: Arc::new(thesaurus),
            seed_db,
            vectors,
        })
    }
}

impl Data {
    fn engine(&self, cfg: EngineConfig) -> Result<Disambiguator> {
        Ok(Disambiguator::new(self.thesaurus.clone(), self.vectors.clone(), cfg)?)
    }

    /// A sampler over the corpus, seeded from the seed database or from scratch.
    fn sampler(&self, engine: EngineConfig, args: &SamplingArgs) -> Result<SamplerState> {
        let (pool, held_out) = match args.folds {
            Some(k) => {
                let folds = split_folds(&self.corpus, k, args.seed)?;
                (merge_except(&folds, 0).into_vec(), folds[0].as_slice().to_vec())
            }
            None => (self.corpus.as_slice().to_vec(), Vec::new()),
        };
        let cfg = SamplerConfig {
            tu_variant: if args.positive_only {
                TuVariant::PositiveOnly
            } else {
                TuVariant::Signed
            },
            ..SamplerConfig::default()
        };
        let e = self.engine(engine)?;
        Ok(match &self.seed_db {
            Some(db) => SamplerState::new(e, cfg, db.clone(), pool, held_out, args.seed)?,
            None => SamplerState::from_scratch(e, cfg, pool, held_out, args.seed)?,
        })
    }
}

fn json_line<W: Write, T: serde::Serialize>(w: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, value).map_err(io::Error::from)?;
    writeln!(w)?;
    Ok(())
}

pub fn run(cli: Cli, out: &mut impl Write) -> Result<()> {
    match cli.command {
        Command::Ingest { tagged } => {
            let reader: Box<dyn BufRead> = match tagged {
                Some(p) => Box::new(open(&p)?),
                None => Box::new(BufReader::new(io::stdin())),
            };
            let co = extract_cooccurrence(reader)?;
            co.counts.write_to(&mut *out)?;
            eprintln!("skipped {} noun/case pairs with no verb", co.skipped);
        }
        Command::Disambiguate { data, engine, input } => {
            let cfg = engine.config();
            let d = data.load(&cfg)?;
            let db = match &d.seed_db {
                Some(db) => db.clone(),
                None => SenseDatabase::from_examples(d.corpus.iter().filter(|e| e.gold_sense.is_some()))?,
            };
            let inputs = match input {
                Some(p) => parse_corpus(open(&p)?)?,
                None => d.corpus.clone(),
            };
            let e = d.engine(cfg)?;
            for x in inputs.iter() {
                json_line(out, &e.disambiguate(&db, x)?)?;
            }
        }
        Command::Sample {
            data,
            engine,
            sampling,
            budget,
            oracle: kind,
            port,
        } => {
            let cfg = engine.config();
            let d = data.load(&cfg)?;
            let mut st = d.sampler(cfg, &sampling)?;
            let strategy = with_k(&sampling.strategy, sampling.k);
            strategy.validate()?;
            match kind {
                OracleKind::Gold => {
                    let budget = budget.unwrap_or(st.pool_len());
                    for rec in st.run_loop(&strategy, oracle, budget)? {
                        json_line(out, rec)?;
                    }
                }
                OracleKind::Http => serve(st, strategy, session_config(&cfg, &sampling), port, out)?,
            }
        }
        Command::Eval {
            data,
            engine,
            folds,
            seed,
            rb_theta,
        } => {
            let cfg = engine.config();
            let d = data.load(&cfg)?;
            let cv = CvConfig {
                engine: cfg,
                rb_theta,
                ..CvConfig::default()
            };
            cross_validate(&d.corpus, d.thesaurus.clone(), d.vectors.clone(), &cv, folds, seed)?.write_tsv(&mut *out)?;
        }
        Command::Curve {
            data,
            engine,
            strategy,
            k,
            budget,
            seed,
            runs,
            folds,
        } => {
            let cfg = engine.config();
            let d = data.load(&cfg)?;
            let strategies: Vec<Strategy> = if strategy.is_empty() {
                Strategy::NAMES.iter().map(|n| n.parse().unwrap()).collect()
            } else {
                strategy
            };
            let curve_cfg = CurveConfig {
                engine: cfg,
                folds,
                budget,
                init: d.seed_db.clone().map_or(InitMode::Scratch, InitMode::Seed),
                ..CurveConfig::default()
            };
            let seeds: Vec<u64> = (seed..seed + runs).collect();
            writeln!(out, "{CURVE_HEADER}")?;
            for s in strategies {
                let s = with_k(&s, k);
                let curve = learning_curve(&d.corpus, &d.thesaurus, d.vectors.as_ref(), &curve_cfg, &s, &seeds)?;
                curve.write_tsv(&mut *out)?;
                match median_labels(&curve.labels_to_reach(0.9)) {
                    Some(m) => eprintln!("{s}: median labels to 90% of final accuracy {m}"),
                    None => eprintln!("{s}: 90% of final accuracy not reached"),
                }
            }
        }
        Command::Sweep {
            data,
            backend,
            lambdas,
            step,
            folds,
            seed,
        } => {
            if !(step > 0.0 && step <= 1.0) {
                return Err(CliError::Usage(format!("step {step} outside (0, 1]")));
            }
            let cfg = backend.config();
            let d = data.load(&cfg)?;
            let lambdas = if lambdas.is_empty() {
                vec![0.0, 0.25, 0.5, 0.75, 1.0]
            } else {
                lambdas
            };
            let n = (1.0 / step).round() as usize;
            let thresholds: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(1.0)).collect();
            let sweeps = lambda_sweep(&d.corpus, &d.engine(cfg)?, &lambdas, &thresholds, folds, seed)?;
            write_sweep_tsv(&mut *out, &sweeps)?;
        }
        Command::Serve {
            data,
            engine,
            sampling,
            port,
        } => {
            let cfg = engine.config();
            let d = data.load(&cfg)?;
            let st = d.sampler(cfg, &sampling)?;
            let strategy = with_k(&sampling.strategy, sampling.k);
            strategy.validate()?;
            serve(st, strategy, session_config(&cfg, &sampling), port, out)?;
        }
        Command::Synth { config, seed, out: dir } => {
            let mut cfg = match config {
                Some(p) => toml::from_str(&std::fs::read_to_string(&p).map_err(|source| CliError::Open {
                    path: p.clone(),
                    source,
                })?)?,
                None => builtin_synthetic(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let s = generate_synthetic(&cfg)?;
            std::fs::create_dir_all(&dir)?;
            s.examples.write_to(File::create(dir.join("corpus.jsonl"))?)?;
            s.thesaurus.write_to(File::create(dir.join("thesaurus.tsv"))?)?;
            writeln!(out, "wrote {} examples to {}", s.examples.len(), dir.display())?;
        }
    }
    Ok(())
}

fn session_config(engine: &EngineConfig, s: &SamplingArgs) -> serde_json::Value {
    json!({
        "engine": engine,
        "k": s.k,
        "seed": s.seed,
        "folds": s.folds,
        "positive_only": s.positive_only,
    })
}

/// Serves until interrupted, then dumps the labeling history to `out`.
fn serve(st: SamplerState, strategy: Strategy, config: serde_json::Value, port: u16, out: &mut impl Write) -> Result<()> {
    let session = Arc::new(RwLock::new(Session::new(st, strategy, config)));
    let app = router(session.clone());
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let addr = SocketAddr::from(([127, 0, 0, 1], port));
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on http://{addr}");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })?;
    let s = session.read().unwrap();
    for rec in s.state.history() {
        json_line(out, rec)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_parser() {
        assert_eq!(parse_unit("0.25"), Ok(0.25));
        assert!(parse_unit("1.01").is_err());
        assert!(parse_unit("x").is_err());
    }

    #[test]
    fn k_applies_to_tu_only() {
        assert_eq!(with_k(&Strategy::tu(1), 3), Strategy::tu(3));
        assert_eq!(with_k(&Strategy::Random, 3), Strategy::Random);
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from(["tusample", "sweep", "--lambda", "0", "--lambda", "1", "--similarity", "vsm"]).unwrap();
        let Command::Sweep { lambdas, backend, .. } = cli.command else {
            panic!("not a sweep");
        };
        assert_eq!(lambdas, [0.0, 1.0]);
        assert_eq!(backend.config().backend, SimilarityBackend::Vsm);

        let cli = Cli::try_parse_from(["tusample", "serve", "--decision", "weighted", "--lambda", "0.2", "--port", "9"]).unwrap();
        let Command::Serve { engine, port, sampling, .. } = cli.command else {
            panic!("not serve");
        };
        assert_eq!(port, 9);
        assert_eq!(sampling.strategy, Strategy::tu(1));
        let cfg = engine.config();
        assert_eq!((cfg.decision, cfg.lambda), (DecisionMode::Weighted, 0.2));

        let err = Cli::try_parse_from(["tusample", "curve", "--strategy", "qbc"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(tusample::Error::EmptyPool).exit_code(), 1);
        assert!(CliError::Io(io::ErrorKind::BrokenPipe.into()).is_broken_pipe());
    }
}
