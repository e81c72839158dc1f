//! Cross-validation, coverage sweeps and learning curves.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::baselines::{induce_rules, most_frequent_sense, nb_train, rule_based_disambiguate};
use crate::corpus::{merge_except, split_folds, Example, ExampleSet};
use crate::database::SenseDatabase;
use crate::engine::{certainty, Disambiguator, EngineConfig, SimilarityBackend};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::sampler::{SamplerConfig, SamplerState, Strategy};
use crate::thesaurus::Thesaurus;
use crate::vsm::VectorTable;

/// Fraction of outputs equal to their gold label.
pub fn accuracy<A: AsRef<str>, B: AsRef<str>>(outputs: &[A], golds: &[B]) -> Result<f64> {
    if outputs.len() != golds.len() {
        return Err(Error::InvalidConfig(format!(
            "{} outputs for {} gold labels",
            outputs.len(),
            golds.len()
        )));
    }
    if outputs.is_empty() {
        return Err(Error::EmptyInput("outputs"));
    }
    let correct = outputs
        .iter()
        .zip(golds)
        .filter(|(o, g)| o.as_ref() == g.as_ref())
        .count();
    Ok(correct as f64 / outputs.len() as f64)
}

fn golds(set: &[Example]) -> Result<Vec<&str>> {
    set.iter()
        .map(|e| {
            e.gold_sense
                .as_deref()
                .ok_or_else(|| Error::MissingGold(e.id.clone()))
        })
        .collect()
}

/// Accuracy where an abstention counts as wrong.
fn scored(predictions: &[Option<String>], golds: &[&str]) -> Result<f64> {
    let outputs: Vec<&str> = predictions.iter().map(|p| p.as_deref().unwrap_or("")).collect();
    accuracy(&outputs, golds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub engine: EngineConfig,
    pub rb_theta: f64,
    pub nb_level: usize,
    pub nb_pseudo: f64,
    pub execution: Execution,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            engine: EngineConfig::default(),
            rb_theta: 0.05,
            nb_level: 5,
            nb_pseudo: 1.0,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAccuracy {
    pub fold: usize,
    pub lb: f64,
    pub rb: f64,
    pub nb: f64,
    /// Present when co-occurrence vectors were supplied.
    pub vsm: Option<f64>,
    pub bgh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldAccuracy>,
    pub mean: FoldAccuracy,
}

impl CvReport {
    /// Tab-separated table, one row per fold and a final mean row.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "fold\tLB\tRB\tNB\tVSM\tBGH")?;
        let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.4}"));
        for (label, f) in self
            .folds
            .iter()
            .map(|f| (f.fold.to_string(), f))
            .chain([("mean".to_string(), &self.mean)])
        {
            writeln!(
                w,
                "{label}\t{:.4}\t{:.4}\t{:.4}\t{}\t{:.4}",
                f.lb,
                f.rb,
                f.nb,
                fmt(f.vsm),
                f.bgh
            )?;
        }
        Ok(())
    }
}

fn predict_each<F>(test: &[Example], db: &SenseDatabase, f: F) -> Vec<Option<String>>
where
    F: Fn(&Example) -> Result<String>,
{
    test.iter()
        .map(|x| if db.verb(&x.verb).is_some() { f(x).ok() } else { None })
        .collect()
}

fn evaluate_fold(
    fold: usize,
    train: &ExampleSet,
    test: &[Example],
    thesaurus: &Arc<Thesaurus>,
    vectors: Option<&Arc<VectorTable>>,
    cfg: &CvConfig,
) -> Result<FoldAccuracy> {
    let gold = golds(test)?;
    let db = SenseDatabase::from_examples(train)?;
    let lb = predict_each(test, &db, |x| most_frequent_sense(&db, &x.verb));
    let rules = induce_rules(&db, thesaurus, cfg.rb_theta);
    let rb = predict_each(test, &db, |x| rule_based_disambiguate(&rules, &db, thesaurus, x));
    let nb_model = nb_train(&db, thesaurus, cfg.nb_level, cfg.nb_pseudo)?;
    let nb = predict_each(test, &db, |x| nb_model.disambiguate(thesaurus, x));
    let engine_for = |backend| {
        Disambiguator::new(
            thesaurus.clone(),
            vectors.cloned(),
            EngineConfig {
                backend,
                ..cfg.engine
            },
        )
    };
    let bgh_engine = engine_for(SimilarityBackend::Thesaurus)?;
    let bgh = predict_each(test, &db, |x| Ok(bgh_engine.disambiguate(&db, x)?.chosen));
    let vsm = match vectors {
        Some(_) => {
            let e = engine_for(SimilarityBackend::Vsm)?;
            Some(scored(&predict_each(test, &db, |x| Ok(e.disambiguate(&db, x)?.chosen)), &gold)?)
        }
        None => None,
    };
    Ok(FoldAccuracy {
        fold,
        lb: scored(&lb, &gold)?,
        rb: scored(&rb, &gold)?,
        nb: scored(&nb, &gold)?,
        vsm,
        bgh: scored(&bgh, &gold)?,
    })
}

/// `k`-fold cross-validation of every method. A test verb absent from the
/// training folds counts as an error for all methods.
pub fn cross_validate(
    corpus: &ExampleSet,
    thesaurus: Arc<Thesaurus>,
    vectors: Option<Arc<VectorTable>>,
    cfg: &CvConfig,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    golds(corpus.as_slice())?;
    let folds = split_folds(corpus, k, seed)?;
    let ids: Vec<usize> = (0..k).collect();
    let results = par::map(cfg.execution, &ids, |&i| {
        evaluate_fold(i, &merge_except(&folds, i), folds[i].as_slice(), &thesaurus, vectors.as_ref(), cfg)
    });
    let folds: Vec<FoldAccuracy> = results.into_iter().collect::<Result<_>>()?;
    let n = folds.len() as f64;
    let avg = |f: fn(&FoldAccuracy) -> f64| folds.iter().map(f).sum::<f64>() / n;
    let mean = FoldAccuracy {
        fold: k,
        lb: avg(|f| f.lb),
        rb: avg(|f| f.rb),
        nb: avg(|f| f.nb),
        vsm: folds
            .iter()
            .map(|f| f.vsm)
            .sum::<Option<f64>>()
            .map(|s| s / n),
        bgh: avg(|f| f.bgh),
    };
    Ok(CvReport { folds, mean })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub coverage: f64,
    /// Absent when nothing clears the threshold.
    pub accuracy: Option<f64>,
}

/// Coverage and accuracy of the outputs whose certainty clears each threshold.
pub fn coverage_accuracy_sweep(outputs: &[(f64, bool)], thresholds: &[f64]) -> Vec<SweepRow> {
    thresholds
        .iter()
        .map(|&threshold| {
            let kept: Vec<bool> = outputs
                .iter()
                .filter(|(c, _)| *c >= threshold)
                .map(|(_, ok)| *ok)
                .collect();
            let coverage = if outputs.is_empty() {
                0.0
            } else {
                kept.len() as f64 / outputs.len() as f64
            };
            let accuracy = (!kept.is_empty())
                .then(|| kept.iter().filter(|ok| **ok).count() as f64 / kept.len() as f64);
            SweepRow {
                threshold,
                coverage,
                accuracy,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSweep {
    pub lambda: f64,
    pub rows: Vec<SweepRow>,
}

/// Cross-validated certainty and correctness of the engine for one lambda.
pub fn certainty_outputs(
    corpus: &ExampleSet,
    engine: &Disambiguator,
    lambda: f64,
    k: usize,
    seed: u64,
) -> Result<Vec<(f64, bool)>> {
    golds(corpus.as_slice())?;
    let folds = split_folds(corpus, k, seed)?;
    let mut out = Vec::with_capacity(corpus.len());
    for i in 0..k {
        let db = SenseDatabase::from_examples(&merge_except(&folds, i))?;
        for x in &folds[i] {
            if db.verb(&x.verb).is_none() {
                out.push((0.0, false));
                continue;
            }
            let report = engine.disambiguate(&db, x)?;
            let c = certainty(&report, lambda)?;
            out.push((c, Some(&report.chosen) == x.gold_sense.as_ref()));
        }
    }
    Ok(out)
}

/// One coverage table per lambda over the same cross-validated outputs.
pub fn lambda_sweep(
    corpus: &ExampleSet,
    engine: &Disambiguator,
    lambdas: &[f64],
    thresholds: &[f64],
    k: usize,
    seed: u64,
) -> Result<Vec<LambdaSweep>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let outputs = certainty_outputs(corpus, engine, lambda, k, seed)?;
            Ok(LambdaSweep {
                lambda,
                rows: coverage_accuracy_sweep(&outputs, thresholds),
            })
        })
        .collect()
}

pub fn write_sweep_tsv<W: Write>(mut w: W, sweeps: &[LambdaSweep]) -> Result<()> {
    writeln!(w, "lambda\tthreshold\tcoverage\taccuracy")?;
    for s in sweeps {
        for r in &s.rows {
            let acc = r.accuracy.map_or("NA".to_string(), |a| format!("{a:.4}"));
            writeln!(w, "{}\t{}\t{:.4}\t{acc}", s.lambda, r.threshold, r.coverage)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub enum InitMode {
    /// Start from a given database.
    Seed(SenseDatabase),
    /// Label one random pool example per sense first.
    #[default]
    Scratch,
}

#[derive(Debug, Clone)]
pub struct CurveConfig {
    pub engine: EngineConfig,
    pub sampler: SamplerConfig,
    pub folds: usize,
    /// Labels to sample per run; the whole pool when absent.
    pub budget: Option<usize>,
    pub init: InitMode,
    /// Run seeds concurrently.
    pub execution: Execution,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            engine: EngineConfig::default(),
            sampler: SamplerConfig::default(),
            folds: 6,
            budget: None,
            init: InitMode::Scratch,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub strategy: String,
    pub seed: u64,
    pub fold: usize,
    pub labels_used: usize,
    /// Held-out accuracy.
    pub accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub labels: usize,
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub strategy: String,
    pub runs: Vec<Vec<CurvePoint>>,
    pub summary: Vec<SummaryRow>,
}

impl LearningCurve {
    /// Per run, the fewest labels reaching `fraction` of that run's final accuracy.
    pub fn labels_to_reach(&self, fraction: f64) -> Vec<Option<usize>> {
        self.runs
            .iter()
            .map(|run| {
                let target = fraction * run.last()?.accuracy;
                run.iter().find(|p| p.accuracy >= target).map(|p| p.labels_used)
            })
            .collect()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.summary {
            writeln!(w, "{}\t{}\t{:.6}\t{:.6}", self.strategy, r.labels, r.mean, r.stddev)?;
        }
        Ok(())
    }
}

pub const CURVE_HEADER: &str = "strategy\tlabels\tmean_acc\tstddev";

/// Lower median; `None` entries sort after every count.
pub fn median_labels(values: &[Option<usize>]) -> Option<usize> {
    let mut v: Vec<usize> = values.iter().map(|x| x.unwrap_or(usize::MAX)).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    let m = v[(v.len() - 1) / 2];
    (m != usize::MAX).then_some(m)
}

/// One sampling run: fold 0 of the seed's split is held out, the rest is the pool.
pub fn run_curve(
    corpus: &ExampleSet,
    thesaurus: &Arc<Thesaurus>,
    vectors: Option<&Arc<VectorTable>>,
    cfg: &CurveConfig,
    strategy: &Strategy,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    strategy.validate()?;
    golds(corpus.as_slice())?;
    let folds = split_folds(corpus, cfg.folds, seed)?;
    let held_out = folds[0].as_slice().to_vec();
    let pool = merge_except(&folds, 0).into_vec();
    let engine = Disambiguator::new(thesaurus.clone(), vectors.cloned(), cfg.engine)?;
    let mut st = match &cfg.init {
        InitMode::Seed(db) => SamplerState::new(engine, cfg.sampler, db.clone(), pool, held_out, seed)?,
        InitMode::Scratch => SamplerState::from_scratch(engine, cfg.sampler, pool, held_out, seed)?,
    };
    let point = |st: &SamplerState| -> Result<CurvePoint> {
        Ok(CurvePoint {
            strategy: strategy.name().to_string(),
            seed,
            fold: 0,
            labels_used: st.iteration(),
            accuracy: st
                .held_out_accuracy()
                .ok_or(Error::EmptyInput("held-out set"))?,
            pool_accuracy: st.pool_accuracy(),
        })
    };
    let budget = cfg.budget.unwrap_or(st.pool_len());
    let mut points = vec![point(&st)?];
    for _ in 0..budget {
        if st.pool_len() == 0 {
            break;
        }
        st.run_loop(strategy, oracle, 1)?;
        points.push(point(&st)?);
    }
    Ok(points)
}

/// The simulated annotator: answers with the gold sense.
pub fn oracle(ex: &Example) -> Result<String> {
    ex.gold_sense
        .clone()
        .ok_or_else(|| Error::MissingGold(ex.id.clone()))
}

/// Runs every seed and averages held-out accuracy at each label count.
pub fn learning_curve(
    corpus: &ExampleSet,
    thesaurus: &Arc<Thesaurus>,
    vectors: Option<&Arc<VectorTable>>,
    cfg: &CurveConfig,
    strategy: &Strategy,
    seeds: &[u64],
) -> Result<LearningCurve> {
    if seeds.is_empty() {
        return Err(Error::EmptyInput("seeds"));
    }
    let runs = par::map(cfg.execution, seeds, |&seed| {
        run_curve(corpus, thesaurus, vectors, cfg, strategy, seed)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let len = runs.iter().map(Vec::len).min().unwrap_or(0);
    let summary = (0..len)
        .map(|x| {
            let accs: Vec<f64> = runs.iter().map(|r| r[x].accuracy).collect();
            let (mean, stddev) = mean_stddev(&accs);
            SummaryRow {
                labels: runs[0][x].labels_used,
                mean,
                stddev,
            }
        })
        .collect();
    Ok(LearningCurve {
        strategy: strategy.name().to_string(),
        runs,
        summary,
    })
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SyntheticConfig};

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&["a", "b"], &["a", "b"]).unwrap(), 1.0);
        assert_eq!(accuracy(&["a", "b"], &["b", "a"]).unwrap(), 0.0);
        assert_eq!(accuracy(&["a", "b", "c", "d"], &["a", "b", "c", "x"]).unwrap(), 0.75);
        assert!(accuracy::<&str, &str>(&[], &[]).is_err());
        assert!(accuracy(&["a"], &["a", "b"]).is_err());
    }

    #[test]
    fn sweep_edges() {
        let outputs = [(0.9, true), (0.5, false), (0.2, true), (0.0, false)];
        let rows = coverage_accuracy_sweep(&outputs, &[0.0, 0.3, 0.6, 1.0]);
        assert_eq!(rows[0].coverage, 1.0);
        assert_eq!(rows[0].accuracy, Some(0.5));
        assert_eq!(rows[1].coverage, 0.5);
        assert_eq!(rows[2].accuracy, Some(1.0));
        assert_eq!(rows[3].coverage, 0.0);
        assert_eq!(rows[3].accuracy, None);
        let mut buf = Vec::new();
        write_sweep_tsv(&mut buf, &[LambdaSweep { lambda: 0.5, rows }]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().last().unwrap().ends_with("\tNA"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn medians_and_spread() {
        assert_eq!(median_labels(&[Some(3), Some(1), Some(2)]), Some(2));
        assert_eq!(median_labels(&[Some(3), Some(1), Some(2), Some(10)]), Some(2));
        assert_eq!(median_labels(&[Some(3), None, None]), None);
        let (m, s) = mean_stddev(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(mean_stddev(&[0.4]), (0.4, 0.0));
    }

    #[test]
    fn separable_corpus_cross_validates_perfectly() {
        let synth = generate_synthetic(&SyntheticConfig {
            examples_per_sense: 12,
            ..Default::default()
        })
        .unwrap();
        let t = Arc::new(synth.thesaurus);
        let report = cross_validate(&synth.examples, t.clone(), None, &CvConfig::default(), 6, 1).unwrap();
        assert!(report.folds.iter().all(|f| f.bgh == 1.0));
        assert!(report.mean.vsm.is_none());
        let again = cross_validate(&synth.examples, t, None, &CvConfig::default(), 6, 1).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn curves_start_after_init_and_average() {
        let synth = generate_synthetic(&SyntheticConfig {
            examples_per_sense: 9,
            confusion: 0.2,
            ..Default::default()
        })
        .unwrap();
        let t = Arc::new(synth.thesaurus);
        let cfg = CurveConfig {
            budget: Some(4),
            ..Default::default()
        };
        let curve = learning_curve(&synth.examples, &t, None, &cfg, &Strategy::Random, &[1, 2]).unwrap();
        assert_eq!(curve.summary.len(), 5);
        assert_eq!(curve.summary[0].labels, 0);
        for (x, row) in curve.summary.iter().enumerate() {
            let mean = (curve.runs[0][x].accuracy + curve.runs[1][x].accuracy) / 2.0;
            assert!((row.mean - mean).abs() < 1e-12);
        }
        let mut buf = Vec::new();
        curve.write_tsv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("random\t0\t"));
    }
}
