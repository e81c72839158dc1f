mod common;

use std::sync::Arc;

use common::*;

use tusample::corpus::ExampleSet;
use tusample::eval::{
    cross_validate, learning_curve, run_curve, CurveConfig, CvConfig, InitMode, CURVE_HEADER,
};
use tusample::par::Execution;
use tusample::sampler::{SamplerState, Strategy};
use tusample::synth::{generate_synthetic, SyntheticConfig};

fn corpus() -> (Arc<tusample::thesaurus::Thesaurus>, ExampleSet) {
    let s = generate_synthetic(&SyntheticConfig {
        num_verbs: 2,
        num_senses: 3,
        examples_per_sense: 12,
        concept_level: 3,
        concepts_per_sense: 2,
        confusion: 0.1,
        seed: 7,
        ..SyntheticConfig::default()
    })
    .unwrap();
    (Arc::new(s.thesaurus), s.examples)
}

#[test]
fn cross_validation_reports_every_method() {
    let (t, c) = corpus();
    let report = cross_validate(&c, t, None, &CvConfig::default(), 4, 1).unwrap();
    assert_eq!(report.folds.len(), 4);
    for f in report.folds.iter().chain([&report.mean]) {
        for v in [f.lb, f.rb, f.nb, f.bgh] {
            assert!((0.0..=1.0).contains(&v));
        }
        assert!(f.vsm.is_none());
    }
    let mut buf = Vec::new();
    report.write_tsv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().last().unwrap().starts_with("mean\t"));
}

#[test]
fn sequential_and_parallel_agree() {
    let (t, c) = corpus();
    let seq = CvConfig {
        execution: Execution::Sequential,
        ..CvConfig::default()
    };
    let par = CvConfig {
        execution: Execution::Parallel,
        ..CvConfig::default()
    };
    assert_eq!(
        cross_validate(&c, t.clone(), None, &seq, 3, 2).unwrap(),
        cross_validate(&c, t.clone(), None, &par, 3, 2).unwrap()
    );
    let curve = |execution| {
        let cfg = CurveConfig {
            budget: Some(15),
            execution,
            ..CurveConfig::default()
        };
        learning_curve(&c, &t, None, &cfg, &Strategy::tu(1), &[0, 1, 2]).unwrap()
    };
    assert_eq!(curve(Execution::Sequential), curve(Execution::Parallel));
}

#[test]
fn curve_starts_at_seed_only_accuracy() {
    let (t, c) = corpus();
    let seed_db = tusample::database::SenseDatabase::from_examples(c.iter().take(6)).unwrap();
    let cfg = CurveConfig {
        budget: Some(5),
        init: InitMode::Seed(seed_db.clone()),
        ..CurveConfig::default()
    };
    let run = run_curve(&c, &t, None, &cfg, &Strategy::Random, 3).unwrap();
    assert_eq!(run.len(), 6);
    assert_eq!(run[0].labels_used, 0);
    assert_eq!(run.last().unwrap().labels_used, 5);

    let folds = tusample::corpus::split_folds(&c, cfg.folds, 3).unwrap();
    let pool = tusample::corpus::merge_except(&folds, 0).into_vec();
    let st = SamplerState::new(engine(&t), cfg.sampler, seed_db, pool, folds[0].as_slice().to_vec(), 3).unwrap();
    assert_eq!(run[0].accuracy, st.held_out_accuracy().unwrap());
}

#[test]
fn curve_tsv_has_one_row_per_label_count() {
    let (t, c) = corpus();
    let cfg = CurveConfig {
        budget: Some(8),
        ..CurveConfig::default()
    };
    let curve = learning_curve(&c, &t, None, &cfg, &Strategy::Uncertainty, &[4, 5]).unwrap();
    let mut buf = Vec::new();
    curve.write_tsv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), curve.summary.len());
    for line in text.lines() {
        assert_eq!(line.split('\t').count(), CURVE_HEADER.split('\t').count());
        assert!(line.starts_with("uncertainty\t"));
    }
}
