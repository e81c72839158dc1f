//! Random instances and independent recomputation oracles shared by the
//! integration and acceptance tests.

#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tusample::corpus::{Example, Slot};
use tusample::database::SenseDatabase;
use tusample::engine::{Disambiguator, EngineConfig};
use tusample::sampler::{SamplerConfig, SamplerState};
use tusample::synth::{generate_synthetic, SyntheticConfig};
use tusample::thesaurus::Thesaurus;

pub const TOL: f64 = 1e-9;

pub struct Instance {
    pub thesaurus: Arc<Thesaurus>,
    pub db: SenseDatabase,
    pub pool: Vec<Example>,
    pub held_out: Vec<Example>,
}

/// Depth-6, branching-3 tree with examples that fill random case subsets.
/// Each sense prefers its own top-level branch per case; some fillers are
/// drawn anywhere and a few are missing from the thesaurus.
pub fn random_instance(seed: u64, pool: usize, senses: usize, cases: usize) -> Instance {
    let tree = generate_synthetic(&SyntheticConfig {
        examples_per_sense: 1,
        ..SyntheticConfig::default()
    })
    .unwrap()
    .thesaurus;
    let words: Vec<String> = tree.words().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let case_names: Vec<String> = (0..cases).map(|c| format!("c{c}")).collect();
    let sense_names: Vec<String> = (0..senses).map(|s| format!("s{s}")).collect();
    let home: Vec<Vec<u8>> = (0..senses)
        .map(|_| (0..cases).map(|_| rng.gen_range(0..3u8)).collect())
        .collect();

    let draw = |rng: &mut ChaCha8Rng, id: String| {
        let s = rng.gen_range(0..senses);
        let mut chosen: Vec<usize> = (0..cases).filter(|_| rng.gen_bool(0.7)).collect();
        if chosen.is_empty() {
            chosen.push(rng.gen_range(0..cases));
        }
        let slots = chosen
            .into_iter()
            .map(|c| {
                let noun = if rng.gen_bool(0.05) {
                    format!("unknown{}", rng.gen_range(0..4))
                } else if rng.gen_bool(0.75) {
                    let prefix = (b'0' + home[s][c]) as char;
                    let pick: Vec<&String> = words.iter().filter(|w| w.as_bytes()[1] == prefix as u8).collect();
                    pick.choose(rng).unwrap().to_string()
                } else {
                    words.choose(rng).unwrap().clone()
                };
                Slot::new(case_names[c].clone(), noun)
            })
            .collect();
        Example::new(id, "v", slots).with_gold(sense_names[s].clone())
    };

    let mut db = SenseDatabase::new();
    for s in &sense_names {
        db.declare_sense("v", s);
    }
    for i in 0..senses.max(2) {
        let ex = draw(&mut rng, format!("seed{i:03}"));
        let sense = ex.gold_sense.clone().unwrap();
        db.commit(&ex, &sense).unwrap();
    }
    let pool: Vec<Example> = (0..pool).map(|i| draw(&mut rng, format!("p{i:04}"))).collect();
    let held_out: Vec<Example> = (0..pool.len() / 5 + 1)
        .map(|i| draw(&mut rng, format!("h{i:04}")))
        .collect();
    Instance {
        thesaurus: Arc::new(tree),
        db,
        pool,
        held_out,
    }
}

pub fn engine(t: &Arc<Thesaurus>) -> Disambiguator {
    Disambiguator::new(t.clone(), None, EngineConfig::default()).unwrap()
}

pub fn sampler(inst: &Instance, cfg: SamplerConfig, seed: u64) -> SamplerState {
    SamplerState::new(
        engine(&inst.thesaurus),
        cfg,
        inst.db.clone(),
        inst.pool.clone(),
        inst.held_out.clone(),
        seed,
    )
    .unwrap()
}

pub fn gold(ex: &Example) -> tusample::Result<String> {
    ex.gold_sense
        .clone()
        .ok_or_else(|| tusample::Error::MissingGold(ex.id.clone()))
}

/// Recomputes every cache of every unlabeled example from the database
/// through the public engine and lists the mismatches. Cached utilities are
/// compared against a fresh computation with `k` best senses.
pub fn batch_mismatches(st: &SamplerState, k: usize) -> Vec<String> {
    let engine = st.engine();
    let db = st.db();
    let mut out = Vec::new();
    for (verb, _) in db.verbs() {
        let fresh = engine.ccd_table(db, verb).unwrap();
        if st.ccd_table(verb) != Some(&fresh) {
            out.push(format!("ccd of {verb}"));
        }
    }
    for ex in st.examples() {
        let Some(view) = st.cache_view(&ex.id) else {
            continue;
        };
        let report = engine.disambiguate(db, ex).unwrap();
        for sv in &view.senses {
            let entry = db.sense(&ex.verb, &sv.sense).unwrap();
            for (case, sim, arg) in &sv.sims {
                let mut best = (0.0, None);
                for f in entry.fillers(case) {
                    let s = engine.noun_sim(&ex.slots.iter().find(|s| &s.case == case).unwrap().noun, f);
                    if best.1.is_none() || s > best.0 {
                        best = (s, Some(f.clone()));
                    }
                }
                if (best.0 - sim).abs() > TOL || best.1 != *arg {
                    out.push(format!("{} sim {}/{case}: {sim} {arg:?} vs {best:?}", ex.id, sv.sense));
                }
            }
            let expected = report.senses.iter().find(|s| s.sense == sv.sense).map(|s| s.score);
            let ok = match (expected, sv.score) {
                (Some(a), Some(b)) => (a - b).abs() <= TOL,
                (None, None) => report.filtered.contains(&sv.sense),
                _ => false,
            };
            if !ok {
                out.push(format!("{} score {}: {:?} vs {expected:?}", ex.id, sv.sense, sv.score));
            }
        }
        if view.chosen != report.chosen || view.tie_broken != report.tie_broken {
            out.push(format!("{} decision {} vs {}", ex.id, view.chosen, report.chosen));
        }
        if (view.certainty - report.certainty).abs() > TOL {
            out.push(format!("{} certainty {} vs {}", ex.id, view.certainty, report.certainty));
        }
        if let Some(cached) = st.cached_training_utility(&ex.id) {
            let fresh = st.training_utility(&ex.id, k).unwrap();
            if (cached - fresh).abs() > TOL {
                out.push(format!("{} tu {cached} vs {fresh}", ex.id));
            }
        }
    }
    out
}

/// Adds `x` to a copy of the database under `sense` and sums every pool
/// example's certainty change, with CCD held at its pre-commit values.
pub fn brute_force_tu(st: &SamplerState, x_id: &str, sense: &str, positive_only: bool) -> f64 {
    let engine = st.engine();
    let before = st.db();
    let x = st.example(x_id).unwrap();
    let mut after = before.clone();
    after.commit(x, sense).unwrap();
    let mut total = 0.0;
    for y_id in st.pool_ids() {
        if y_id == x_id {
            continue;
        }
        let y = st.example(y_id).unwrap();
        let ccd = engine.ccd_table(before, &y.verb).unwrap();
        let c0 = engine.disambiguate_with(before, y, &ccd).unwrap().certainty;
        let c1 = engine.disambiguate_with(&after, y, &ccd).unwrap().certainty;
        let d = c1 - c0;
        total += if positive_only { d.max(0.0) } else { d };
    }
    total
}
