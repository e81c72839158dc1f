//! Synthetic corpora over a complete coded tree.
//!
//! Each `(verb, sense, case)` owns `concepts_per_sense` disjoint subtrees
//! rooted at `concept_level`. An example of a sense picks one of its concept
//! indices and draws every case filler from a random leaf of the matching
//! subtree; with probability `confusion` a filler comes from another sense's
//! subtree instead.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Example, ExampleSet, Slot};
use crate::error::{Error, Result};
use crate::thesaurus::Thesaurus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub branching: usize,
    /// Levels below the root.
    pub depth: usize,
    pub num_verbs: usize,
    pub num_senses: usize,
    pub cases: Vec<String>,
    pub examples_per_sense: usize,
    pub concept_level: usize,
    pub concepts_per_sense: usize,
    pub confusion: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            branching: 3,
            depth: 6,
            num_verbs: 1,
            num_senses: 2,
            cases: vec!["ga".into(), "wo".into()],
            examples_per_sense: 20,
            concept_level: 2,
            concepts_per_sense: 1,
            confusion: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(2..=10).contains(&self.branching) {
            return bad(format!("branching {} outside 2..=10", self.branching));
        }
        if self.depth == 0 {
            return bad("depth must be positive".into());
        }
        if self.num_verbs == 0 || self.num_senses < 2 {
            return bad("need at least one verb and two senses".into());
        }
        if self.cases.is_empty() {
            return bad("need at least one case".into());
        }
        let mut sorted = self.cases.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.cases.len() {
            return bad("cases must be distinct".into());
        }
        if self.concept_level == 0 || self.concept_level > self.depth {
            return bad(format!(
                "concept level {} outside 1..={}",
                self.concept_level, self.depth
            ));
        }
        if self.concepts_per_sense == 0 {
            return bad("concepts_per_sense must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.confusion) {
            return bad(format!("confusion {} outside [0, 1]", self.confusion));
        }
        let available = (self.branching as u64).checked_pow(self.concept_level as u32);
        let needed = (self.num_senses * self.concepts_per_sense) as u64;
        if available.is_some_and(|a| a < needed) {
            return bad(format!(
                "{} subtrees at level {} cannot hold {needed} sense concepts",
                available.unwrap(),
                self.concept_level
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub thesaurus: Thesaurus,
    pub examples: ExampleSet,
    /// Concept subtree codes for each `(verb, sense, case)`.
    pub concepts: BTreeMap<(String, String, String), Vec<String>>,
}

pub fn noun_for_code(code: &str) -> String {
    format!("n{code}")
}

fn all_codes(branching: usize, len: usize) -> Vec<String> {
    let mut codes = vec![String::new()];
    for _ in 0..len {
        codes = codes
            .into_iter()
            .flat_map(|c| (0..branching).map(move |d| format!("{c}{d}")))
            .collect();
    }
    codes
}

fn random_leaf(rng: &mut ChaCha8Rng, concept: &str, cfg: &SyntheticConfig) -> String {
    let mut code = concept.to_string();
    for _ in concept.len()..cfg.depth {
        code.push(char::from(b'0' + rng.gen_range(0..cfg.branching) as u8));
    }
    noun_for_code(&code)
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let leaves = all_codes(cfg.branching, cfg.depth);
    let thesaurus = Thesaurus::from_entries(leaves.iter().map(|c| (c.clone(), noun_for_code(c))))?;
    let nodes = all_codes(cfg.branching, cfg.concept_level);
    let senses: Vec<String> = (1..=cfg.num_senses).map(|j| format!("s{j}")).collect();

    let mut concepts = BTreeMap::new();
    let mut examples = Vec::new();
    for v in 1..=cfg.num_verbs {
        let verb = format!("v{v}");
        // concept[case][sense][k]
        let mut table: Vec<Vec<Vec<String>>> = Vec::new();
        for case in &cfg.cases {
            let mut pick = nodes.clone();
            pick.shuffle(&mut rng);
            let per_sense: Vec<Vec<String>> = pick
                .chunks(cfg.concepts_per_sense)
                .take(cfg.num_senses)
                .map(<[String]>::to_vec)
                .collect();
            for (sense, codes) in senses.iter().zip(&per_sense) {
                concepts.insert((verb.clone(), sense.clone(), case.clone()), codes.clone());
            }
            table.push(per_sense);
        }

        let mut drafts = Vec::new();
        for (j, sense) in senses.iter().enumerate() {
            for _ in 0..cfg.examples_per_sense {
                let k = rng.gen_range(0..cfg.concepts_per_sense);
                let mut slots = Vec::with_capacity(cfg.cases.len());
                for (ci, case) in cfg.cases.iter().enumerate() {
                    let concept = if rng.gen::<f64>() < cfg.confusion {
                        let mut other = rng.gen_range(0..cfg.num_senses - 1);
                        if other >= j {
                            other += 1;
                        }
                        let k2 = rng.gen_range(0..cfg.concepts_per_sense);
                        &table[ci][other][k2]
                    } else {
                        &table[ci][j][k]
                    };
                    slots.push(Slot::new(case.clone(), random_leaf(&mut rng, concept, cfg)));
                }
                drafts.push((sense.clone(), slots));
            }
        }
        drafts.shuffle(&mut rng);
        for (i, (sense, slots)) in drafts.into_iter().enumerate() {
            examples.push(Example::new(format!("{verb}-{i:04}"), verb.clone(), slots).with_gold(sense));
        }
    }
    Ok(SyntheticCorpus {
        thesaurus,
        examples: ExampleSet::new(examples)?,
        concepts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code_of(noun: &str) -> &str {
        &noun[1..]
    }

    fn inside(corpus: &SyntheticCorpus, ex: &Example, sense: &str, case: &str, noun: &str) -> bool {
        corpus.concepts[&(ex.verb.clone(), sense.to_string(), case.to_string())]
            .iter()
            .any(|c| code_of(noun).starts_with(c.as_str()))
    }

    #[test]
    fn clean_corpus_stays_in_concepts() {
        let cfg = SyntheticConfig {
            num_senses: 3,
            concepts_per_sense: 2,
            examples_per_sense: 15,
            ..Default::default()
        };
        let corpus = generate_synthetic(&cfg).unwrap();
        assert_eq!(corpus.thesaurus.len(), 3usize.pow(6));
        assert_eq!(corpus.thesaurus.depth(), 6);
        assert_eq!(corpus.examples.len(), 45);
        for ex in &corpus.examples {
            let gold = ex.gold_sense.as_deref().unwrap();
            for s in &ex.slots {
                assert!(inside(&corpus, ex, gold, &s.case, &s.noun));
                assert!(corpus.thesaurus.contains(&s.noun));
            }
        }
    }

    #[test]
    fn full_confusion_uses_other_sense() {
        let cfg = SyntheticConfig {
            confusion: 1.0,
            ..Default::default()
        };
        let corpus = generate_synthetic(&cfg).unwrap();
        for ex in &corpus.examples {
            let other = if ex.gold_sense.as_deref() == Some("s1") { "s2" } else { "s1" };
            for s in &ex.slots {
                assert!(inside(&corpus, ex, other, &s.case, &s.noun));
            }
        }
    }

    #[test]
    fn deterministic_bytes() {
        let cfg = SyntheticConfig {
            confusion: 0.3,
            seed: 11,
            ..Default::default()
        };
        let dump = |c: &SyntheticCorpus| {
            let mut buf = Vec::new();
            c.examples.write_to(&mut buf).unwrap();
            c.thesaurus.write_to(&mut buf).unwrap();
            buf
        };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(dump(&a), dump(&b));
        let c = generate_synthetic(&SyntheticConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(dump(&a), dump(&c));
    }

    #[test]
    fn too_few_subtrees() {
        let cfg = SyntheticConfig {
            branching: 2,
            concept_level: 1,
            num_senses: 3,
            ..Default::default()
        };
        assert!(matches!(generate_synthetic(&cfg), Err(Error::InvalidConfig(_))));
        let cfg = SyntheticConfig {
            confusion: 1.5,
            ..Default::default()
        };
        assert!(generate_synthetic(&cfg).is_err());
    }
}
