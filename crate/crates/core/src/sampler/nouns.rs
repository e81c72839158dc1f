//! Interned nouns with their similarity inputs resolved once.

use std::collections::HashMap;
use std::sync::Arc;

use crate::engine::Similarity;
use crate::thesaurus::{sim_for_path, Thesaurus, SIM_MAX};
use crate::vsm::{cosine_parts, VectorTable};

pub(crate) type NounId = u32;

#[derive(Debug, Clone)]
enum Repr {
    Codes { codes: Vec<Box<[u8]>>, roots: u64 },
    Vector { weights: Vec<(u32, f64)>, norm: f64 },
    Unknown,
}

#[derive(Debug, Clone)]
enum Source {
    Thesaurus { t: Arc<Thesaurus>, prune: bool },
    Vsm(Arc<VectorTable>),
}

#[derive(Debug, Clone)]
pub(crate) struct NounTable {
    ids: HashMap<String, NounId>,
    names: Vec<String>,
    reprs: Vec<Repr>,
    source: Source,
}

impl NounTable {
    pub fn new(similarity: &Similarity) -> Self {
        let source = match similarity {
            // disjoint top-level branches only score 0 once the full path falls off the table
            Similarity::Thesaurus(t) => Source::Thesaurus {
                prune: sim_for_path(2 * t.depth() as u32) == 0,
                t: t.clone(),
            },
            Similarity::Vsm(vt) => Source::Vsm(vt.clone()),
        };
        NounTable {
            ids: HashMap::new(),
            names: Vec::new(),
            reprs: Vec::new(),
            source,
        }
    }

    pub fn intern(&mut self, noun: &str) -> NounId {
        if let Some(&id) = self.ids.get(noun) {
            return id;
        }
        let repr = match &self.source {
            Source::Thesaurus { t, .. } => {
                let codes: Vec<Box<[u8]>> =
                    t.codes(noun).iter().map(|c| c.as_bytes().into()).collect();
                if codes.is_empty() {
                    Repr::Unknown
                } else {
                    let roots = codes
                        .iter()
                        .filter_map(|c| c.first())
                        .fold(0u64, |m, b| m | 1 << (b % 64));
                    Repr::Codes { codes, roots }
                }
            }
            Source::Vsm(vt) => {
                let norm = vt.norm(noun);
                if norm == 0.0 {
                    Repr::Unknown
                } else {
                    Repr::Vector {
                        weights: vt.vector(noun).unwrap_or(&[]).to_vec(),
                        norm,
                    }
                }
            }
        };
        let id = self.names.len() as NounId;
        self.ids.insert(noun.to_string(), id);
        self.names.push(noun.to_string());
        self.reprs.push(repr);
        id
    }

    pub fn name(&self, id: NounId) -> &str {
        &self.names[id as usize]
    }

    /// True when the pair is known to score 0 without evaluating it.
    pub fn is_zero(&self, a: NounId, b: NounId) -> bool {
        match (&self.reprs[a as usize], &self.reprs[b as usize]) {
            (Repr::Unknown, _) | (_, Repr::Unknown) => true,
            (Repr::Codes { roots: ra, .. }, Repr::Codes { roots: rb, .. }) => {
                matches!(self.source, Source::Thesaurus { prune: true, .. }) && ra & rb == 0
            }
            _ => false,
        }
    }

    /// Same value as the engine's similarity for the two nouns.
    pub fn sim(&self, a: NounId, b: NounId) -> f64 {
        match (&self.reprs[a as usize], &self.reprs[b as usize]) {
            (Repr::Codes { codes: ca, .. }, Repr::Codes { codes: cb, .. }) => {
                let depth = ca[0].len();
                let path = ca
                    .iter()
                    .flat_map(|x| {
                        cb.iter().map(move |y| {
                            let lcp = x.iter().zip(y.iter()).take_while(|(p, q)| p == q).count();
                            2 * (depth - lcp) as u32
                        })
                    })
                    .min()
                    .expect("known nouns have codes");
                sim_for_path(path) as f64 / SIM_MAX as f64
            }
            (Repr::Vector { weights: wa, norm: na }, Repr::Vector { weights: wb, norm: nb }) => {
                if a == b {
                    1.0
                } else {
                    cosine_parts(wa, *na, wb, *nb)
                }
            }
            _ => 0.0,
        }
    }
}
