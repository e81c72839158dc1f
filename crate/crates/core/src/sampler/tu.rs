//! Training utility: the certainty gained over the pool by labeling one example.
//!
//! For a candidate `x` and sense `s`, the affected examples are the pool
//! examples of the same verb whose sense-`s` score would change: some filler
//! is strictly closer to `x`'s filler for that case than to any stored
//! `s` filler, or `x` would extend the frame of `s` far enough for the
//! example to survive filtering. CCD stays at its current values.

use serde::{Deserialize, Serialize};

use super::{Role, SamplerState};
use crate::engine::{certainty_from_scores, weighted_mean};
use crate::error::Result;
use crate::par;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuVariant {
    /// Sum of signed certainty changes.
    #[default]
    Signed,
    /// Only certainty increases count.
    PositiveOnly,
}

#[derive(Debug, Clone)]
pub(crate) struct TuEntry {
    pub value: f64,
    /// Union of the affected sets of the senses averaged over.
    pub neighborhood: Vec<usize>,
}

struct SenseUtility {
    value: f64,
    affected: Vec<usize>,
    sim_evaluations: u64,
}

impl SamplerState {
    fn sense_utility(&self, x: usize, s: usize) -> SenseUtility {
        let lambda = self.engine.config().lambda;
        let cx = &self.caches[x];
        let v = &self.verbs[cx.verb];
        let mut out = SenseUtility {
            value: 0.0,
            affected: Vec::new(),
            sim_evaluations: 0,
        };
        for &y in &v.members {
            let cy = &self.caches[y];
            if y == x || cy.role != Role::Pool {
                continue;
            }
            let n = cy.cases.len();
            let current = &cy.sims[s * n..(s + 1) * n];
            let mut raised: Option<Vec<f64>> = None;
            for j in 0..n {
                let Some(xn) = cx.noun_for(cy.cases[j]) else {
                    continue;
                };
                if self.nouns.is_zero(cy.nouns[j], xn) {
                    continue;
                }
                out.sim_evaluations += 1;
                let sim = self.nouns.sim(cy.nouns[j], xn);
                if sim > current[j] {
                    raised.get_or_insert_with(|| current.to_vec())[j] = sim;
                }
            }
            let survived = cy.scores[s].is_some();
            let survives = survived
                || cy
                    .cases
                    .iter()
                    .all(|&c| v.allows(s, c) || cx.cases.contains(&c));
            if raised.is_none() && survived == survives {
                continue;
            }
            out.affected.push(y);
            let mut scores = cy.scores.clone();
            scores[s] = survives
                .then(|| weighted_mean(raised.as_deref().unwrap_or(current), &cy.weights));
            let delta = certainty_from_scores(&scores, lambda) - cy.certainty;
            out.value += match self.cfg.tu_variant {
                TuVariant::Signed => delta,
                TuVariant::PositiveOnly => delta.max(0.0),
            };
        }
        out
    }

    /// The `k` best senses by current score, widened to every sense tied
    /// with the k-th. Filtered senses rank below any score.
    fn top_senses(&self, x: usize, k: usize) -> Vec<usize> {
        let key = |s: usize| self.caches[x].scores[s].unwrap_or(f64::NEG_INFINITY);
        let mut order: Vec<usize> = (0..self.caches[x].scores.len()).collect();
        order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
        let cut = key(order[k.min(order.len()) - 1]);
        order.retain(|&s| key(s) >= cut);
        order.sort_unstable();
        order
    }

    fn tu_entry(&self, x: usize, k: usize) -> (TuEntry, u64) {
        let senses = self.top_senses(x, k);
        let mut total = 0.0;
        let mut neighborhood = Vec::new();
        let mut evals = 0;
        for &s in &senses {
            let u = self.sense_utility(x, s);
            total += u.value;
            evals += u.sim_evaluations;
            neighborhood.extend(u.affected);
        }
        neighborhood.sort_unstable();
        neighborhood.dedup();
        let entry = TuEntry {
            value: total / senses.len() as f64,
            neighborhood,
        };
        (entry, evals)
    }

    /// Fills in every missing utility of the pool, in parallel when enabled.
    pub(crate) fn refresh_tu(&mut self, k: usize) {
        if k != self.tu_k {
            self.tu_k = k;
            self.tu.iter_mut().for_each(|e| *e = None);
        }
        let stale: Vec<usize> = self
            .pool
            .iter()
            .copied()
            .filter(|&i| self.tu[i].is_none())
            .collect();
        let fresh = par::map(self.cfg.execution, &stale, |&i| self.tu_entry(i, k));
        for (i, (entry, evals)) in stale.into_iter().zip(fresh) {
            self.tu_sim_evaluations += evals;
            self.tu[i] = Some(entry);
        }
    }

    /// Utility cached by the last tu selection, if still valid.
    pub fn cached_training_utility(&self, id: &str) -> Option<f64> {
        let &i = self.index.get(id)?;
        self.tu[i].as_ref().map(|e| e.value)
    }

    /// Pool examples whose sense-`sense` score changes if `id` is labeled `sense`.
    pub fn affected_set(&self, id: &str, sense: &str) -> Result<Vec<String>> {
        let x = self.pool_position(id)?;
        let s = self.sense_index(x, sense)?;
        Ok(self
            .sense_utility(x, s)
            .affected
            .into_iter()
            .map(|y| self.examples[y].id.clone())
            .collect())
    }

    /// Total certainty change over the pool if `id` were labeled `sense`.
    pub fn training_utility_for_sense(&self, id: &str, sense: &str) -> Result<f64> {
        let x = self.pool_position(id)?;
        let s = self.sense_index(x, sense)?;
        Ok(self.sense_utility(x, s).value)
    }

    /// Mean utility over the `k` best senses of `id`, ties included.
    pub fn training_utility(&self, id: &str, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(crate::Error::InvalidConfig("k must be at least 1".into()));
        }
        let x = self.pool_position(id)?;
        Ok(self.tu_entry(x, k).0.value)
    }

    /// Senses averaged over by [`training_utility`](Self::training_utility).
    pub fn utility_senses(&self, id: &str, k: usize) -> Result<Vec<String>> {
        let x = self.pool_position(id)?;
        let v = &self.verbs[self.caches[x].verb];
        Ok(self
            .top_senses(x, k.max(1))
            .into_iter()
            .map(|s| v.senses[s].clone())
            .collect())
    }
}
