//! Committee-based selection for the example-based model.
//!
//! A member keeps a random `member_fraction` of the stored fillers of every
//! `(sense, case)`, at least one when there are any. Pool examples the
//! members classify differently are candidates; one is drawn uniformly.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;

use super::nouns::NounId;
use super::{CaseId, Role, SamplerState};
use crate::database::SenseDatabase;
use crate::engine::{ccd_lookup, decide, Candidate, CcdTable};
use crate::error::Result;
use crate::par;

struct MemberVerb {
    fillers: Vec<BTreeMap<CaseId, Vec<NounId>>>,
    ccd: CcdTable,
}

struct Member {
    verbs: Vec<MemberVerb>,
}

impl SamplerState {
    fn draw_member(&mut self, fraction: f64) -> Result<Member> {
        let mut db = SenseDatabase::new();
        let mut verbs = Vec::with_capacity(self.verbs.len());
        for v in &self.verbs {
            let mut fillers = Vec::with_capacity(v.senses.len());
            for (s, frame) in v.fillers.iter().enumerate() {
                db.declare_sense(&v.name, &v.senses[s]).freq = v.freq[s];
                let mut kept = BTreeMap::new();
                for (&case, nouns) in frame {
                    let keep = if nouns.is_empty() {
                        Vec::new()
                    } else {
                        let m = ((nouns.len() as f64 * fraction).round() as usize).clamp(1, nouns.len());
                        let mut idx = sample(&mut self.rng, nouns.len(), m).into_vec();
                        idx.sort_unstable();
                        idx.into_iter().map(|i| nouns[i]).collect()
                    };
                    db.add_fillers(
                        &v.name,
                        &v.senses[s],
                        &self.case_names[case as usize],
                        keep.iter().map(|&n| self.nouns.name(n).to_string()),
                    );
                    kept.insert(case, keep);
                }
                fillers.push(kept);
            }
            verbs.push(MemberVerb {
                fillers,
                ccd: CcdTable::new(),
            });
        }
        for (mv, v) in verbs.iter_mut().zip(&self.verbs) {
            mv.ccd = self.engine.ccd_table(&db, &v.name)?;
        }
        Ok(Member { verbs })
    }

    fn member_classify(&self, member: &Member, y: usize) -> usize {
        let cfg = self.engine.config();
        let cy = &self.caches[y];
        let v = &self.verbs[cy.verb];
        let mv = &member.verbs[cy.verb];
        let names: Vec<&str> = cy
            .cases
            .iter()
            .map(|&c| self.case_names[c as usize].as_str())
            .collect();
        let weights: Vec<f64> = names.iter().map(|c| ccd_lookup(&mv.ccd, c)).collect();
        let sims: Vec<Vec<f64>> = mv
            .fillers
            .iter()
            .map(|frame| {
                cy.cases
                    .iter()
                    .zip(&cy.nouns)
                    .map(|(c, &n)| {
                        frame.get(c).map_or(0.0, |fs| {
                            fs.iter()
                                .filter(|&&f| !self.nouns.is_zero(n, f))
                                .map(|&f| self.nouns.sim(n, f))
                                .fold(0.0, f64::max)
                        })
                    })
                    .collect()
            })
            .collect();
        let candidates: Vec<Candidate<'_>> = (0..v.senses.len())
            .map(|s| Candidate {
                freq: v.freq[s],
                survives: cy.cases.iter().all(|c| mv.fillers[s].contains_key(c)),
                sims: &sims[s],
            })
            .collect();
        decide(&candidates, &names, &weights, cfg.decision, cfg.alpha).chosen
    }

    pub(crate) fn committee_pick(&mut self, size: usize, fraction: f64) -> Result<usize> {
        let members = (0..size)
            .map(|_| self.draw_member(fraction))
            .collect::<Result<Vec<_>>>()?;
        let pool: Vec<usize> = self.pool.iter().copied().collect();
        let disagree = par::map(self.cfg.execution, &pool, |&y| {
            debug_assert_eq!(self.caches[y].role, Role::Pool);
            let first = self.member_classify(&members[0], y);
            members[1..].iter().any(|m| self.member_classify(m, y) != first)
        });
        let candidates: Vec<usize> = pool
            .into_iter()
            .zip(disagree)
            .filter_map(|(y, d)| d.then_some(y))
            .collect();
        if candidates.is_empty() {
            return Ok(self.random_pool_member());
        }
        Ok(candidates[self.rng.gen_range(0..candidates.len())])
    }
}
