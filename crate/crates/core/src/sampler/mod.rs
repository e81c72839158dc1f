//! Pool-based selective sampling with incrementally maintained caches.
//!
//! Every unlabeled example, in the pool or held out, keeps the best
//! similarity between each of its fillers and the stored fillers of each
//! sense, together with the filler attaining it. A commit can only raise
//! those maxima, so one pass over the verb's examples brings them up to
//! date. Scores, decisions and certainties are then recomputed where their
//! inputs moved, and cached training utilities are dropped when any example
//! in their neighborhood changed.

mod committee;
mod nouns;
mod tu;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Example, ExampleSet};
use crate::database::SenseDatabase;
use crate::engine::{
    ccd_lookup, certainty_from_scores, decide, weighted_mean, Candidate, CcdTable, Disambiguator,
    ScoreReport,
};
use crate::error::{Error, Result};
use crate::par::Execution;

use nouns::{NounId, NounTable};
pub use tu::TuVariant;
use tu::TuEntry;

type CaseId = u32;

/// Sense id, frequency and frame copied out of the database.
type SenseSnapshot = (String, usize, Vec<(String, Vec<String>)>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum Strategy {
    Tu { k: usize },
    Uncertainty,
    Committee { size: usize, member_fraction: f64 },
    Random,
}

impl Strategy {
    pub const NAMES: [&'static str; 4] = ["tu", "uncertainty", "committee", "random"];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Tu { .. } => "tu",
            Strategy::Uncertainty => "uncertainty",
            Strategy::Committee { .. } => "committee",
            Strategy::Random => "random",
        }
    }

    pub fn tu(k: usize) -> Self {
        Strategy::Tu { k }
    }

    pub fn committee() -> Self {
        Strategy::Committee {
            size: 2,
            member_fraction: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Strategy::Tu { k: 0 } => Err(Error::InvalidConfig("k must be at least 1".into())),
            Strategy::Committee { size, .. } if size < 2 => Err(Error::InvalidConfig(format!(
                "committee needs at least 2 members, got {size}"
            ))),
            Strategy::Committee {
                member_fraction: f,
                ..
            } if !(f > 0.0 && f <= 1.0) => Err(Error::InvalidConfig(format!(
                "member fraction {f} outside (0, 1]"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a strategy name with default parameters.
impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tu" => Ok(Strategy::tu(1)),
            "uncertainty" => Ok(Strategy::Uncertainty),
            "committee" => Ok(Strategy::committee()),
            "random" => Ok(Strategy::Random),
            other => Err(Error::InvalidConfig(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub tu_variant: TuVariant,
    /// Recompute every cached utility after this many commits; 0 disables.
    pub refresh_every: usize,
    pub execution: Execution,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            tu_variant: TuVariant::Signed,
            refresh_every: 25,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Pool,
    Labeled,
    HeldOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub iteration: usize,
    pub strategy: String,
    pub example_id: String,
    pub assigned_sense: String,
    /// Against gold over the remaining pool; absent when nothing is scorable.
    pub pool_accuracy: Option<f64>,
    pub certainty_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held_out_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CommitStats {
    /// Noun similarities evaluated while updating the caches.
    pub sim_evaluations: u64,
    pub rescored: usize,
    pub changed: usize,
    pub tu_invalidated: usize,
}

/// Cached state of one unlabeled example, with sense and case ids resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CacheView {
    pub example_id: String,
    pub role: Role,
    pub senses: Vec<SenseView>,
    pub chosen: String,
    pub tie_broken: bool,
    pub certainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SenseView {
    pub sense: String,
    /// `None` when the frame cannot hold the example.
    pub score: Option<f64>,
    /// Per input case in slot order: best similarity and the filler attaining it.
    pub sims: Vec<(String, f64, Option<String>)>,
}

#[derive(Debug, Clone)]
struct Cache {
    role: Role,
    verb: usize,
    cases: Vec<CaseId>,
    nouns: Vec<NounId>,
    weights: Vec<f64>,
    /// `[sense * slots + slot]`
    sims: Vec<f64>,
    args: Vec<Option<NounId>>,
    scores: Vec<Option<f64>>,
    chosen: usize,
    tie_broken: bool,
    certainty: f64,
}

impl Cache {
    fn noun_for(&self, case: CaseId) -> Option<NounId> {
        self.cases
            .iter()
            .position(|&c| c == case)
            .map(|j| self.nouns[j])
    }
}

#[derive(Debug, Clone)]
struct VerbState {
    name: String,
    senses: Vec<String>,
    freq: Vec<usize>,
    /// Per sense: case → fillers in insertion order. Keys form the frame.
    fillers: Vec<BTreeMap<CaseId, Vec<NounId>>>,
    ccd: CcdTable,
    /// Examples of this verb in id order, whatever their role.
    members: Vec<usize>,
}

impl VerbState {
    fn allows(&self, sense: usize, case: CaseId) -> bool {
        self.fillers[sense].contains_key(&case)
    }
}

pub struct SamplerState {
    engine: Disambiguator,
    cfg: SamplerConfig,
    db: SenseDatabase,
    examples: Vec<Example>,
    index: HashMap<String, usize>,
    caches: Vec<Cache>,
    verbs: Vec<VerbState>,
    case_names: Vec<String>,
    case_ids: HashMap<String, CaseId>,
    nouns: NounTable,
    pool: BTreeSet<usize>,
    tu: Vec<Option<TuEntry>>,
    tu_k: usize,
    tu_sim_evaluations: u64,
    iteration: usize,
    commits_since_refresh: usize,
    initial: Vec<String>,
    history: Vec<HistoryRecord>,
    last_selected: Option<(usize, &'static str)>,
    rng: ChaCha8Rng,
}

impl SamplerState {
    /// Starts from `db` with the given pool and held-out set. Senses named as
    /// gold labels are declared if the database lacks them.
    pub fn new(
        engine: Disambiguator,
        cfg: SamplerConfig,
        mut db: SenseDatabase,
        pool: Vec<Example>,
        held_out: Vec<Example>,
        seed: u64,
    ) -> Result<Self> {
        let pool_ids: BTreeSet<String> = pool.iter().map(|e| e.id.clone()).collect();
        let mut all = ExampleSet::new(pool.into_iter().chain(held_out).collect())?.into_vec();
        all.sort_by(|a, b| a.id.cmp(&b.id));
        for ex in &all {
            if let Some(gold) = &ex.gold_sense {
                db.declare_sense(&ex.verb, gold);
            } else if db.verb(&ex.verb).is_none() {
                return Err(Error::UnknownVerb(ex.verb.clone()));
            }
        }

        let mut state = SamplerState {
            nouns: NounTable::new(engine.similarity()),
            engine,
            cfg,
            db,
            index: all.iter().enumerate().map(|(i, e)| (e.id.clone(), i)).collect(),
            examples: Vec::new(),
            caches: Vec::new(),
            verbs: Vec::new(),
            case_names: Vec::new(),
            case_ids: HashMap::new(),
            pool: BTreeSet::new(),
            tu: Vec::new(),
            tu_k: 1,
            tu_sim_evaluations: 0,
            iteration: 0,
            commits_since_refresh: 0,
            initial: Vec::new(),
            history: Vec::new(),
            last_selected: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };

        let mut verb_ids = HashMap::new();
        let db_verbs: Vec<(String, Vec<SenseSnapshot>)> = state
            .db
            .verbs()
            .map(|(v, entry)| {
                let senses = entry
                    .senses
                    .iter()
                    .map(|(s, e)| {
                        let frame = e.frame.iter().map(|(c, n)| (c.clone(), n.clone())).collect();
                        (s.clone(), e.freq, frame)
                    })
                    .collect();
                (v.to_string(), senses)
            })
            .collect();
        for (verb, senses) in db_verbs {
            let mut vs = VerbState {
                name: verb.clone(),
                senses: Vec::new(),
                freq: Vec::new(),
                fillers: Vec::new(),
                ccd: state.engine.ccd_table(&state.db, &verb)?,
                members: Vec::new(),
            };
            for (sense, freq, frame) in senses {
                let mut fillers = BTreeMap::new();
                for (case, nouns) in frame {
                    let c = state.intern_case(&case);
                    let ids = nouns.iter().map(|n| state.nouns.intern(n)).collect();
                    fillers.insert(c, ids);
                }
                vs.senses.push(sense);
                vs.freq.push(freq);
                vs.fillers.push(fillers);
            }
            verb_ids.insert(verb, state.verbs.len());
            state.verbs.push(vs);
        }

        for (i, ex) in all.iter().enumerate() {
            let verb = verb_ids[&ex.verb];
            state.verbs[verb].members.push(i);
            let role = if pool_ids.contains(&ex.id) {
                state.pool.insert(i);
                Role::Pool
            } else {
                Role::HeldOut
            };
            let cases: Vec<CaseId> = ex.slots.iter().map(|s| state.intern_case(&s.case)).collect();
            let nouns: Vec<NounId> = ex.slots.iter().map(|s| state.nouns.intern(&s.noun)).collect();
            let senses = state.verbs[verb].senses.len();
            let n = cases.len();
            let mut cache = Cache {
                role,
                verb,
                cases,
                nouns,
                weights: Vec::new(),
                sims: vec![0.0; senses * n],
                args: vec![None; senses * n],
                scores: vec![None; senses],
                chosen: 0,
                tie_broken: false,
                certainty: 0.0,
            };
            for s in 0..senses {
                for j in 0..n {
                    let Some(fillers) = state.verbs[verb].fillers[s].get(&cache.cases[j]) else {
                        continue;
                    };
                    let (mut best, mut arg) = (0.0, None);
                    for &f in fillers {
                        let sim = state.nouns.sim(cache.nouns[j], f);
                        if sim > best || arg.is_none() {
                            best = sim;
                            arg = Some(f);
                        }
                    }
                    cache.sims[s * n + j] = best;
                    cache.args[s * n + j] = arg;
                }
            }
            state.caches.push(cache);
        }
        state.examples = all;
        state.tu = vec![None; state.examples.len()];
        for i in 0..state.examples.len() {
            state.rescore(i);
        }
        Ok(state)
    }

    /// Empty database; one random pool example per gold sense is labeled
    /// with its gold sense before sampling starts.
    pub fn from_scratch(
        engine: Disambiguator,
        cfg: SamplerConfig,
        pool: Vec<Example>,
        held_out: Vec<Example>,
        seed: u64,
    ) -> Result<Self> {
        let mut state = SamplerState::new(engine, cfg, SenseDatabase::new(), pool, held_out, seed)?;
        let mut by_sense: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
        for &i in &state.pool {
            let ex = &state.examples[i];
            let gold = ex
                .gold_sense
                .as_deref()
                .ok_or_else(|| Error::MissingGold(ex.id.clone()))?;
            by_sense.entry((&ex.verb, gold)).or_default().push(i);
        }
        let picks: Vec<(usize, String)> = by_sense
            .into_iter()
            .map(|((_, sense), members)| {
                (members[state.rng.gen_range(0..members.len())], sense.to_string())
            })
            .collect();
        for (i, sense) in picks {
            let id = state.examples[i].id.clone();
            state.apply_commit(i, &sense)?;
            state.initial.push(id);
        }
        Ok(state)
    }

    fn intern_case(&mut self, case: &str) -> CaseId {
        if let Some(&id) = self.case_ids.get(case) {
            return id;
        }
        let id = self.case_names.len() as CaseId;
        self.case_ids.insert(case.to_string(), id);
        self.case_names.push(case.to_string());
        id
    }

    fn position(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::NotInPool(id.to_string()))
    }

    fn pool_position(&self, id: &str) -> Result<usize> {
        let i = self.position(id)?;
        if self.caches[i].role == Role::Pool {
            Ok(i)
        } else {
            Err(Error::NotInPool(id.to_string()))
        }
    }

    fn sense_index(&self, i: usize, sense: &str) -> Result<usize> {
        let v = &self.verbs[self.caches[i].verb];
        v.senses
            .binary_search_by(|s| s.as_str().cmp(sense))
            .map_err(|_| Error::InvalidSense {
                verb: v.name.clone(),
                sense: sense.to_string(),
            })
    }

    /// Recomputes weights, scores, decision and certainty from the sim cache.
    /// Returns whether the scores moved.
    fn rescore(&mut self, i: usize) -> bool {
        let lambda = self.engine.config().lambda;
        let (decision_mode, alpha) = (self.engine.config().decision, self.engine.config().alpha);
        let cache = &self.caches[i];
        let v = &self.verbs[cache.verb];
        let n = cache.cases.len();
        let names: Vec<&str> = cache
            .cases
            .iter()
            .map(|&c| self.case_names[c as usize].as_str())
            .collect();
        let weights: Vec<f64> = names.iter().map(|c| ccd_lookup(&v.ccd, c)).collect();
        let survives: Vec<bool> = (0..v.senses.len())
            .map(|s| cache.cases.iter().all(|&c| v.allows(s, c)))
            .collect();
        let scores: Vec<Option<f64>> = (0..v.senses.len())
            .map(|s| survives[s].then(|| weighted_mean(&cache.sims[s * n..(s + 1) * n], &weights)))
            .collect();
        let candidates: Vec<Candidate<'_>> = (0..v.senses.len())
            .map(|s| Candidate {
                freq: v.freq[s],
                survives: survives[s],
                sims: &cache.sims[s * n..(s + 1) * n],
            })
            .collect();
        let decision = decide(&candidates, &names, &weights, decision_mode, alpha);
        let certainty = certainty_from_scores(&scores, lambda);
        let cache = &mut self.caches[i];
        let moved = cache.scores != scores;
        cache.weights = weights;
        cache.scores = scores;
        cache.chosen = decision.chosen;
        cache.tie_broken = decision.tie_broken;
        cache.certainty = certainty;
        moved
    }

    /// Labels a pool example, recording it in the history.
    pub fn commit_label(&mut self, id: &str, sense: &str) -> Result<CommitStats> {
        let i = self.pool_position(id)?;
        self.sense_index(i, sense)?;
        let strategy = match self.last_selected.take() {
            Some((j, name)) if j == i => name,
            _ => "manual",
        };
        let stats = self.apply_commit(i, sense)?;
        self.iteration += 1;
        self.commits_since_refresh += 1;
        if self.cfg.refresh_every > 0 && self.commits_since_refresh >= self.cfg.refresh_every {
            self.commits_since_refresh = 0;
            self.tu.iter_mut().for_each(|e| *e = None);
        }
        self.history.push(HistoryRecord {
            iteration: self.iteration,
            strategy: strategy.to_string(),
            example_id: id.to_string(),
            assigned_sense: sense.to_string(),
            pool_accuracy: self.pool_accuracy(),
            certainty_mean: self.certainty_mean(),
            held_out_accuracy: self.held_out_accuracy(),
        });
        Ok(stats)
    }

    fn apply_commit(&mut self, x: usize, sense: &str) -> Result<CommitStats> {
        let s = self.sense_index(x, sense)?;
        if self.caches[x].role != Role::Pool {
            return Err(Error::NotInPool(self.examples[x].id.clone()));
        }
        self.db.commit(&self.examples[x], sense)?;
        let mut stats = CommitStats::default();

        let vi = self.caches[x].verb;
        let x_slots: Vec<(CaseId, NounId)> = {
            let c = &self.caches[x];
            c.cases.iter().copied().zip(c.nouns.iter().copied()).collect()
        };
        let mut frame_changed = false;
        for &(case, noun) in &x_slots {
            let fillers = self.verbs[vi].fillers[s].entry(case).or_insert_with(|| {
                frame_changed = true;
                Vec::new()
            });
            fillers.push(noun);
        }
        self.verbs[vi].freq[s] += 1;
        self.caches[x].role = Role::Labeled;
        self.pool.remove(&x);
        self.tu[x] = None;

        // raise the best similarity of every unlabeled example of the verb
        let members = self.verbs[vi].members.clone();
        let mut sims_changed = Vec::new();
        for &y in &members {
            let cy = &mut self.caches[y];
            if cy.role == Role::Labeled {
                continue;
            }
            let n = cy.cases.len();
            let mut touched = false;
            for j in 0..n {
                let Some(&(_, xn)) = x_slots.iter().find(|(c, _)| *c == cy.cases[j]) else {
                    continue;
                };
                let sim = if self.nouns.is_zero(cy.nouns[j], xn) {
                    0.0
                } else {
                    stats.sim_evaluations += 1;
                    self.nouns.sim(cy.nouns[j], xn)
                };
                let k = s * n + j;
                if sim > cy.sims[k] || cy.args[k].is_none() {
                    touched |= sim != cy.sims[k];
                    cy.sims[k] = sim;
                    cy.args[k] = Some(xn);
                }
            }
            if touched {
                sims_changed.push(y);
            }
        }

        let ccd = self.engine.ccd_table(&self.db, &self.verbs[vi].name)?;
        let ccd_changed = ccd != self.verbs[vi].ccd;
        self.verbs[vi].ccd = ccd;

        let to_rescore: Vec<usize> = if ccd_changed || frame_changed {
            members
                .iter()
                .copied()
                .filter(|&y| self.caches[y].role != Role::Labeled)
                .collect()
        } else {
            // tie fallbacks read sense frequencies, which just moved
            let mut ys = sims_changed.clone();
            ys.extend(members.iter().copied().filter(|&y| {
                self.caches[y].role != Role::Labeled && self.caches[y].tie_broken
            }));
            ys.sort_unstable();
            ys.dedup();
            ys
        };
        let mut changed: BTreeSet<usize> = sims_changed.into_iter().collect();
        for &y in &to_rescore {
            if self.rescore(y) {
                changed.insert(y);
            }
        }
        stats.rescored = to_rescore.len();
        stats.changed = changed.len();
        changed.insert(x);

        let invalidate_all = ccd_changed || frame_changed;
        for &y in &members {
            let stale = match &self.tu[y] {
                None => false,
                Some(_) if invalidate_all || changed.contains(&y) => true,
                Some(entry) => entry.neighborhood.iter().any(|n| changed.contains(n)),
            };
            if stale {
                self.tu[y] = None;
                stats.tu_invalidated += 1;
            }
        }
        Ok(stats)
    }

    /// Picks the next example to label. Ties go to the lowest example id.
    pub fn select(&mut self, strategy: &Strategy) -> Result<String> {
        strategy.validate()?;
        if self.pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        let i = match *strategy {
            Strategy::Tu { k } => {
                self.refresh_tu(k);
                let mut best: Option<(usize, f64)> = None;
                for &i in &self.pool {
                    let v = self.tu[i].as_ref().expect("refreshed").value;
                    if best.is_none_or(|(_, b)| v > b) {
                        best = Some((i, v));
                    }
                }
                best.expect("pool is not empty").0
            }
            Strategy::Uncertainty => {
                let mut best: Option<(usize, f64)> = None;
                for &i in &self.pool {
                    let c = self.caches[i].certainty;
                    if best.is_none_or(|(_, b)| c < b) {
                        best = Some((i, c));
                    }
                }
                best.expect("pool is not empty").0
            }
            Strategy::Random => self.random_pool_member(),
            Strategy::Committee {
                size,
                member_fraction,
            } => self.committee_pick(size, member_fraction)?,
        };
        self.last_selected = Some((i, strategy.name()));
        Ok(self.examples[i].id.clone())
    }

    fn random_pool_member(&mut self) -> usize {
        let nth = self.rng.gen_range(0..self.pool.len());
        *self.pool.iter().nth(nth).expect("index within pool")
    }

    /// Runs select, oracle, commit until `budget` labels are spent or the
    /// pool is empty. A rejected label leaves the state unchanged.
    pub fn run_loop<F>(&mut self, strategy: &Strategy, mut oracle: F, budget: usize) -> Result<&[HistoryRecord]>
    where
        F: FnMut(&Example) -> Result<String>,
    {
        let start = self.history.len();
        for _ in 0..budget {
            if self.pool.is_empty() {
                break;
            }
            let id = self.select(strategy)?;
            let sense = oracle(&self.examples[self.index[&id]])?;
            self.commit_label(&id, &sense)?;
        }
        Ok(&self.history[start..])
    }

    pub fn engine(&self) -> &Disambiguator {
        &self.engine
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn db(&self) -> &SenseDatabase {
        &self.db
    }

    pub fn history(&self) -> &[HistoryRecord] {
        &self.history
    }

    /// Examples labeled during initialization, before any sampling.
    pub fn initial_labels(&self) -> &[String] {
        &self.initial
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn pool_len(&self) -> usize {
        self.pool.len()
    }

    pub fn pool_ids(&self) -> Vec<&str> {
        self.pool.iter().map(|&i| self.examples[i].id.as_str()).collect()
    }

    pub fn held_out_len(&self) -> usize {
        self.caches.iter().filter(|c| c.role == Role::HeldOut).count()
    }

    /// Every example the sampler knows about, in id order.
    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn example(&self, id: &str) -> Option<&Example> {
        self.index.get(id).map(|&i| &self.examples[i])
    }

    pub fn role(&self, id: &str) -> Option<Role> {
        self.index.get(id).map(|&i| self.caches[i].role)
    }

    pub fn senses(&self, verb: &str) -> Vec<&str> {
        self.db.sense_ids(verb)
    }

    pub fn ccd_table(&self, verb: &str) -> Option<&CcdTable> {
        self.verbs.iter().find(|v| v.name == verb).map(|v| &v.ccd)
    }

    /// Fresh report for any example against the current database.
    pub fn report(&self, id: &str) -> Result<ScoreReport> {
        let i = self.position(id)?;
        let ex = &self.examples[i];
        self.engine
            .disambiguate_with(&self.db, ex, &self.verbs[self.caches[i].verb].ccd)
    }

    /// Cached decision for an unlabeled example.
    pub fn decision(&self, id: &str) -> Option<&str> {
        let &i = self.index.get(id)?;
        let c = &self.caches[i];
        (c.role != Role::Labeled).then(|| self.verbs[c.verb].senses[c.chosen].as_str())
    }

    pub fn certainty(&self, id: &str) -> Option<f64> {
        let &i = self.index.get(id)?;
        let c = &self.caches[i];
        (c.role != Role::Labeled).then_some(c.certainty)
    }

    pub fn cache_view(&self, id: &str) -> Option<CacheView> {
        let &i = self.index.get(id)?;
        let c = &self.caches[i];
        if c.role == Role::Labeled {
            return None;
        }
        let v = &self.verbs[c.verb];
        let n = c.cases.len();
        let senses = v
            .senses
            .iter()
            .enumerate()
            .map(|(s, name)| SenseView {
                sense: name.clone(),
                score: c.scores[s],
                sims: (0..n)
                    .map(|j| {
                        (
                            self.case_names[c.cases[j] as usize].clone(),
                            c.sims[s * n + j],
                            c.args[s * n + j].map(|a| self.nouns.name(a).to_string()),
                        )
                    })
                    .collect(),
            })
            .collect();
        Some(CacheView {
            example_id: self.examples[i].id.clone(),
            role: c.role,
            senses,
            chosen: v.senses[c.chosen].clone(),
            tie_broken: c.tie_broken,
            certainty: c.certainty,
        })
    }

    fn accuracy_over(&self, role: Role) -> Option<f64> {
        let (mut correct, mut total) = (0usize, 0usize);
        for (ex, c) in self.examples.iter().zip(&self.caches) {
            if c.role != role {
                continue;
            }
            if let Some(gold) = &ex.gold_sense {
                total += 1;
                correct += usize::from(self.verbs[c.verb].senses[c.chosen] == *gold);
            }
        }
        (total > 0).then(|| correct as f64 / total as f64)
    }

    pub fn pool_accuracy(&self) -> Option<f64> {
        self.accuracy_over(Role::Pool)
    }

    pub fn held_out_accuracy(&self) -> Option<f64> {
        self.accuracy_over(Role::HeldOut)
    }

    pub fn certainty_mean(&self) -> Option<f64> {
        if self.pool.is_empty() {
            return None;
        }
        let sum: f64 = self.pool.iter().map(|&i| self.caches[i].certainty).sum();
        Some(sum / self.pool.len() as f64)
    }

    /// Similarity evaluations spent computing training utilities so far.
    pub fn tu_sim_evaluations(&self) -> u64 {
        self.tu_sim_evaluations
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Slot;
    use crate::engine::EngineConfig;
    use crate::thesaurus::Thesaurus;
    use std::sync::Arc;

    fn engine() -> Disambiguator {
        let t = Thesaurus::from_entries([
            ("111111", "a1"),
            ("111112", "a2"),
            ("111211", "a3"),
            ("222222", "b1"),
            ("222223", "b2"),
            ("222311", "b3"),
        ])
        .unwrap();
        Disambiguator::new(Arc::new(t), None, EngineConfig::default()).unwrap()
    }

    fn ex(id: &str, noun: &str, gold: &str) -> Example {
        Example::new(id, "v", vec![Slot::new("wo", noun)]).with_gold(gold)
    }

    fn state() -> SamplerState {
        let mut db = SenseDatabase::new();
        db.add_fillers("v", "s1", "wo", ["a1"]);
        db.add_fillers("v", "s2", "wo", ["b1"]);
        let pool = vec![ex("p1", "a2", "s1"), ex("p2", "b3", "s2"), ex("p3", "a3", "s1")];
        SamplerState::new(engine(), SamplerConfig::default(), db, pool, vec![ex("h1", "b2", "s2")], 3)
            .unwrap()
    }

    #[test]
    fn strategy_names_roundtrip() {
        for name in Strategy::NAMES {
            assert_eq!(name.parse::<Strategy>().unwrap().name(), name);
        }
        assert!("bogus".parse::<Strategy>().is_err());
        assert!(Strategy::tu(0).validate().is_err());
        let json = serde_json::to_string(&Strategy::committee()).unwrap();
        assert_eq!(serde_json::from_str::<Strategy>(&json).unwrap(), Strategy::committee());
    }

    #[test]
    fn initial_caches() {
        let st = state();
        let view = st.cache_view("p1").unwrap();
        assert_eq!(view.senses[0].sims[0], ("wo".into(), 10.0 / 11.0, Some("a1".into())));
        assert_eq!(view.senses[1].sims[0].1, 0.0);
        assert_eq!(view.chosen, "s1");
        assert_eq!(st.decision("h1"), Some("s2"));
        assert_eq!(st.pool_accuracy(), Some(1.0));
    }

    #[test]
    fn commit_moves_and_raises() {
        let mut st = state();
        let before = st.cache_view("p3").unwrap().senses[0].sims[0].1;
        let stats = st.commit_label("p1", "s1").unwrap();
        assert_eq!(st.pool_len(), 2);
        assert_eq!(st.role("p1"), Some(Role::Labeled));
        assert!(st.cache_view("p1").is_none());
        assert!(stats.sim_evaluations <= 3);
        let after = st.cache_view("p3").unwrap().senses[0].sims[0].1;
        assert!(after >= before);
        assert_eq!(st.db().sense("v", "s1").unwrap().freq, 1);
        assert_eq!(st.history().len(), 1);
        assert_eq!(st.history()[0].strategy, "manual");
        assert!(matches!(st.commit_label("p1", "s1"), Err(Error::NotInPool(_))));
        assert!(matches!(st.commit_label("p2", "s9"), Err(Error::InvalidSense { .. })));
        assert_eq!(st.pool_len(), 2);
    }

    #[test]
    fn exhausting_the_pool() {
        let mut st = state();
        let gold = |e: &Example| Ok(e.gold_sense.clone().unwrap());
        let n = st.run_loop(&Strategy::tu(1), gold, 10).unwrap().len();
        assert_eq!(n, 3);
        assert!(matches!(st.select(&Strategy::Random), Err(Error::EmptyPool)));
        assert!(st.history().iter().all(|h| h.strategy == "tu"));
    }

    #[test]
    fn single_member_pool() {
        for strategy in [Strategy::tu(1), Strategy::Uncertainty, Strategy::committee(), Strategy::Random] {
            let mut st = state();
            st.commit_label("p1", "s1").unwrap();
            st.commit_label("p2", "s2").unwrap();
            assert_eq!(st.select(&strategy).unwrap(), "p3");
        }
    }

    #[test]
    fn scratch_labels_one_per_sense() {
        let pool = vec![ex("p1", "a2", "s1"), ex("p2", "b3", "s2"), ex("p3", "a3", "s1")];
        let st = SamplerState::from_scratch(engine(), SamplerConfig::default(), pool, vec![], 5).unwrap();
        assert_eq!(st.initial_labels().len(), 2);
        assert_eq!(st.pool_len(), 1);
        assert!(st.history().is_empty());
        assert_eq!(st.db().example_count(), 2);
    }
}
