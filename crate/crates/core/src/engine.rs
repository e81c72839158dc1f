//! Nearest-neighbor verb sense disambiguation.
//!
//! Senses whose case frame cannot hold the input are dropped first. Each
//! remaining sense is scored by the CCD-weighted mean of per-case SIM, where
//! SIM is the best similarity between the input filler and the fillers
//! stored for that sense and case, and CCD measures how disjoint the senses'
//! generalized filler sets are for the case.
//!
//! Two decision rules are available. `Weighted` takes the argmax of the
//! weighted mean with CCD raised to `alpha`. `Lexicographic` is the limit of
//! very large `alpha`: cases are visited in descending CCD order and senses
//! that lose on SIM are dropped until one is left. Residual ties go to the
//! most frequent sense in the database, then to the lowest sense id.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Example;
use crate::database::SenseDatabase;
use crate::error::{Error, Result};
use crate::thesaurus::{generalize, thesaurus_sim, Thesaurus, SIM_MAX};
use crate::vsm::{cosine_sim, VectorTable};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityBackend {
    #[default]
    Thesaurus,
    Vsm,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionMode {
    Weighted,
    #[default]
    Lexicographic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub backend: SimilarityBackend,
    /// Exponent applied to CCD in weighted mode.
    pub alpha: f64,
    pub decision: DecisionMode,
    /// Mix between top score and top-two margin in certainty.
    pub lambda: f64,
    /// Thesaurus level used to generalize fillers for CCD.
    pub smoothing_level: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            backend: SimilarityBackend::Thesaurus,
            alpha: 1.0,
            decision: DecisionMode::Lexicographic,
            lambda: 0.5,
            smoothing_level: 5,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha {} must be finite and >= 0", self.alpha)));
        }
        check_lambda(self.lambda)?;
        if self.smoothing_level == 0 {
            return Err(Error::InvalidConfig("smoothing level must be >= 1".into()));
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("lambda {lambda} outside [0, 1]")))
    }
}

/// Noun-to-noun similarity normalized to `[0, 1]`.
#[derive(Debug, Clone)]
pub enum Similarity {
    Thesaurus(Arc<Thesaurus>),
    Vsm(Arc<VectorTable>),
}

impl Similarity {
    pub fn sim(&self, a: &str, b: &str) -> f64 {
        match self {
            Similarity::Thesaurus(t) => thesaurus_sim(t, a, b) as f64 / SIM_MAX as f64,
            Similarity::Vsm(vt) => cosine_sim(vt, a, b),
        }
    }
}

/// Base (alpha = 1) CCD per case of one verb.
pub type CcdTable = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseScore {
    pub sense: String,
    pub score: f64,
    pub case_sims: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub example_id: String,
    pub verb: String,
    /// Surviving senses, best first.
    pub senses: Vec<SenseScore>,
    /// Senses dropped because their frame lacks an input case.
    pub filtered: Vec<String>,
    pub ccd: BTreeMap<String, f64>,
    pub chosen: String,
    pub tie_broken: bool,
    pub certainty: f64,
}

impl ScoreReport {
    pub fn top_two(&self) -> (f64, f64) {
        let first = self.senses.first().map_or(0.0, |s| s.score);
        let second = self.senses.get(1).map_or(0.0, |s| s.score);
        (first, second)
    }
}

/// `lambda * s1 + (1 - lambda) * (s1 - s2)`.
pub fn certainty_of(score1: f64, score2: f64, lambda: f64) -> f64 {
    lambda * score1 + (1.0 - lambda) * (score1 - score2)
}

/// Interpretation certainty of a report. Single-sense reports use `Score_2 = 0`.
pub fn certainty(report: &ScoreReport, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let (s1, s2) = report.top_two();
    Ok(certainty_of(s1, s2, lambda))
}

/// CCD-weighted mean of SIMs; 0 when every weight is 0.
pub(crate) fn weighted_mean(sims: &[f64], weights: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (s, w) in sims.iter().zip(weights) {
        num += s * w;
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Certainty from unsorted per-sense scores; `None` entries are filtered senses.
pub(crate) fn certainty_from_scores(scores: &[Option<f64>], lambda: f64) -> f64 {
    let (mut s1, mut s2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for s in scores.iter().flatten() {
        if *s > s1 {
            s2 = s1;
            s1 = *s;
        } else if *s > s2 {
            s2 = *s;
        }
    }
    if s1 == f64::NEG_INFINITY {
        return 0.0;
    }
    if s2 == f64::NEG_INFINITY {
        s2 = 0.0;
    }
    certainty_of(s1, s2, lambda)
}

/// One sense as seen by the decision rule. Candidates must be in sense-id order.
pub(crate) struct Candidate<'a> {
    pub freq: usize,
    pub survives: bool,
    /// SIM per input case, aligned with the case slice passed to [`decide`].
    pub sims: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Decision {
    pub chosen: usize,
    pub tie_broken: bool,
}

/// Applies the decision rule. `cases` orders CCD ties; `ccd` is the base CCD
/// of each input case.
pub(crate) fn decide(
    candidates: &[Candidate<'_>],
    cases: &[&str],
    ccd: &[f64],
    mode: DecisionMode,
    alpha: f64,
) -> Decision {
    let mut alive: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].survives)
        .collect();
    match mode {
        DecisionMode::Lexicographic => {
            let mut order: Vec<usize> = (0..cases.len()).collect();
            order.sort_by(|&a, &b| ccd[b].total_cmp(&ccd[a]).then_with(|| cases[a].cmp(cases[b])));
            for c in order {
                if alive.len() <= 1 {
                    break;
                }
                let best = alive
                    .iter()
                    .map(|&i| candidates[i].sims[c])
                    .fold(f64::NEG_INFINITY, f64::max);
                alive.retain(|&i| candidates[i].sims[c] == best);
            }
        }
        DecisionMode::Weighted => {
            let weights: Vec<f64> = ccd.iter().map(|c| c.powf(alpha)).collect();
            let scores: Vec<f64> = alive
                .iter()
                .map(|&i| weighted_mean(candidates[i].sims, &weights))
                .collect();
            let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            alive = alive
                .into_iter()
                .zip(scores)
                .filter(|(_, s)| *s == best)
                .map(|(i, _)| i)
                .collect();
        }
    }
    if alive.len() == 1 {
        return Decision {
            chosen: alive[0],
            tie_broken: false,
        };
    }
    if alive.is_empty() {
        alive = (0..candidates.len()).collect();
    }
    // most frequent, then lowest id (candidates arrive in id order)
    let chosen = alive
        .iter()
        .copied()
        .max_by(|&a, &b| candidates[a].freq.cmp(&candidates[b].freq).then(b.cmp(&a)))
        .expect("verb has at least one sense");
    Decision {
        chosen,
        tie_broken: true,
    }
}

/// Averaged pairwise disjointness of generalized filler sets, raised to `alpha`.
pub fn compute_ccd(
    db: &SenseDatabase,
    thesaurus: &Thesaurus,
    verb: &str,
    case: &str,
    alpha: f64,
    smoothing_level: usize,
) -> Result<f64> {
    let entry = db
        .verb(verb)
        .ok_or_else(|| Error::UnknownVerb(verb.to_string()))?;
    let mut sets: Vec<BTreeSet<String>> = Vec::new();
    for sense in entry.senses.values().filter(|s| s.allows(case)) {
        let mut classes = BTreeSet::new();
        for noun in sense.fillers(case) {
            classes.extend(generalize(thesaurus, noun, smoothing_level)?);
        }
        sets.push(classes);
    }
    if sets.len() < 2 {
        return Ok(1.0);
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let size = sets[i].len() + sets[j].len();
            if size > 0 {
                let shared = sets[i].intersection(&sets[j]).count();
                total += (size - 2 * shared) as f64 / size as f64;
            }
            pairs += 1;
        }
    }
    Ok((total / pairs as f64).powf(alpha))
}

/// Disambiguator bound to its similarity resources and configuration.
#[derive(Debug, Clone)]
pub struct Disambiguator {
    thesaurus: Arc<Thesaurus>,
    similarity: Similarity,
    cfg: EngineConfig,
}

impl Disambiguator {
    /// The thesaurus always drives CCD smoothing; `vectors` is required for
    /// the VSM backend.
    pub fn new(
        thesaurus: Arc<Thesaurus>,
        vectors: Option<Arc<VectorTable>>,
        cfg: EngineConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let similarity = match cfg.backend {
            SimilarityBackend::Thesaurus => Similarity::Thesaurus(thesaurus.clone()),
            SimilarityBackend::Vsm => Similarity::Vsm(vectors.ok_or_else(|| {
                Error::InvalidConfig("vsm backend needs a vector table".into())
            })?),
        };
        Ok(Disambiguator {
            thesaurus,
            similarity,
            cfg,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn thesaurus(&self) -> &Arc<Thesaurus> {
        &self.thesaurus
    }

    pub fn similarity(&self) -> &Similarity {
        &self.similarity
    }

    pub fn noun_sim(&self, a: &str, b: &str) -> f64 {
        self.similarity.sim(a, b)
    }

    /// Best similarity between `noun` and the fillers of `sense` for `case`.
    pub fn case_sim(
        &self,
        db: &SenseDatabase,
        verb: &str,
        sense: &str,
        case: &str,
        noun: &str,
    ) -> Result<f64> {
        let entry = db.sense(verb, sense).ok_or_else(|| Error::InvalidSense {
            verb: verb.to_string(),
            sense: sense.to_string(),
        })?;
        if !entry.allows(case) {
            return Err(Error::CaseNotInFrame {
                verb: verb.to_string(),
                sense: sense.to_string(),
                case: case.to_string(),
            });
        }
        Ok(self.max_sim(entry.fillers(case), noun))
    }

    fn max_sim(&self, fillers: &[String], noun: &str) -> f64 {
        fillers
            .iter()
            .map(|e| self.noun_sim(noun, e))
            .fold(0.0, f64::max)
    }

    pub fn ccd(&self, db: &SenseDatabase, verb: &str, case: &str, alpha: f64) -> Result<f64> {
        compute_ccd(db, &self.thesaurus, verb, case, alpha, self.cfg.smoothing_level)
    }

    /// Base CCD for every case any sense of `verb` takes.
    pub fn ccd_table(&self, db: &SenseDatabase, verb: &str) -> Result<CcdTable> {
        let entry = db
            .verb(verb)
            .ok_or_else(|| Error::UnknownVerb(verb.to_string()))?;
        entry
            .cases()
            .into_iter()
            .map(|c| Ok((c.to_string(), self.ccd(db, verb, c, 1.0)?)))
            .collect()
    }

    /// Weighted score of `sense` for `x` with alpha = 1 CCDs.
    pub fn score(&self, db: &SenseDatabase, x: &Example, sense: &str) -> Result<f64> {
        let ccd = self.ccd_table(db, &x.verb)?;
        self.score_with(db, x, sense, &ccd, 1.0)
    }

    /// Weighted score over input cases in the sense's frame, with the given
    /// base CCDs raised to `alpha`.
    pub fn score_with(
        &self,
        db: &SenseDatabase,
        x: &Example,
        sense: &str,
        ccd: &CcdTable,
        alpha: f64,
    ) -> Result<f64> {
        let entry = db.sense(&x.verb, sense).ok_or_else(|| Error::InvalidSense {
            verb: x.verb.clone(),
            sense: sense.to_string(),
        })?;
        let (mut sims, mut weights) = (Vec::new(), Vec::new());
        for slot in x.slots.iter().filter(|s| entry.allows(&s.case)) {
            sims.push(self.max_sim(entry.fillers(&slot.case), &slot.noun));
            weights.push(ccd_lookup(ccd, &slot.case).powf(alpha));
        }
        Ok(weighted_mean(&sims, &weights))
    }

    pub fn disambiguate(&self, db: &SenseDatabase, x: &Example) -> Result<ScoreReport> {
        let ccd = self.ccd_table(db, &x.verb)?;
        self.disambiguate_with(db, x, &ccd)
    }

    /// Disambiguates against a fixed CCD table.
    pub fn disambiguate_with(
        &self,
        db: &SenseDatabase,
        x: &Example,
        ccd: &CcdTable,
    ) -> Result<ScoreReport> {
        let entry = db
            .verb(&x.verb)
            .ok_or_else(|| Error::UnknownVerb(x.verb.clone()))?;
        if entry.senses.is_empty() {
            return Err(Error::NoSenses(x.verb.clone()));
        }
        let cases: Vec<&str> = x.cases().collect();
        let ccd_in: Vec<f64> = cases.iter().map(|c| ccd_lookup(ccd, c)).collect();
        let ids: Vec<&String> = entry.senses.keys().collect();
        let mut sims: Vec<Vec<f64>> = Vec::with_capacity(ids.len());
        let mut survives = Vec::with_capacity(ids.len());
        for sense in entry.senses.values() {
            let ok = cases.iter().all(|c| sense.allows(c));
            survives.push(ok);
            sims.push(
                x.slots
                    .iter()
                    .map(|s| self.max_sim(sense.fillers(&s.case), &s.noun))
                    .collect(),
            );
        }
        let candidates: Vec<Candidate<'_>> = entry
            .senses
            .values()
            .zip(&sims)
            .zip(&survives)
            .map(|((sense, sims), &survives)| Candidate {
                freq: sense.freq,
                survives,
                sims,
            })
            .collect();
        let decision = decide(&candidates, &cases, &ccd_in, self.cfg.decision, self.cfg.alpha);

        let mut senses = Vec::new();
        let mut filtered = Vec::new();
        for (i, id) in ids.iter().enumerate() {
            if !survives[i] {
                filtered.push(id.to_string());
                continue;
            }
            senses.push(SenseScore {
                sense: id.to_string(),
                score: weighted_mean(&sims[i], &ccd_in),
                case_sims: cases
                    .iter()
                    .zip(&sims[i])
                    .map(|(c, s)| (c.to_string(), *s))
                    .collect(),
            });
        }
        senses.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.sense.cmp(&b.sense)));
        let mut report = ScoreReport {
            example_id: x.id.clone(),
            verb: x.verb.clone(),
            senses,
            filtered,
            ccd: cases
                .iter()
                .zip(&ccd_in)
                .map(|(c, v)| (c.to_string(), *v))
                .collect(),
            chosen: ids[decision.chosen].clone(),
            tie_broken: decision.tie_broken,
            certainty: 0.0,
        };
        report.certainty = certainty(&report, self.cfg.lambda)?;
        Ok(report)
    }
}

/// A case no sense takes has fewer than two subcategorizing senses: CCD 1.
pub(crate) fn ccd_lookup(ccd: &CcdTable, case: &str) -> f64 {
    ccd.get(case).copied().unwrap_or(1.0)
}
