//! Comparison classifiers: most frequent sense, thesaurus-class selectional
//! rules, and Naive Bayes over generalized filler classes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Example;
use crate::database::SenseDatabase;
use crate::error::{Error, Result};
use crate::thesaurus::{ancestor_classes, generalize, Thesaurus};

/// Sense with the largest stored-example count; ties go to the lowest id.
pub fn most_frequent_sense(db: &SenseDatabase, verb: &str) -> Result<String> {
    let entry = db
        .verb(verb)
        .ok_or_else(|| Error::UnknownVerb(verb.to_string()))?;
    entry
        .senses
        .iter()
        .rev()
        .max_by_key(|(_, s)| s.freq)
        .map(|(id, _)| id.clone())
        .ok_or_else(|| Error::NoSenses(verb.to_string()))
}

/// `p_sc * ln(p_sc / p_c)`; zero when the class never occurs with the sense.
pub fn association(p_sense_case: f64, p_case: f64) -> f64 {
    if p_sense_case <= 0.0 {
        0.0
    } else {
        p_sense_case * (p_sense_case / p_case).ln()
    }
}

/// Accepted class → association degree.
pub type ClassRules = BTreeMap<String, f64>;

/// Accepted classes with their association degree, keyed verb → sense → case.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub theta: f64,
    pub rules: BTreeMap<String, BTreeMap<String, BTreeMap<String, ClassRules>>>,
}

impl RuleSet {
    pub fn len(&self) -> usize {
        self.rules
            .values()
            .flat_map(|s| s.values())
            .flat_map(|c| c.values())
            .map(BTreeMap::len)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn classes(&self, verb: &str, sense: &str, case: &str) -> Option<&BTreeMap<String, f64>> {
        self.rules.get(verb)?.get(sense)?.get(case)
    }

    /// Every rule of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &RuleSet) -> bool {
        self.rules.iter().all(|(v, senses)| {
            senses.iter().all(|(s, cases)| {
                cases.iter().all(|(c, classes)| {
                    classes
                        .keys()
                        .all(|r| other.classes(v, s, c).is_some_and(|o| o.contains_key(r)))
                })
            })
        })
    }
}

fn class_counts<'a>(t: &Thesaurus, nouns: impl Iterator<Item = &'a String>) -> (BTreeMap<String, f64>, f64) {
    let mut counts = BTreeMap::new();
    let mut total = 0.0;
    for noun in nouns {
        total += 1.0;
        for class in ancestor_classes(t, noun) {
            *counts.entry(class).or_insert(0.0) += 1.0;
        }
    }
    (counts, total)
}

/// Keeps every thesaurus class whose association with a `(sense, case)` is at
/// least `theta`. Probabilities are token fractions of fillers dominated by
/// the class.
pub fn induce_rules(db: &SenseDatabase, t: &Thesaurus, theta: f64) -> RuleSet {
    let mut out = RuleSet {
        theta,
        rules: BTreeMap::new(),
    };
    for (verb, entry) in db.verbs() {
        for case in entry.cases() {
            let (case_counts, case_total) = class_counts(
                t,
                entry.senses.values().flat_map(|s| s.fillers(case).iter()),
            );
            if case_total == 0.0 {
                continue;
            }
            for (sense_id, sense) in &entry.senses {
                let (counts, total) = class_counts(t, sense.fillers(case).iter());
                if total == 0.0 {
                    continue;
                }
                for (class, n) in counts {
                    let a = association(n / total, case_counts[&class] / case_total);
                    if a >= theta {
                        out.rules
                            .entry(verb.to_string())
                            .or_default()
                            .entry(sense_id.clone())
                            .or_default()
                            .entry(case.to_string())
                            .or_default()
                            .insert(class, a);
                    }
                }
            }
        }
    }
    out
}

/// Senses whose rules admit every input filler; anything but a single
/// survivor falls back to the most frequent sense.
pub fn rule_based_disambiguate(
    rules: &RuleSet,
    db: &SenseDatabase,
    t: &Thesaurus,
    x: &Example,
) -> Result<String> {
    let entry = db
        .verb(&x.verb)
        .ok_or_else(|| Error::UnknownVerb(x.verb.clone()))?;
    let survivors: Vec<&String> = entry
        .senses
        .keys()
        .filter(|sense| {
            x.slots.iter().all(|slot| {
                rules
                    .classes(&x.verb, sense, &slot.case)
                    .is_some_and(|accepted| {
                        ancestor_classes(t, &slot.noun)
                            .iter()
                            .any(|c| accepted.contains_key(c))
                    })
            })
        })
        .collect();
    match survivors.as_slice() {
        [one] => Ok((*one).clone()),
        _ => most_frequent_sense(db, &x.verb),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct NbTable {
    counts: BTreeMap<String, f64>,
    total: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct NbVerb {
    senses: Vec<String>,
    freq: Vec<usize>,
    priors: Vec<f64>,
    /// Classes observed for each case across all senses.
    vocab: BTreeMap<String, BTreeSet<String>>,
    /// Per sense, per case.
    tables: Vec<BTreeMap<String, NbTable>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    level: usize,
    pseudo: f64,
    verbs: BTreeMap<String, NbVerb>,
}

/// Trains priors from sense frequencies (uniform when none are recorded) and
/// additively smoothed class likelihoods per `(sense, case)`. Each table
/// covers the classes seen for the case under any sense plus one bucket for
/// unseen classes.
pub fn nb_train(db: &SenseDatabase, t: &Thesaurus, level: usize, pseudo: f64) -> Result<NbModel> {
    if !(pseudo > 0.0 && pseudo.is_finite()) {
        return Err(Error::InvalidConfig(format!("pseudo-count {pseudo} must be positive")));
    }
    let mut verbs = BTreeMap::new();
    for (verb, entry) in db.verbs() {
        let senses: Vec<String> = entry.senses.keys().cloned().collect();
        let freq: Vec<usize> = entry.senses.values().map(|s| s.freq).collect();
        let total: usize = freq.iter().sum();
        let priors = if total == 0 {
            vec![1.0 / senses.len() as f64; senses.len()]
        } else {
            freq.iter().map(|&f| f as f64 / total as f64).collect()
        };
        let mut vocab: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut tables = Vec::new();
        for sense in entry.senses.values() {
            let mut per_case = BTreeMap::new();
            for (case, nouns) in &sense.frame {
                let mut table = NbTable::default();
                for noun in nouns {
                    let classes = generalize(t, noun, level)?;
                    let share = 1.0 / classes.len() as f64;
                    for class in classes {
                        vocab.entry(case.clone()).or_default().insert(class.clone());
                        *table.counts.entry(class).or_insert(0.0) += share;
                    }
                    table.total += 1.0;
                }
                per_case.insert(case.clone(), table);
            }
            tables.push(per_case);
        }
        verbs.insert(
            verb.to_string(),
            NbVerb {
                senses,
                freq,
                priors,
                vocab,
                tables,
            },
        );
    }
    Ok(NbModel {
        level,
        pseudo,
        verbs,
    })
}

impl NbModel {
    /// `P(class | sense, case)`; classes outside the case vocabulary share the unseen bucket.
    fn likelihood(&self, v: &NbVerb, sense: usize, case: &str, class: &str) -> f64 {
        let vocab = v.vocab.get(case).map_or(0, BTreeSet::len) as f64;
        let (count, total) = match v.tables[sense].get(case) {
            Some(t) => (t.counts.get(class).copied().unwrap_or(0.0), t.total),
            None => (0.0, 0.0),
        };
        (count + self.pseudo) / (total + self.pseudo * (vocab + 1.0))
    }

    /// Sum of the smoothed table over the case vocabulary and the unseen bucket.
    pub fn table_mass(&self, verb: &str, sense: &str, case: &str) -> Option<f64> {
        let v = self.verbs.get(verb)?;
        let si = v.senses.iter().position(|s| s == sense)?;
        let vocab = v.vocab.get(case).cloned().unwrap_or_default();
        let seen: f64 = vocab.iter().map(|r| self.likelihood(v, si, case, r)).sum();
        Some(seen + self.likelihood(v, si, case, "\u{0}unseen"))
    }

    pub fn prior(&self, verb: &str, sense: &str) -> Option<f64> {
        let v = self.verbs.get(verb)?;
        let si = v.senses.iter().position(|s| s == sense)?;
        Some(v.priors[si])
    }

    fn log_scores(&self, x: &Example) -> Result<(&NbVerb, Vec<f64>)> {
        let v = self
            .verbs
            .get(&x.verb)
            .ok_or_else(|| Error::UnknownVerb(x.verb.clone()))?;
        if v.senses.is_empty() {
            return Err(Error::NoSenses(x.verb.clone()));
        }
        Ok((v, v.priors.iter().map(|p| p.ln()).collect()))
    }

    /// Log of `P(s) * prod_c P(class(n_c) | s, c)` per sense, in sense-id order.
    pub fn log_posterior(&self, t: &Thesaurus, x: &Example) -> Result<Vec<(String, f64)>> {
        let (v, mut scores) = self.log_scores(x)?;
        for slot in &x.slots {
            let classes = generalize(t, &slot.noun, self.level)?;
            for (si, score) in scores.iter_mut().enumerate() {
                let p = classes
                    .iter()
                    .map(|r| self.likelihood(v, si, &slot.case, r))
                    .sum::<f64>()
                    / classes.len() as f64;
                *score += p.ln();
            }
        }
        Ok(v.senses.iter().cloned().zip(scores).collect())
    }

    /// Posterior normalized over the verb's senses.
    pub fn posterior(&self, t: &Thesaurus, x: &Example) -> Result<Vec<(String, f64)>> {
        let logs = self.log_posterior(t, x)?;
        let max = logs.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logs.iter().map(|(_, l)| (l - max).exp()).sum();
        Ok(logs
            .into_iter()
            .map(|(s, l)| (s, (l - max).exp() / z))
            .collect())
    }

    /// Argmax of the posterior; ties go to the most frequent, then lowest-id sense.
    pub fn disambiguate(&self, t: &Thesaurus, x: &Example) -> Result<String> {
        let logs = self.log_posterior(t, x)?;
        let v = &self.verbs[&x.verb];
        let best = logs.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
        let chosen = (0..logs.len())
            .filter(|&i| logs[i].1 == best)
            .max_by(|&a, &b| v.freq[a].cmp(&v.freq[b]).then(b.cmp(&a)))
            .expect("at least one sense");
        Ok(logs[chosen].0.clone())
    }
}
