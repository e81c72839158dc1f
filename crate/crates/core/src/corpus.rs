//! Examples, corpus files, co-occurrence tuples and fold splitting.
//!
//! A corpus is a line-delimited file with one JSON object per example:
//!
//! ```text
//! {"id":"e1","verb":"yameru","slots":[{"case":"ga","noun":"seito"}],"gold_sense":"s1"}
//! ```

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub case: String,
    pub noun: String,
}

impl Slot {
    pub fn new(case: impl Into<String>, noun: impl Into<String>) -> Self {
        Slot {
            case: case.into(),
            noun: noun.into(),
        }
    }
}

/// One simple sentence: a verb and its case-marked noun complements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub verb: String,
    pub slots: Vec<Slot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_sense: Option<String>,
}

impl Example {
    pub fn new(id: impl Into<String>, verb: impl Into<String>, slots: Vec<Slot>) -> Self {
        Example {
            id: id.into(),
            verb: verb.into(),
            slots,
            gold_sense: None,
        }
    }

    pub fn with_gold(mut self, sense: impl Into<String>) -> Self {
        self.gold_sense = Some(sense.into());
        self
    }

    pub fn filler(&self, case: &str) -> Option<&str> {
        self.slots
            .iter()
            .find(|s| s.case == case)
            .map(|s| s.noun.as_str())
    }

    pub fn cases(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().map(|s| s.case.as_str())
    }

    fn validate(&self) -> Result<()> {
        if self.slots.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "example {:?} has no slots",
                self.id
            )));
        }
        let mut seen = HashSet::new();
        for slot in &self.slots {
            if !seen.insert(slot.case.as_str()) {
                return Err(Error::DuplicateCase {
                    id: self.id.clone(),
                    case: slot.case.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Ordered examples with pairwise distinct ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExampleSet {
    examples: Vec<Example>,
}

impl ExampleSet {
    pub fn new(examples: Vec<Example>) -> Result<Self> {
        let mut seen = HashSet::new();
        for ex in &examples {
            ex.validate()?;
            if !seen.insert(ex.id.as_str()) {
                return Err(Error::DuplicateId(ex.id.clone()));
            }
        }
        Ok(ExampleSet { examples })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Example> {
        self.examples.iter()
    }

    pub fn as_slice(&self) -> &[Example] {
        &self.examples
    }

    pub fn into_vec(self) -> Vec<Example> {
        self.examples
    }

    pub fn get(&self, id: &str) -> Option<&Example> {
        self.examples.iter().find(|e| e.id == id)
    }

    /// Distinct verbs in first-appearance order.
    pub fn verbs(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for ex in &self.examples {
            if !out.contains(&ex.verb.as_str()) {
                out.push(&ex.verb);
            }
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for ex in &self.examples {
            let line = serde_json::to_string(ex).expect("examples always serialize");
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a ExampleSet {
    type Item = &'a Example;
    type IntoIter = std::slice::Iter<'a, Example>;

    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}

/// Parses a line-delimited corpus. Blank lines are skipped.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<ExampleSet> {
    let mut examples = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ex: Example =
            serde_json::from_str(&line).map_err(|e| Error::parse(lineno, e.to_string()))?;
        if ex.slots.is_empty() {
            return Err(Error::parse(lineno, format!("example {:?} has no slots", ex.id)));
        }
        if let Err(Error::DuplicateCase { id, case }) = ex.validate() {
            return Err(Error::parse(
                lineno,
                format!("example {id:?} fills case {case:?} more than once"),
            ));
        }
        if !seen.insert(ex.id.clone()) {
            return Err(Error::parse(
                lineno,
                format!("duplicate example id {:?}", ex.id),
            ));
        }
        examples.push(ex);
    }
    Ok(ExampleSet { examples })
}

/// Frequencies of `<noun, case, verb>` tuples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TupleCounts {
    counts: BTreeMap<(String, String, String), u64>,
}

impl TupleCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, noun: &str, case: &str, verb: &str, freq: u64) {
        if freq == 0 {
            return;
        }
        *self
            .counts
            .entry((noun.to_string(), case.to_string(), verb.to_string()))
            .or_insert(0) += freq;
    }

    pub fn get(&self, noun: &str, case: &str, verb: &str) -> u64 {
        self.counts
            .get(&(noun.to_string(), case.to_string(), verb.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// `(noun, case, verb, freq)` in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &str, u64)> {
        self.counts
            .iter()
            .map(|((n, c, v), f)| (n.as_str(), c.as_str(), v.as_str(), *f))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for (n, c, v, f) in self.iter() {
            writeln!(w, "{n}\t{c}\t{v}\t{f}")?;
        }
        Ok(())
    }
}

/// Reads `noun<TAB>case<TAB>verb<TAB>freq` lines.
pub fn parse_tuples<R: BufRead>(reader: R) -> Result<TupleCounts> {
    let mut out = TupleCounts::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(i + 1, "expected noun, case, verb, freq"));
        }
        let freq: u64 = fields[3]
            .trim()
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("bad frequency {:?}", fields[3])))?;
        if freq == 0 {
            return Err(Error::parse(i + 1, "frequency must be positive"));
        }
        out.add(fields[0], fields[1], fields[2], freq);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cooccurrence {
    pub counts: TupleCounts,
    /// Noun/case pairs with no following verb.
    pub skipped: usize,
}

/// Attaches every noun + case-marker pair to the nearest following verb.
///
/// Input tokens are `N:surface`, `C:marker` and `V:lemma`, separated by
/// whitespace; line breaks do not end a clause.
pub fn extract_cooccurrence<R: BufRead>(reader: R) -> Result<Cooccurrence> {
    let mut out = Cooccurrence::default();
    let mut noun: Option<String> = None;
    let mut pending: Vec<(String, String)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        for tok in line.split_whitespace() {
            let (tag, body) = tok
                .split_once(':')
                .filter(|(_, b)| !b.is_empty())
                .ok_or_else(|| Error::parse(i + 1, format!("malformed token {tok:?}")))?;
            match tag {
                "N" => noun = Some(body.to_string()),
                "C" => {
                    if let Some(n) = noun.take() {
                        pending.push((n, body.to_string()));
                    }
                }
                "V" => {
                    noun = None;
                    for (n, c) in pending.drain(..) {
                        out.counts.add(&n, &c, body, 1);
                    }
                }
                _ => return Err(Error::parse(i + 1, format!("unknown tag in {tok:?}"))),
            }
        }
    }
    out.skipped = pending.len();
    Ok(out)
}

/// Splits into `k` folds whose sizes differ by at most one.
pub fn split_folds(set: &ExampleSet, k: usize, seed: u64) -> Result<Vec<ExampleSet>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    if set.len() < k {
        return Err(Error::InvalidConfig(format!(
            "cannot split {} examples into {k} folds",
            set.len()
        )));
    }
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); k];
    for (pos, idx) in order.into_iter().enumerate() {
        folds[pos % k].push(set.examples[idx].clone());
    }
    Ok(folds
        .into_iter()
        .map(|examples| ExampleSet { examples })
        .collect())
}

/// Everything except fold `held_out`, in fold order.
pub fn merge_except(folds: &[ExampleSet], held_out: usize) -> ExampleSet {
    let examples = folds
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != held_out)
        .flat_map(|(_, f)| f.examples.iter().cloned())
        .collect();
    ExampleSet { examples }
}
