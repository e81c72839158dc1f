//! The supervised example store: verb → sense → case → filler nouns.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::corpus::Example;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseEntry {
    /// Allowed cases and their filler multisets, in insertion order per case.
    pub frame: BTreeMap<String, Vec<String>>,
    /// Supervised examples stored under this sense.
    pub freq: usize,
}

impl SenseEntry {
    pub fn allows(&self, case: &str) -> bool {
        self.frame.contains_key(case)
    }

    pub fn fillers(&self, case: &str) -> &[String] {
        self.frame.get(case).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbEntry {
    pub senses: BTreeMap<String, SenseEntry>,
}

impl VerbEntry {
    /// Every case subcategorized by at least one sense.
    pub fn cases(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .senses
            .values()
            .flat_map(|s| s.frame.keys().map(String::as_str))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseDatabase {
    verbs: BTreeMap<String, VerbEntry>,
}

impl SenseDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a database from gold-labeled examples.
    pub fn from_examples<'a, I>(examples: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Example>,
    {
        let mut db = SenseDatabase::new();
        for ex in examples {
            let sense = ex
                .gold_sense
                .as_deref()
                .ok_or_else(|| Error::MissingGold(ex.id.clone()))?;
            db.declare_sense(&ex.verb, sense);
            db.commit(ex, sense)?;
        }
        Ok(db)
    }

    /// Adds a sense with an empty frame if it is not there yet.
    pub fn declare_sense(&mut self, verb: &str, sense: &str) -> &mut SenseEntry {
        self.verbs
            .entry(verb.to_string())
            .or_default()
            .senses
            .entry(sense.to_string())
            .or_default()
    }

    pub fn add_fillers<I, S>(&mut self, verb: &str, sense: &str, case: &str, nouns: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.declare_sense(verb, sense)
            .frame
            .entry(case.to_string())
            .or_default()
            .extend(nouns.into_iter().map(Into::into));
    }

    /// Stores a supervised example under `sense`. A case the frame lacks is
    /// added to it, since the example attests it.
    pub fn commit(&mut self, ex: &Example, sense: &str) -> Result<()> {
        let entry = self
            .verbs
            .get_mut(&ex.verb)
            .ok_or_else(|| Error::UnknownVerb(ex.verb.clone()))?
            .senses
            .get_mut(sense)
            .ok_or_else(|| Error::InvalidSense {
                verb: ex.verb.clone(),
                sense: sense.to_string(),
            })?;
        for slot in &ex.slots {
            entry
                .frame
                .entry(slot.case.clone())
                .or_default()
                .push(slot.noun.clone());
        }
        entry.freq += 1;
        Ok(())
    }

    pub fn verb(&self, verb: &str) -> Option<&VerbEntry> {
        self.verbs.get(verb)
    }

    pub fn sense(&self, verb: &str, sense: &str) -> Option<&SenseEntry> {
        self.verbs.get(verb)?.senses.get(sense)
    }

    pub fn verbs(&self) -> impl Iterator<Item = (&str, &VerbEntry)> {
        self.verbs.iter().map(|(v, e)| (v.as_str(), e))
    }

    pub fn sense_ids(&self, verb: &str) -> Vec<&str> {
        self.verbs
            .get(verb)
            .map(|v| v.senses.keys().map(String::as_str).collect())
            .unwrap_or_default()
    }

    pub fn has_sense(&self, verb: &str, sense: &str) -> bool {
        self.sense(verb, sense).is_some()
    }

    /// Total stored fillers across all verbs.
    pub fn filler_count(&self) -> usize {
        self.verbs
            .values()
            .flat_map(|v| v.senses.values())
            .flat_map(|s| s.frame.values())
            .map(Vec::len)
            .sum()
    }

    pub fn example_count(&self) -> usize {
        self.verbs
            .values()
            .flat_map(|v| v.senses.values())
            .map(|s| s.freq)
            .sum()
    }
}

#[derive(Deserialize)]
struct SeedRecord {
    verb: String,
    sense: String,
    case: String,
    nouns: Vec<String>,
}

/// Reads `{"verb":..,"sense":..,"case":..,"nouns":[..]}` lines.
///
/// A case never listed for a sense is outside that sense's frame. Frequency
/// counters start at zero.
pub fn parse_seed_database<R: BufRead>(reader: R) -> Result<SenseDatabase> {
    let mut db = SenseDatabase::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SeedRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        if rec.nouns.is_empty() {
            return Err(Error::parse(
                i + 1,
                format!("{}/{} declares case {:?} with no nouns", rec.verb, rec.sense, rec.case),
            ));
        }
        db.add_fillers(&rec.verb, &rec.sense, &rec.case, rec.nouns);
    }
    Ok(db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Slot;

    const TORU: &str = r#"{"verb":"toru","sense":"s4","case":"wo","nouns":["kippu","heya","hikouki"]}
{"verb":"toru","sense":"s4","case":"ga","nouns":["kare","dantai"]}
{"verb":"toru","sense":"s3","case":"wo","nouns":["shinbun"]}
"#;

    #[test]
    fn seed_records() {
        let db = parse_seed_database(TORU.as_bytes()).unwrap();
        let s4 = db.sense("toru", "s4").unwrap();
        assert_eq!(s4.fillers("wo"), ["kippu", "heya", "hikouki"]);
        assert_eq!(s4.freq, 0);
        let s3 = db.sense("toru", "s3").unwrap();
        assert!(!s3.allows("ga"));
        assert!(s3.allows("wo"));
        assert_eq!(db.verb("toru").unwrap().cases(), ["ga", "wo"]);
    }

    #[test]
    fn seed_empty_stream_and_errors() {
        assert_eq!(parse_seed_database("".as_bytes()).unwrap(), SenseDatabase::new());
        let bad = r#"{"verb":"v","sense":"s","case":"ga","nouns":[]}"#;
        assert!(matches!(
            parse_seed_database(bad.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn commit_extends_frame_and_counts() {
        let mut db = parse_seed_database(TORU.as_bytes()).unwrap();
        let ex = Example::new("x", "toru", vec![Slot::new("ga", "kare"), Slot::new("wo", "zasshi")]);
        db.commit(&ex, "s3").unwrap();
        let s3 = db.sense("toru", "s3").unwrap();
        assert!(s3.allows("ga"));
        assert_eq!(s3.freq, 1);
        assert_eq!(s3.fillers("wo"), ["shinbun", "zasshi"]);
        assert!(matches!(db.commit(&ex, "s9"), Err(Error::InvalidSense { .. })));
    }

    #[test]
    fn from_examples_requires_gold() {
        let ex = Example::new("x", "v", vec![Slot::new("ga", "a")]);
        assert!(matches!(
            SenseDatabase::from_examples([&ex]),
            Err(Error::MissingGold(_))
        ));
        let ex = ex.with_gold("s1");
        let db = SenseDatabase::from_examples([&ex]).unwrap();
        assert_eq!(db.sense("v", "s1").unwrap().freq, 1);
        assert_eq!(db.example_count(), 1);
        assert_eq!(db.filler_count(), 1);
    }
}
