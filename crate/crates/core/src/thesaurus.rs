//! Fixed-depth coded-tree thesaurus.
//!
//! Every word sits at one or more leaves; a leaf code is a string of
//! `depth` single-character digits and each prefix of it names an ancestor
//! node. Similarity between two words is a step function of the length of
//! the tree path joining their leaves.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Similarity for each even path length `0, 2, .., 12`.
pub const SIM_TABLE: [u32; 7] = [11, 10, 9, 8, 7, 5, 0];

/// Largest value in [`SIM_TABLE`]; divides raw similarity into `[0, 1]`.
pub const SIM_MAX: u32 = 11;

/// Prefix used for the generalization class of a word missing from the thesaurus.
pub const UNKNOWN_CLASS_PREFIX: &str = "UNK:";

/// Table lookup by path length. Lengths past the table score 0.
pub fn sim_for_path(len: u32) -> u32 {
    debug_assert!(len.is_multiple_of(2), "leaf-to-leaf paths are even");
    SIM_TABLE.get((len / 2) as usize).copied().unwrap_or(0)
}

#[derive(Debug, Clone, Default)]
pub struct Thesaurus {
    depth: usize,
    words: Vec<String>,
    index: HashMap<String, Vec<String>>,
}

impl Thesaurus {
    /// Builds from `(code, word)` pairs. All codes must have the same length.
    pub fn from_entries<I, C, W>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (C, W)>,
        C: Into<String>,
        W: Into<String>,
    {
        let mut t = Thesaurus::default();
        for (i, (code, word)) in entries.into_iter().enumerate() {
            t.insert(i + 1, code.into(), word.into())?;
        }
        Ok(t)
    }

    fn insert(&mut self, line: usize, code: String, word: String) -> Result<()> {
        if code.is_empty() || !code.bytes().all(|b| b.is_ascii_alphanumeric()) {
            return Err(Error::parse(line, format!("bad class code {code:?}")));
        }
        if word.is_empty() {
            return Err(Error::parse(line, "empty word"));
        }
        if self.depth == 0 {
            self.depth = code.len();
        } else if code.len() != self.depth {
            return Err(Error::parse(
                line,
                format!(
                    "code {code:?} has length {}, expected {}",
                    code.len(),
                    self.depth
                ),
            ));
        }
        let codes = self.index.entry(word.clone()).or_default();
        if codes.is_empty() {
            self.words.push(word);
        }
        if !codes.contains(&code) {
            codes.push(code);
        }
        Ok(())
    }

    /// Levels below the root; leaves live at this depth.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn codes(&self, word: &str) -> &[String] {
        self.index.get(word).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Words in load order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for word in &self.words {
            for code in &self.index[word] {
                writeln!(w, "{code}\t{word}")?;
            }
        }
        Ok(())
    }
}

/// Reads `code<TAB>word` lines.
pub fn load_thesaurus<R: BufRead>(reader: R) -> Result<Thesaurus> {
    let mut t = Thesaurus::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (code, word) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(i + 1, "expected code<TAB>word"))?;
        t.insert(i + 1, code.trim().to_string(), word.trim().to_string())?;
    }
    Ok(t)
}

fn common_prefix(a: &str, b: &str) -> usize {
    a.bytes().zip(b.bytes()).take_while(|(x, y)| x == y).count()
}

/// Shortest leaf-to-leaf path over all code pairs, or `None` for unknown words.
pub fn path_length(t: &Thesaurus, n1: &str, n2: &str) -> Option<u32> {
    let (c1, c2) = (t.index.get(n1)?, t.index.get(n2)?);
    c1.iter()
        .flat_map(|a| c2.iter().map(move |b| 2 * (t.depth - common_prefix(a, b)) as u32))
        .min()
}

/// Raw similarity in `{0, 5, 7, 8, 9, 10, 11}`; unknown words score 0.
pub fn thesaurus_sim(t: &Thesaurus, n1: &str, n2: &str) -> u32 {
    path_length(t, n1, n2).map_or(0, sim_for_path)
}

/// Class codes of length `level` dominating `noun`.
pub fn generalize(t: &Thesaurus, noun: &str, level: usize) -> Result<BTreeSet<String>> {
    // an empty thesaurus generalizes every noun to its own sentinel class
    if level == 0 || (t.depth > 0 && level > t.depth) {
        return Err(Error::InvalidConfig(format!(
            "generalization level {level} outside 1..={}",
            t.depth
        )));
    }
    Ok(match t.index.get(noun) {
        Some(codes) => codes.iter().map(|c| c[..level].to_string()).collect(),
        None => BTreeSet::from([format!("{UNKNOWN_CLASS_PREFIX}{noun}")]),
    })
}

/// Every ancestor class of `noun` at levels `1..=depth`.
pub fn ancestor_classes(t: &Thesaurus, noun: &str) -> BTreeSet<String> {
    match t.index.get(noun) {
        Some(codes) => codes
            .iter()
            .flat_map(|c| (1..=c.len()).map(move |l| c[..l].to_string()))
            .collect(),
        None => BTreeSet::from([format!("{UNKNOWN_CLASS_PREFIX}{noun}")]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Thesaurus {
        Thesaurus::from_entries([
            ("123456", "kippu"),
            ("123457", "heya"),
            ("123411", "hikouki"),
            ("923456", "kare"),
            ("123456", "ken"),
            ("923451", "ken"),
        ])
        .unwrap()
    }

    #[test]
    fn load_single_leaf() {
        let t = load_thesaurus("123456\tkippu\n".as_bytes()).unwrap();
        assert_eq!(t.depth(), 6);
        assert_eq!(t.codes("kippu"), ["123456"]);
    }

    #[test]
    fn load_multi_code_word() {
        let t = load_thesaurus("123456\tken\n923451\tken\n".as_bytes()).unwrap();
        assert_eq!(t.codes("ken").len(), 2);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn load_rejects_mixed_lengths() {
        let err = load_thesaurus("123456\ta\n12345\tb\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(load_thesaurus("123456 a\n".as_bytes()).is_err());
    }

    #[test]
    fn table_lookups() {
        let expected = [(0, 11), (2, 10), (4, 9), (6, 8), (8, 7), (10, 5), (12, 0)];
        for (len, sim) in expected {
            assert_eq!(sim_for_path(len), sim);
        }
    }

    #[test]
    fn path_lengths() {
        let t = toy();
        assert_eq!(path_length(&t, "kippu", "kippu"), Some(0));
        assert_eq!(path_length(&t, "kippu", "heya"), Some(2));
        assert_eq!(path_length(&t, "kippu", "hikouki"), Some(4));
        assert_eq!(path_length(&t, "kippu", "kare"), Some(12));
        assert_eq!(path_length(&t, "kippu", "nothing"), None);
        // polysemous: nearest reading wins
        assert_eq!(path_length(&t, "ken", "kare"), Some(2));
        assert_eq!(path_length(&t, "ken", "kippu"), Some(0));
    }

    #[test]
    fn sims() {
        let t = toy();
        assert_eq!(thesaurus_sim(&t, "kippu", "kippu"), 11);
        assert_eq!(thesaurus_sim(&t, "kippu", "hikouki"), 9);
        assert_eq!(thesaurus_sim(&t, "kippu", "kare"), 0);
        assert_eq!(thesaurus_sim(&t, "kippu", "zzz"), 0);
    }

    #[test]
    fn generalization() {
        let t = toy();
        assert_eq!(
            generalize(&t, "kippu", 5).unwrap(),
            BTreeSet::from(["12345".to_string()])
        );
        assert_eq!(
            generalize(&t, "kippu", 6).unwrap(),
            BTreeSet::from(["123456".to_string()])
        );
        assert_eq!(generalize(&t, "ken", 1).unwrap().len(), 2);
        assert_eq!(
            generalize(&t, "zzz", 5).unwrap(),
            BTreeSet::from(["UNK:zzz".to_string()])
        );
        assert!(generalize(&t, "kippu", 0).is_err());
        assert!(generalize(&t, "kippu", 7).is_err());
    }
}
