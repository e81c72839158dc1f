//! TF·IDF noun vectors over `(case, verb)` contexts and their cosine.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use crate::corpus::TupleCounts;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct VectorTable {
    contexts: Vec<(String, String)>,
    nf: Vec<u32>,
    noun_types: usize,
    /// Sparse weights sorted by context id.
    vectors: HashMap<String, Vec<(u32, f64)>>,
    norms: HashMap<String, f64>,
}

impl VectorTable {
    /// Number of distinct nouns in the co-occurrence data.
    pub fn noun_types(&self) -> usize {
        self.noun_types
    }

    pub fn contexts(&self) -> &[(String, String)] {
        &self.contexts
    }

    /// Distinct nouns seen with `(case, verb)`.
    pub fn noun_frequency(&self, case: &str, verb: &str) -> u32 {
        self.contexts
            .iter()
            .position(|(c, v)| c == case && v == verb)
            .map_or(0, |i| self.nf[i])
    }

    pub fn weight(&self, noun: &str, case: &str, verb: &str) -> f64 {
        let Some(vec) = self.vectors.get(noun) else {
            return 0.0;
        };
        vec.iter()
            .find(|(ctx, _)| {
                let (c, v) = &self.contexts[*ctx as usize];
                c == case && v == verb
            })
            .map_or(0.0, |(_, w)| *w)
    }

    pub fn vector(&self, noun: &str) -> Option<&[(u32, f64)]> {
        self.vectors.get(noun).map(Vec::as_slice)
    }

    pub fn norm(&self, noun: &str) -> f64 {
        self.norms.get(noun).copied().unwrap_or(0.0)
    }

    /// Unit-length copy of a noun's vector; `None` when absent or zero.
    pub fn unit_vector(&self, noun: &str) -> Option<Vec<(u32, f64)>> {
        let norm = self.norm(noun);
        if norm == 0.0 {
            return None;
        }
        Some(
            self.vectors[noun]
                .iter()
                .filter(|(_, w)| *w != 0.0)
                .map(|&(c, w)| (c, w / norm))
                .collect(),
        )
    }

    /// Writes `noun<TAB>case:verb<TAB>weight`, nouns sorted.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let sorted: BTreeMap<_, _> = self.vectors.iter().collect();
        for (noun, vec) in sorted {
            for (ctx, weight) in vec {
                let (c, v) = &self.contexts[*ctx as usize];
                writeln!(w, "{noun}\t{c}:{v}\t{weight}")?;
            }
        }
        Ok(())
    }
}

/// `t = f(n,c,v) * ln(N / nf(c,v))` for every observed tuple.
pub fn build_vectors(tc: &TupleCounts) -> Result<VectorTable> {
    if tc.is_empty() {
        return Err(Error::EmptyInput("co-occurrence tuples"));
    }
    let mut ctx_ids: HashMap<(&str, &str), u32> = HashMap::new();
    let mut contexts = Vec::new();
    let mut ctx_nouns: Vec<HashSet<&str>> = Vec::new();
    let mut nouns: HashSet<&str> = HashSet::new();
    for (n, c, v, _) in tc.iter() {
        let id = *ctx_ids.entry((c, v)).or_insert_with(|| {
            contexts.push((c.to_string(), v.to_string()));
            ctx_nouns.push(HashSet::new());
            (contexts.len() - 1) as u32
        });
        ctx_nouns[id as usize].insert(n);
        nouns.insert(n);
    }
    let noun_types = nouns.len();
    let nf: Vec<u32> = ctx_nouns.iter().map(|s| s.len() as u32).collect();

    let mut vectors: HashMap<String, Vec<(u32, f64)>> = HashMap::new();
    for (n, c, v, f) in tc.iter() {
        let id = ctx_ids[&(c, v)];
        let idf = (noun_types as f64 / nf[id as usize] as f64).ln();
        vectors
            .entry(n.to_string())
            .or_default()
            .push((id, f as f64 * idf));
    }
    let mut norms = HashMap::new();
    for (noun, vec) in vectors.iter_mut() {
        vec.sort_by_key(|(id, _)| *id);
        let norm = vec.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        norms.insert(noun.clone(), norm);
    }
    Ok(VectorTable {
        contexts,
        nf,
        noun_types,
        vectors,
        norms,
    })
}

fn sparse_dot(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Cosine in `[0, 1]`; absent or zero vectors give 0.
pub fn cosine_sim(vt: &VectorTable, n1: &str, n2: &str) -> f64 {
    let (na, nb) = (vt.norm(n1), vt.norm(n2));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    if n1 == n2 {
        return 1.0;
    }
    cosine_parts(&vt.vectors[n1], na, &vt.vectors[n2], nb)
}

/// Clamped cosine of two distinct nonzero vectors given their norms.
pub(crate) fn cosine_parts(a: &[(u32, f64)], na: f64, b: &[(u32, f64)], nb: f64) -> f64 {
    (sparse_dot(a, b) / (na * nb)).clamp(0.0, 1.0)
}
