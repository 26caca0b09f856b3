use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

/// A run of summary tokens copied verbatim from the dialogue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub summary_start: usize,
    pub dialogue_start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentSet {
    pub fragments: Vec<Fragment>,
    pub summary_len: usize,
}

impl FragmentSet {
    /// Fraction of summary tokens inside a fragment.
    pub fn coverage(&self) -> f64 {
        if self.summary_len == 0 {
            return 0.0;
        }
        let covered: usize = self.fragments.iter().map(|f| f.len).sum();
        covered as f64 / self.summary_len as f64
    }

    /// Sum of squared fragment lengths per summary token.
    pub fn density(&self) -> f64 {
        if self.summary_len == 0 {
            return 0.0;
        }
        let sq: usize = self.fragments.iter().map(|f| f.len * f.len).sum();
        sq as f64 / self.summary_len as f64
    }
}

/// Greedy extractive fragments of `summary` with respect to `dialogue`.
///
/// Scans the summary left to right. At each position the longest run of
/// summary tokens starting there that also occurs contiguously in the
/// dialogue becomes a fragment (earliest dialogue occurrence on ties) and the
/// scan jumps past it; a token with no match advances the scan by one.
pub fn extractive_fragments<T: Hash + Eq>(dialogue: &[T], summary: &[T]) -> FragmentSet {
    let mut positions: HashMap<&T, Vec<usize>> = HashMap::new();
    for (j, tok) in dialogue.iter().enumerate() {
        positions.entry(tok).or_default().push(j);
    }
    let mut fragments = Vec::new();
    let mut i = 0;
    while i < summary.len() {
        let mut best_len = 0;
        let mut best_start = 0;
        if let Some(starts) = positions.get(&summary[i]) {
            for &j in starts {
                let len = summary[i..]
                    .iter()
                    .zip(&dialogue[j..])
                    .take_while(|(a, b)| a == b)
                    .count();
                if len > best_len {
                    best_len = len;
                    best_start = j;
                }
            }
        }
        if best_len > 0 {
            fragments.push(Fragment {
                summary_start: i,
                dialogue_start: best_start,
                len: best_len,
            });
            i += best_len;
        } else {
            i += 1;
        }
    }
    FragmentSet {
        fragments,
        summary_len: summary.len(),
    }
}
