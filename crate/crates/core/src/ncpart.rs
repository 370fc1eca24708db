//! Non-crossing pair partitions of `[2k]`, their nesting structure and colorings.
//!
//! Points are 1-based (`1..=2k`) to match the usual diagram conventions. Blocks
//! are 0-based and ordered by their left endpoint, so block `p` is the pair whose
//! left endpoint is the `p`-th smallest.

use std::fmt;

/// A non-crossing pair partition of `[2k]` together with its nearest-outer map.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NcPairPartition {
    pairs: Vec<(usize, usize)>,
    outer: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("pairs do not cover [1, {0}] exactly")]
    NotAPartition(usize),
    #[error("pair ({0}, {1}) is not ordered")]
    Unordered(usize, usize),
    #[error("blocks {0:?} and {1:?} cross")]
    Crossing((usize, usize), (usize, usize)),
}

impl NcPairPartition {
    /// The empty partition of the empty set.
    pub fn empty() -> Self {
        Self {
            pairs: Vec::new(),
            outer: Vec::new(),
        }
    }

    /// Builds a partition from pairs over `[1, 2k]`, validating every invariant.
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Result<Self, PartitionError> {
        let size = 2 * pairs.len();
        let mut seen = vec![false; size + 1];
        for &(l, r) in &pairs {
            if l >= r {
                return Err(PartitionError::Unordered(l, r));
            }
            for x in [l, r] {
                if x == 0 || x > size || seen[x] {
                    return Err(PartitionError::NotAPartition(size));
                }
                seen[x] = true;
            }
        }
        pairs.sort_unstable();
        for (a, &p) in pairs.iter().enumerate() {
            for &q in &pairs[a + 1..] {
                // q.0 > p.0 after sorting
                if q.0 < p.1 && p.1 < q.1 {
                    return Err(PartitionError::Crossing(p, q));
                }
            }
        }
        Ok(Self::from_sorted_unchecked(pairs))
    }

    fn from_sorted_unchecked(pairs: Vec<(usize, usize)>) -> Self {
        // With blocks sorted by left endpoint, the nearest outer block of p is the
        // last earlier block whose right endpoint lies beyond p's.
        let mut outer = Vec::with_capacity(pairs.len());
        let mut stack: Vec<usize> = Vec::new();
        for (p, &(l, _)) in pairs.iter().enumerate() {
            while let Some(&top) = stack.last() {
                if pairs[top].1 < l {
                    stack.pop();
                } else {
                    break;
                }
            }
            outer.push(stack.last().copied());
            stack.push(p);
        }
        Self { pairs, outer }
    }

    /// Number of blocks `k`.
    pub fn blocks(&self) -> usize {
        self.pairs.len()
    }

    /// Size of the ground set, `2k`.
    pub fn size(&self) -> usize {
        2 * self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs sorted by left endpoint.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Nearest outer block of `p`, if any.
    pub fn outer(&self, p: usize) -> Option<usize> {
        self.outer[p]
    }

    /// The nearest-outer map with the convention `sigma(p) = p` for outermost blocks.
    pub fn sigma(&self, p: usize) -> usize {
        self.outer[p].unwrap_or(p)
    }

    /// True when `1` and `2k` share a block.
    pub fn is_covered(&self) -> bool {
        !self.pairs.is_empty() && self.pairs[0] == (1, self.size())
    }

    /// Splits the partition according to its nesting structure.
    ///
    /// A covered partition yields its covering block and the maximal covered
    /// pieces of the interior; any other partition yields its maximal covered
    /// pieces over consecutive intervals. Every segment is relabelled to start
    /// at `1` and remembers its offset.
    pub fn decompose(&self) -> CoveredDecomposition {
        if self.is_covered() {
            let inner: Vec<(usize, usize)> = self.pairs[1..].iter().map(|&(l, r)| (l - 1, r - 1)).collect();
            let interior = Self::from_sorted_unchecked(inner);
            let mut segments = interior.top_level_segments();
            for s in &mut segments {
                s.offset += 1;
            }
            CoveredDecomposition {
                covering: Some(self.pairs[0]),
                segments,
            }
        } else {
            CoveredDecomposition {
                covering: None,
                segments: self.top_level_segments(),
            }
        }
    }

    fn top_level_segments(&self) -> Vec<Segment> {
        let mut out = Vec::new();
        let mut p = 0;
        while p < self.pairs.len() {
            let (l, r) = self.pairs[p];
            let mut q = p + 1;
            while q < self.pairs.len() && self.pairs[q].0 < r {
                q += 1;
            }
            let shift = l - 1;
            let sub = self.pairs[p..q].iter().map(|&(a, b)| (a - shift, b - shift)).collect();
            out.push(Segment {
                offset: shift,
                partition: Self::from_sorted_unchecked(sub),
            });
            p = q;
        }
        out
    }

    /// Covered partition obtained by adding one block around everything.
    pub fn cover(&self) -> Self {
        let mut pairs = Vec::with_capacity(self.pairs.len() + 1);
        pairs.push((1, self.size() + 2));
        pairs.extend(self.pairs.iter().map(|&(l, r)| (l + 1, r + 1)));
        Self::from_sorted_unchecked(pairs)
    }

    /// All `r^(k+1)` colorings of the blocks and the conditional block.
    pub fn colorings(&self, r: usize) -> Colorings {
        Colorings::new(self.blocks(), r)
    }
}

impl fmt::Display for NcPairPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (l, r)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{{l},{r}}}")?;
        }
        write!(f, "}}")
    }
}

/// A covered piece of a partition placed at `offset + 1 ..= offset + size`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub offset: usize,
    pub partition: NcPairPartition,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveredDecomposition {
    pub covering: Option<(usize, usize)>,
    pub segments: Vec<Segment>,
}

impl CoveredDecomposition {
    /// Rebuilds the partition the decomposition came from.
    pub fn reassemble(&self) -> NcPairPartition {
        let mut pairs: Vec<(usize, usize)> = self.covering.into_iter().collect();
        for s in &self.segments {
            pairs.extend(s.partition.pairs().iter().map(|&(l, r)| (l + s.offset, r + s.offset)));
        }
        pairs.sort_unstable();
        NcPairPartition::from_sorted_unchecked(pairs)
    }
}

/// All of `NC^2(2k)` in lexicographic order of the sorted pair lists.
pub fn enumerate_nc2(k: usize) -> Vec<NcPairPartition> {
    let mut out: Vec<NcPairPartition> = raw_pairings(1, k)
        .into_iter()
        .map(NcPairPartition::from_sorted_unchecked)
        .collect();
    out.sort();
    out
}

/// Covered members of `NC^2(2k)`.
pub fn enumerate_ncc2(k: usize) -> Vec<NcPairPartition> {
    if k == 0 {
        return Vec::new();
    }
    enumerate_nc2(k - 1).iter().map(NcPairPartition::cover).collect()
}

// Non-crossing pairings of `start .. start + 2k`, each sorted by left endpoint.
fn raw_pairings(start: usize, k: usize) -> Vec<Vec<(usize, usize)>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for inner in 0..k {
        let partner = start + 2 * inner + 1;
        let insides = raw_pairings(start + 1, inner);
        let outsides = raw_pairings(partner + 1, k - 1 - inner);
        for a in &insides {
            for b in &outsides {
                let mut v = Vec::with_capacity(2 * k);
                v.push((start, partner));
                v.extend_from_slice(a);
                v.extend_from_slice(b);
                out.push(v);
            }
        }
    }
    out
}

/// `C_k = binom(2k, k) / (k + 1)`.
pub fn catalan(k: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

/// A coloring `f : {0} ∪ [k] → [r]`; index 0 colors the conditional block and
/// index `p + 1` colors block `p`. Colors are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coloring {
    colors: Vec<usize>,
    r: usize,
}

impl Coloring {
    pub fn colors(&self) -> usize {
        self.r
    }

    pub fn conditional(&self) -> usize {
        self.colors[0]
    }

    pub fn block(&self, p: usize) -> usize {
        self.colors[p + 1]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.colors
    }
}

/// Odometer over all colorings; the conditional color varies slowest.
#[derive(Clone, Debug)]
pub struct Colorings {
    current: Option<Vec<usize>>,
    r: usize,
}

impl Colorings {
    fn new(k: usize, r: usize) -> Self {
        assert!(r >= 1, "at least one color is required");
        Self {
            current: Some(vec![0; k + 1]),
            r,
        }
    }
}

impl Iterator for Colorings {
    type Item = Coloring;

    fn next(&mut self) -> Option<Coloring> {
        let cur = self.current.as_mut()?;
        let item = Coloring {
            colors: cur.clone(),
            r: self.r,
        };
        let mut i = cur.len();
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < self.r {
                break;
            }
            cur[i] = 0;
        }
        Some(item)
    }
}
