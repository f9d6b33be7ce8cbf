//! Coordinate sets, set partitions and multi-index streams.
//!
//! Coordinates are labelled `1..=d`. A [`CoordSet`] is stored as a bitmask
//! (bit `k - 1` set iff label `k` is a member), which keeps subsets `Copy`
//! and gives them a natural total order.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest order supported by the bitmask representation.
pub const MAX_ORDER: usize = 16;

/// A subset of `{1..d}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct CoordSet(u32);

impl CoordSet {
    pub const EMPTY: CoordSet = CoordSet(0);

    /// `{1..d}`.
    pub fn full(d: usize) -> Self {
        assert!(d <= MAX_ORDER, "order {d} exceeds {MAX_ORDER}");
        CoordSet(((1u64 << d) - 1) as u32)
    }

    pub fn singleton(label: usize) -> Self {
        assert!((1..=MAX_ORDER).contains(&label), "label {label} out of range");
        CoordSet(1 << (label - 1))
    }

    pub fn from_labels<I: IntoIterator<Item = usize>>(labels: I) -> Self {
        labels
            .into_iter()
            .fold(CoordSet::EMPTY, |acc, l| acc.union(CoordSet::singleton(l)))
    }

    pub fn from_bits(bits: u32) -> Self {
        CoordSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, label: usize) -> bool {
        (1..=MAX_ORDER).contains(&label) && self.0 & (1 << (label - 1)) != 0
    }

    pub fn union(self, other: CoordSet) -> Self {
        CoordSet(self.0 | other.0)
    }

    pub fn intersection(self, other: CoordSet) -> Self {
        CoordSet(self.0 & other.0)
    }

    pub fn difference(self, other: CoordSet) -> Self {
        CoordSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: CoordSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Complement within `{1..d}`.
    pub fn complement(self, d: usize) -> Self {
        CoordSet::full(d).difference(self)
    }

    pub fn min_label(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize + 1)
    }

    pub fn max_label(self) -> Option<usize> {
        (self.0 != 0).then(|| 32 - self.0.leading_zeros() as usize)
    }

    /// Members in increasing order.
    pub fn labels(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (1..=MAX_ORDER).filter(move |&l| bits & (1 << (l - 1)) != 0)
    }

    /// Zero-based axis positions in increasing order.
    pub fn axes(self) -> Vec<usize> {
        self.labels().map(|l| l - 1).collect()
    }

    /// All subsets of `self`, in increasing bitmask order.
    pub fn subsets(self) -> impl Iterator<Item = CoordSet> {
        let full = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full { None } else { Some(((cur | !full).wrapping_add(1)) & full) };
            Some(CoordSet(cur))
        })
    }
}

impl fmt::Debug for CoordSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CoordSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, l) in self.labels().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str("}")
    }
}

/// A set partition into nonempty, pairwise disjoint blocks, blocks ordered by
/// their smallest label.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Partition {
    blocks: Vec<CoordSet>,
}

impl Partition {
    /// The empty partition (of the empty set), `deg = 0`.
    pub fn empty() -> Self {
        Partition { blocks: Vec::new() }
    }

    /// Builds a partition from blocks, normalizing the block order. Returns
    /// `None` when blocks are empty or overlap.
    pub fn from_blocks(mut blocks: Vec<CoordSet>) -> Option<Self> {
        let mut seen = CoordSet::EMPTY;
        for &b in &blocks {
            if b.is_empty() || !b.intersection(seen).is_empty() {
                return None;
            }
            seen = seen.union(b);
        }
        blocks.sort_by_key(|b| b.min_label());
        Some(Partition { blocks })
    }

    pub fn blocks(&self) -> &[CoordSet] {
        &self.blocks
    }

    pub fn deg(&self) -> usize {
        self.blocks.len()
    }

    /// Union of the blocks.
    pub fn ground(&self) -> CoordSet {
        self.blocks.iter().fold(CoordSet::EMPTY, |a, &b| a.union(b))
    }

    pub fn is_partition_of(&self, set: CoordSet) -> bool {
        let mut seen = CoordSet::EMPTY;
        for &b in &self.blocks {
            if b.is_empty() || !b.intersection(seen).is_empty() {
                return false;
            }
            seen = seen.union(b);
        }
        seen == set
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str("}")
    }
}

/// All set partitions of `set` in restricted-growth-string order.
///
/// The empty set has exactly one partition, the empty one.
pub fn enumerate_partitions(set: CoordSet) -> Vec<Partition> {
    let labels: Vec<usize> = set.labels().collect();
    let n = labels.len();
    if n == 0 {
        return vec![Partition::empty()];
    }
    // rgs[i] is the block of labels[i]; rgs[0] = 0 and rgs[i] <= 1 + max(rgs[..i]).
    let mut rgs = vec![0usize; n];
    let mut out = Vec::new();
    loop {
        let k = rgs.iter().max().copied().unwrap_or(0) + 1;
        let mut blocks = vec![CoordSet::EMPTY; k];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b] = blocks[b].union(CoordSet::singleton(labels[i]));
        }
        out.push(Partition { blocks });

        // Advance to the next restricted growth string.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            let prefix_max = rgs[..i].iter().max().copied().unwrap_or(0);
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for r in rgs.iter_mut().skip(i + 1) {
                    *r = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// A pair `(K, J)`: a coordinate set carrying the Hilbert-valued test function
/// and a partition of the remaining coordinates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub k: CoordSet,
    pub j: Partition,
}

impl PartitionSpec {
    pub fn new(k: CoordSet, j: Partition) -> Self {
        PartitionSpec { k, j }
    }

    /// `({1..d}, ∅)`, the plain L² norm.
    pub fn full_k(d: usize) -> Self {
        PartitionSpec { k: CoordSet::full(d), j: Partition::empty() }
    }

    pub fn deg(&self) -> usize {
        self.j.deg()
    }

    pub fn is_valid_for(&self, d: usize) -> bool {
        d <= MAX_ORDER
            && self.k.is_subset(CoordSet::full(d))
            && self.j.is_partition_of(CoordSet::full(d).difference(self.k))
    }

    /// Parses `K=1,2;J=3|4,5` style descriptors. An empty `K=` or missing
    /// side means the empty set.
    pub fn parse(text: &str) -> Option<Self> {
        let mut k = CoordSet::EMPTY;
        let mut blocks = Vec::new();
        for part in text.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, val) = part.split_once('=')?;
            let val = val.trim();
            match key.trim() {
                "K" | "k" => k = parse_labels(val)?,
                "J" | "j" => {
                    for b in val.split('|').filter(|b| !b.trim().is_empty()) {
                        blocks.push(parse_labels(b)?);
                    }
                }
                _ => return None,
            }
        }
        let j = Partition::from_blocks(blocks)?;
        if !k.intersection(j.ground()).is_empty() {
            return None;
        }
        Some(PartitionSpec { k, j })
    }

    /// Inverse of [`PartitionSpec::parse`].
    pub fn descriptor(&self) -> String {
        let labels = |s: CoordSet| s.labels().map(|l| l.to_string()).collect::<Vec<_>>().join(",");
        let blocks: Vec<String> = self.j.blocks().iter().map(|&b| labels(b)).collect();
        format!("K={};J={}", labels(self.k), blocks.join("|"))
    }
}

fn parse_labels(text: &str) -> Option<CoordSet> {
    let mut set = CoordSet::EMPTY;
    for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let l: usize = tok.parse().ok()?;
        if !(1..=MAX_ORDER).contains(&l) {
            return None;
        }
        set = set.union(CoordSet::singleton(l));
    }
    Some(set)
}

impl fmt::Debug for PartitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.k, self.j)
    }
}

impl fmt::Display for PartitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.k, self.j)
    }
}

/// Every `(K, J)` with `K ⊆ {1..d}` and `J` a partition of the complement.
///
/// Ordered by `K` in increasing bitmask order, then by partition order.
pub fn enumerate_partition_specs(d: usize) -> Vec<PartitionSpec> {
    let full = CoordSet::full(d);
    let mut out = Vec::new();
    for k in full.subsets() {
        for j in enumerate_partitions(full.difference(k)) {
            out.push(PartitionSpec { k, j });
        }
    }
    out
}

/// A multi-index `(i_1, .., i_d)` with 1-based entries.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    /// `|i| = max_k i_k`.
    pub fn max_coord(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn is_off_diagonal(&self) -> bool {
        let c = &self.0;
        (0..c.len()).all(|a| (a + 1..c.len()).all(|b| c[a] != c[b]))
    }
}

/// Lazy stream over `{1..n}^d`, optionally restricted to indices with pairwise
/// distinct coordinates. Lexicographic order, last coordinate fastest.
pub struct IndexStream {
    n: usize,
    offdiag_only: bool,
    cur: Option<Vec<usize>>,
}

pub fn iterate_indices(n: usize, d: usize, offdiag_only: bool) -> IndexStream {
    let cur = (n >= 1 && d >= 1).then(|| vec![1; d]);
    let mut s = IndexStream { n, offdiag_only, cur };
    if offdiag_only {
        s.skip_diagonal();
    }
    s
}

impl IndexStream {
    fn advance(&mut self) {
        let Some(cur) = self.cur.as_mut() else { return };
        for pos in (0..cur.len()).rev() {
            if cur[pos] < self.n {
                cur[pos] += 1;
                return;
            }
            cur[pos] = 1;
        }
        self.cur = None;
    }

    fn skip_diagonal(&mut self) {
        while let Some(cur) = &self.cur {
            if MultiIndex(cur.clone()).is_off_diagonal() {
                return;
            }
            self.advance();
        }
    }
}

impl Iterator for IndexStream {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let out = MultiIndex(self.cur.clone()?);
        self.advance();
        if self.offdiag_only {
            self.skip_diagonal();
        }
        Some(out)
    }
}

/// Möbius coefficient `μ(0̂, π) = Π_B (-1)^{|B|-1} (|B|-1)!` of the partition
/// lattice, used to convert sums over "indices constant on blocks" into sums
/// over pairwise distinct indices.
pub fn partition_moebius(p: &Partition) -> i64 {
    p.blocks()
        .iter()
        .map(|b| {
            let s = b.len() as i64;
            let fact: i64 = (1..s).product();
            if (s - 1) % 2 == 0 {
                fact
            } else {
                -fact
            }
        })
        .product()
}
