//! Index sets of the cumulant and generated-evolution expansions.

use serde::{Deserialize, Serialize};

use crate::error::{KineticError, Result};

/// Largest number of free elements accepted by any enumeration.
pub const MAX_ORDER: usize = 6;

fn check_cap(n: usize, what: &str) -> Result<()> {
    if n > MAX_ORDER {
        return Err(KineticError::Capacity(format!("{what}: order {n} exceeds cap {MAX_ORDER}")));
    }
    Ok(())
}

/// Ground set `{Y} ∪ (X∖Y)`: the cluster counts as a single element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusteredSet {
    pub cluster: Vec<usize>,
    pub extras: Vec<usize>,
}

impl ClusteredSet {
    pub fn new(cluster: Vec<usize>, extras: Vec<usize>) -> Result<Self> {
        if cluster.is_empty() {
            return Err(KineticError::Dimension("cluster must be nonempty".into()));
        }
        let mut all: Vec<usize> = cluster.iter().chain(&extras).copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(KineticError::Dimension("labels must be distinct".into()));
        }
        Ok(Self { cluster, extras })
    }

    /// Cluster `0..s` followed by extras `s..s+n` (0-based particle positions).
    pub fn standard(s: usize, n: usize) -> Self {
        Self { cluster: (0..s).collect(), extras: (s..s + n).collect() }
    }

    /// Element count `1 + n`.
    pub fn len(&self) -> usize {
        1 + self.extras.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// θ: particle labels covered by element `e` (element 0 is the cluster).
    pub fn labels_of(&self, e: usize) -> Vec<usize> {
        if e == 0 {
            self.cluster.clone()
        } else {
            vec![self.extras[e - 1]]
        }
    }

    /// θ applied to a block of elements.
    pub fn flatten(&self, block: &[usize]) -> Vec<usize> {
        block.iter().flat_map(|&e| self.labels_of(e)).collect()
    }

    /// The declusterized ground set: every particle becomes its own element.
    pub fn declusterize(&self) -> Vec<usize> {
        self.cluster.iter().chain(&self.extras).copied().collect()
    }
}

/// Set partition of element indices `0..m`, blocks sorted by least element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Index of the block holding element 0 (the cluster, when there is one).
    pub fn cluster_block(&self) -> usize {
        self.blocks.iter().position(|b| b.contains(&0)).unwrap_or(0)
    }
}

/// All set partitions of `0..m` in restricted-growth order.
pub fn set_partitions(m: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    let mut rgs = vec![0usize; m];
    loop {
        let count = rgs.iter().max().unwrap() + 1;
        let mut blocks = vec![Vec::new(); count];
        for (e, &b) in rgs.iter().enumerate() {
            blocks[b].push(e);
        }
        out.push(Partition { blocks });
        // next restricted growth string
        let mut i = m - 1;
        loop {
            if i == 0 {
                return out;
            }
            let prefix_max = rgs[..i].iter().copied().max().unwrap();
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for x in rgs.iter_mut().skip(i + 1) {
                    *x = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Partitions of the clustered ground set (`1 + n` elements).
pub fn enumerate_partitions(ground: &ClusteredSet) -> Result<Vec<Partition>> {
    check_cap(ground.extras.len(), "partitions")?;
    Ok(set_partitions(ground.len()))
}

/// `(−1)^{|P|−1}(|P|−1)!`.
pub fn cumulant_coefficient(p: &Partition) -> i64 {
    let k = p.len() as i64;
    let fact: i64 = (1..k).product();
    if k % 2 == 1 {
        fact
    } else {
        -fact
    }
}

pub fn bell(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let last = *next.last().unwrap();
            next.push(last + x);
        }
        row = next;
    }
    row[0]
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// A tuple `(n_1, …, n_k)` of the generated-evolution expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    pub parts: Vec<usize>,
    /// `(−1)^k`.
    pub sign: i64,
    /// `n! / (n − n_1 − … − n_k)!`.
    pub factor: f64,
}

impl Composition {
    pub fn k(&self) -> usize {
        self.parts.len()
    }

    pub fn remainder(&self, n: usize) -> usize {
        n - self.parts.iter().sum::<usize>()
    }
}

/// All tuples with `n_j ≥ 1` and `Σ n_j ≤ n`, including the empty one.
pub fn enumerate_compositions(n: usize) -> Result<Vec<Composition>> {
    check_cap(n, "compositions")?;
    let mut out = Vec::new();
    let mut stack = Vec::new();
    compositions_rec(n, n, &mut stack, &mut out);
    Ok(out)
}

fn compositions_rec(n: usize, left: usize, stack: &mut Vec<usize>, out: &mut Vec<Composition>) {
    let k = stack.len();
    out.push(Composition {
        parts: stack.clone(),
        sign: if k % 2 == 0 { 1 } else { -1 },
        factor: factorial(n) / factorial(left),
    });
    for part in 1..=left {
        stack.push(part);
        compositions_rec(n, left - part, stack, out);
        stack.pop();
    }
}

/// Which block structures count as dissections of a linearly ordered set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DissectionReading {
    /// Unordered set partitions whose blocks inherit the order of `Z`.
    SetPartition,
    /// Splits of `Z` into consecutive intervals.
    #[default]
    IntervalSplit,
}

/// Blocks `X_l` covering `Z` with injective attachment indices `i_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dissection {
    pub blocks: Vec<Vec<usize>>,
    pub attach: Vec<usize>,
    /// `1/|D|! · ∏ 1/|X_l|!`.
    pub weight: f64,
}

/// Dissections of `z` into at most `max_blocks` blocks, each attached to a distinct
/// index in `0..attach_range`.
pub fn enumerate_dissections(
    z: &[usize],
    max_blocks: usize,
    attach_range: usize,
    reading: DissectionReading,
) -> Result<Vec<Dissection>> {
    check_cap(z.len(), "dissections")?;
    if z.is_empty() {
        return Err(KineticError::Dimension("dissected set must be nonempty".into()));
    }
    let structures: Vec<Vec<Vec<usize>>> = match reading {
        DissectionReading::SetPartition => set_partitions(z.len())
            .into_iter()
            .map(|p| p.blocks.into_iter().map(|b| b.into_iter().map(|e| z[e]).collect()).collect())
            .collect(),
        DissectionReading::IntervalSplit => interval_splits(z),
    };
    let mut out = Vec::new();
    for blocks in structures {
        let b = blocks.len();
        if b > max_blocks || b > attach_range {
            continue;
        }
        let weight = 1.0
            / (factorial(b) * blocks.iter().map(|x| factorial(x.len())).product::<f64>());
        for attach in injections(b, attach_range) {
            out.push(Dissection { blocks: blocks.clone(), attach, weight });
        }
    }
    Ok(out)
}

fn interval_splits(z: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let m = z.len();
    (0..1usize << (m - 1))
        .map(|cuts| {
            let mut blocks = vec![vec![z[0]]];
            for i in 1..m {
                if cuts >> (i - 1) & 1 == 1 {
                    blocks.push(Vec::new());
                }
                blocks.last_mut().unwrap().push(z[i]);
            }
            blocks
        })
        .collect()
}

/// Injective maps `0..k → 0..range` in lexicographic order.
pub fn injections(k: usize, range: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    let mut used = vec![false; range];
    injections_rec(k, range, &mut cur, &mut used, &mut out);
    out
}

fn injections_rec(
    k: usize,
    range: usize,
    cur: &mut Vec<usize>,
    used: &mut [bool],
    out: &mut Vec<Vec<usize>>,
) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in 0..range {
        if !used[i] {
            used[i] = true;
            cur.push(i);
            injections_rec(k, range, cur, used, out);
            cur.pop();
            used[i] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn partition_counts_match_bell() {
        let want = [1u64, 2, 5, 15, 52, 203, 877];
        for (n, &b) in want.iter().enumerate() {
            let ps = enumerate_partitions(&ClusteredSet::standard(1, n)).unwrap();
            assert_eq!(ps.len() as u64, b);
            assert_eq!(bell(n + 1), b);
            let uniq: HashSet<_> = ps.iter().cloned().collect();
            assert_eq!(uniq.len(), ps.len());
            for p in &ps {
                let mut all: Vec<usize> = p.blocks.iter().flatten().copied().collect();
                all.sort_unstable();
                assert_eq!(all, (0..=n).collect::<Vec<_>>());
            }
        }
        assert!(enumerate_partitions(&ClusteredSet::standard(1, 7)).is_err());
    }

    #[test]
    fn low_order_partitions() {
        let p0 = enumerate_partitions(&ClusteredSet::standard(2, 0)).unwrap();
        assert_eq!(p0, vec![Partition { blocks: vec![vec![0]] }]);
        let p1 = enumerate_partitions(&ClusteredSet::standard(2, 1)).unwrap();
        assert_eq!(
            p1,
            vec![Partition { blocks: vec![vec![0, 1]] }, Partition { blocks: vec![vec![0], vec![1]] }]
        );
    }

    #[test]
    fn coefficients() {
        let mk = |k: usize| Partition { blocks: (0..k).map(|i| vec![i]).collect() };
        assert_eq!(cumulant_coefficient(&mk(1)), 1);
        assert_eq!(cumulant_coefficient(&mk(2)), -1);
        assert_eq!(cumulant_coefficient(&mk(3)), 2);
        assert_eq!(cumulant_coefficient(&mk(4)), -6);
    }

    #[test]
    fn mobius_sum_vanishes() {
        // Σ_P coeff(P) = 0 for ground sets of size ≥ 2
        for m in 2..=7 {
            let s: i64 = set_partitions(m).iter().map(cumulant_coefficient).sum();
            assert_eq!(s, 0);
        }
    }

    #[test]
    fn compositions_low_order() {
        let c0 = enumerate_compositions(0).unwrap();
        assert_eq!(c0, vec![Composition { parts: vec![], sign: 1, factor: 1.0 }]);
        let c1 = enumerate_compositions(1).unwrap();
        assert_eq!(c1.len(), 2);
        assert_eq!((c1[1].parts.clone(), c1[1].sign, c1[1].factor), (vec![1], -1, 1.0));
        let c2 = enumerate_compositions(2).unwrap();
        let got: Vec<(Vec<usize>, i64, f64)> =
            c2.iter().map(|c| (c.parts.clone(), c.sign, c.factor)).collect();
        assert_eq!(
            got,
            vec![(vec![], 1, 1.0), (vec![1], -1, 2.0), (vec![1, 1], 1, 2.0), (vec![2], -1, 2.0)]
        );
        // 2^n tuples
        for n in 0..=6 {
            assert_eq!(enumerate_compositions(n).unwrap().len(), 1 << n);
        }
        assert!(enumerate_compositions(7).is_err());
    }

    #[test]
    fn dissections_low_order() {
        let d1 = enumerate_dissections(&[5], 3, 3, DissectionReading::SetPartition).unwrap();
        assert_eq!(d1.len(), 3);
        assert!(d1.iter().all(|d| d.blocks == vec![vec![5]] && d.weight == 1.0));

        let d2 = enumerate_dissections(&[3, 4], 2, 2, DissectionReading::SetPartition).unwrap();
        let structures: HashSet<Vec<Vec<usize>>> = d2.iter().map(|d| d.blocks.clone()).collect();
        assert_eq!(
            structures,
            HashSet::from([vec![vec![3, 4]], vec![vec![3], vec![4]]])
        );
        // one block: 2 attachments, weight 1/2; two blocks: 2 injections, weight 1/2
        assert_eq!(d2.len(), 4);
        assert!(d2.iter().all(|d| (d.weight - 0.5).abs() < 1e-15));

        let cramped = enumerate_dissections(&[3, 4], 2, 1, DissectionReading::SetPartition).unwrap();
        assert_eq!(cramped.len(), 1);
        assert_eq!(cramped[0].blocks, vec![vec![3, 4]]);
        assert!(enumerate_dissections(&[3, 4], 1, 0, DissectionReading::SetPartition)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn interval_reading_differs_at_three() {
        let sp = enumerate_dissections(&[0, 1, 2], 3, 3, DissectionReading::SetPartition).unwrap();
        let iv = enumerate_dissections(&[0, 1, 2], 3, 3, DissectionReading::IntervalSplit).unwrap();
        let s_sp: HashSet<Vec<Vec<usize>>> = sp.iter().map(|d| d.blocks.clone()).collect();
        let s_iv: HashSet<Vec<Vec<usize>>> = iv.iter().map(|d| d.blocks.clone()).collect();
        assert_eq!(s_sp.len(), 5);
        assert_eq!(s_iv.len(), 4);
        assert!(!s_iv.contains(&vec![vec![0, 2], vec![1]]));
        assert!(s_iv.is_subset(&s_sp));
    }

    proptest! {
        #[test]
        fn dissections_are_valid_and_unique(m in 1usize..5, max_blocks in 1usize..5, extra in 0usize..3) {
            let z: Vec<usize> = (10..10 + m).collect();
            let range = max_blocks + extra;
            let ds = enumerate_dissections(&z, max_blocks, range, DissectionReading::SetPartition).unwrap();
            let mut seen = HashSet::new();
            for d in &ds {
                prop_assert!(d.blocks.len() <= max_blocks);
                let mut all: Vec<usize> = d.blocks.iter().flatten().copied().collect();
                all.sort_unstable();
                prop_assert_eq!(&all, &z);
                for b in &d.blocks {
                    prop_assert!(b.windows(2).all(|w| w[0] < w[1]));
                }
                let ai: HashSet<_> = d.attach.iter().collect();
                prop_assert_eq!(ai.len(), d.attach.len());
                prop_assert!(d.attach.iter().all(|&i| i < range));
                prop_assert!(seen.insert((d.blocks.clone(), d.attach.clone())));
            }
        }
    }
}
