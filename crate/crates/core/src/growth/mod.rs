//! Natural growth of exotic trees and the combinatorial weights built on it.

mod cuts;
mod reduce;
mod rule;

use std::collections::{BTreeMap, HashMap};
use std::sync::{LazyLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::rational::factorial_q;
use crate::tree::{ExoticTree, MergedPoset, UnionFind};

pub use cuts::{effective_cut_multiset, removal_multiset, RemovalMultiset};
pub use reduce::{classical_symmetry, classical_tree_factorial, reduce_tree, reduction_sum};
pub use rule::{FertilityBound, GrowthRule, RuleParseError};

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedEntry {
    pub tree: ExoticTree,
    pub multiplicity: u64,
    pub weight: BigRational,
}

/// Grafting result keyed by canonical key.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedTreeMultiset {
    pub entries: BTreeMap<String, WeightedEntry>,
}

impl WeightedTreeMultiset {
    pub fn get(&self, key: &str) -> Option<&WeightedEntry> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &WeightedEntry> {
        self.entries.values()
    }

    fn add(&mut self, tree: ExoticTree, mult: u64, unit: &BigRational) {
        let e = self.entries.entry(tree.key().to_string()).or_insert_with(|| WeightedEntry {
            tree,
            multiplicity: 0,
            weight: BigRational::zero(),
        });
        e.multiplicity += mult;
        e.weight = unit * BigRational::from_integer(BigInt::from(e.multiplicity));
    }
}

fn orbit_sizes(reps: &[usize]) -> BTreeMap<usize, u64> {
    let mut out = BTreeMap::new();
    for &r in reps {
        *out.entry(r).or_insert(0) += 1;
    }
    out
}

/// Attach an α-leaf to every vertex, one orbit representative at a time.
pub fn graft_alpha(t: &ExoticTree) -> WeightedTreeMultiset {
    let mut out = WeightedTreeMultiset::default();
    let one = BigRational::one();
    for (v, size) in orbit_sizes(&t.vertex_orbits()) {
        let mut b = t.to_builder();
        b.add_alpha(v);
        out.add(b.build().expect("α graft keeps validity"), size, &one);
    }
    out
}

/// Attach a fresh β pair to every ordered vertex pair `(v, w)`, `v = w` allowed.
pub fn graft_beta_pair(t: &ExoticTree) -> WeightedTreeMultiset {
    let n = t.len();
    let mut uf = UnionFind::new(n * n);
    for v in 0..n {
        for w in 0..n {
            uf.union(v * n + w, w * n + v);
        }
    }
    for g in t.automorphism_generators() {
        for v in 0..n {
            for w in 0..n {
                uf.union(v * n + w, g[v] * n + g[w]);
            }
        }
    }
    let reps: Vec<usize> = (0..n * n).map(|i| uf.find(i)).collect();
    let mut out = WeightedTreeMultiset::default();
    let half = BigRational::new(1.into(), 2.into());
    for (r, size) in orbit_sizes(&reps) {
        let (v, w) = (r / n, r % n);
        let mut b = t.to_builder();
        let id = b.fresh_pair_id();
        b.add_beta(v, id);
        b.add_beta(w, id);
        out.add(b.build().expect("pair graft keeps validity"), size, &half);
    }
    out
}

/// Trees of each edge count reachable by natural growth, with the weighted number of growth histories.
#[derive(Clone, Debug)]
pub struct GrowthTable {
    pub levels: Vec<Vec<(ExoticTree, BigRational)>>,
}

impl GrowthTable {
    /// Grows from `o` up to `max_order` edges, keeping only trees accepted by `keep`.
    /// `keep` must be closed under leaf removal for the table to be complete.
    pub fn build<F>(max_order: usize, keep: F) -> GrowthTable
    where
        F: Fn(&ExoticTree) -> bool + Sync,
    {
        let mut levels = vec![vec![(ExoticTree::root(), BigRational::one())]];
        for _ in 0..max_order {
            let prev = levels.last().expect("level 0 exists");
            let next = prev
                .par_iter()
                .fold(HashMap::new, |mut acc: HashMap<ExoticTree, BigRational>, (t, cm)| {
                    for m in [graft_alpha(t), graft_beta_pair(t)] {
                        for e in m.entries.into_values() {
                            if keep(&e.tree) {
                                *acc.entry(e.tree).or_insert_with(BigRational::zero) += cm * &e.weight;
                            }
                        }
                    }
                    acc
                })
                .reduce(HashMap::new, |mut a, b| {
                    for (t, w) in b {
                        *a.entry(t).or_insert_with(BigRational::zero) += w;
                    }
                    a
                });
            let mut level: Vec<(ExoticTree, BigRational)> = next.into_iter().collect();
            level.sort_unstable_by(|a, b| a.0.cmp(&b.0));
            levels.push(level);
        }
        GrowthTable { levels }
    }

    pub fn cm_of(&self, t: &ExoticTree) -> Option<&BigRational> {
        self.levels
            .get(t.edge_count())?
            .iter()
            .find(|(s, _)| s == t)
            .map(|(_, w)| w)
    }

    pub fn trees(&self) -> impl Iterator<Item = &ExoticTree> {
        self.levels.iter().flatten().map(|(t, _)| t)
    }
}

/// All canonical trees with at most `max_order` edges, grouped by edge count.
pub fn enumerate_trees(max_order: usize, rule: Option<&GrowthRule>) -> Vec<Vec<ExoticTree>> {
    let table = match rule {
        Some(r) => GrowthTable::build(max_order, |t| r.admits(t)),
        None => GrowthTable::build(max_order, |_| true),
    };
    table
        .levels
        .into_iter()
        .map(|l| l.into_iter().map(|(t, _)| t).collect())
        .collect()
}

static FACTORIALS: LazyLock<RwLock<HashMap<String, BigRational>>> = LazyLock::new(Default::default);

/// Exotic tree factorial from the leaf-removal recursion `|τ|/τ! = Σ 1/τ'!`.
pub fn tree_factorial(t: &ExoticTree) -> BigRational {
    if t.len() == 1 {
        return BigRational::one();
    }
    if let Some(v) = FACTORIALS.read().expect("memo lock").get(t.key()) {
        return v.clone();
    }
    let mut sum = BigRational::zero();
    for (sub, count) in removal_multiset(t).entries.values() {
        sum += BigRational::from_integer(BigInt::from(*count)) / tree_factorial(sub);
    }
    let value = BigRational::from_integer(BigInt::from(t.exotic_order())) / sum;
    FACTORIALS
        .write()
        .expect("memo lock")
        .insert(t.key().to_string(), value.clone());
    value
}

/// `|τ|! / (σ τ!)`.
pub fn cm_weight(t: &ExoticTree) -> BigRational {
    factorial_q(t.exotic_order())
        / (BigRational::from_integer(BigInt::from(t.automorphism_count())) * tree_factorial(t))
}

/// Weighted count of natural-growth histories ending at `t`, half weight per pair graft.
pub fn cm_weight_by_growth(t: &ExoticTree) -> BigRational {
    let rule = GrowthRule::enclosing(t);
    let (alphas, pairs) = (t.alpha_count(), t.beta_count() / 2);
    let table = GrowthTable::build(t.edge_count(), |s| {
        s.alpha_count() <= alphas && s.beta_count() / 2 <= pairs && rule.admits(s)
    });
    table.cm_of(t).cloned().expect("valid trees are reachable by growth")
}

/// `r` with `Π_t(τ) = r t^{edge_count}`.
pub fn realization_coefficient(t: &ExoticTree) -> BigRational {
    factorial_q(t.exotic_order()) / (tree_factorial(t) * factorial_q(t.edge_count()))
}

/// Number of linear extensions, by dynamic programming over down-sets.
pub fn linear_extensions(p: &MergedPoset) -> BigUint {
    let n = p.len();
    assert!(n <= 63, "poset too large for down-set enumeration");
    let mut below = vec![0u64; n];
    for &(lo, hi) in &p.covers {
        below[hi] |= 1 << lo;
    }
    let full = if n == 0 { 0 } else { u64::MAX >> (64 - n) };
    let mut memo: HashMap<u64, BigUint> = HashMap::new();
    fn count(s: u64, full: u64, below: &[u64], memo: &mut HashMap<u64, BigUint>) -> BigUint {
        if s == full {
            return BigUint::one();
        }
        if let Some(v) = memo.get(&s) {
            return v.clone();
        }
        let mut total = BigUint::zero();
        for (x, &b) in below.iter().enumerate() {
            if s & (1 << x) == 0 && b & !s == 0 {
                total += count(s | (1 << x), full, below, memo);
            }
        }
        memo.insert(s, total.clone());
        total
    }
    count(0, full, &below, &mut memo)
}

#[cfg(test)]
mod tests;
