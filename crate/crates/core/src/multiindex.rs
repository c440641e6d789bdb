//! Feynman multi-indices: fertility counters of pre-Feynman diagrams.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::growth::{enumerate_trees, realization_coefficient, FertilityBound, GrowthRule};
use crate::jets::{Field, Jet, JetError};
use crate::rational::factorial;
use crate::tree::{ExoticTree, TreeBuilder, VertexKind};

/// Largest ψ-leg count accepted by [`contraction_oracle`].
pub const ORACLE_MAX_LEGS: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeynmanMultiIndex {
    /// fertility of the root
    pub root: usize,
    /// fertility -> number of α vertices
    pub alpha: BTreeMap<usize, usize>,
    /// `(k1, k2)` with `k1 <= k2` -> number of β pairs
    pub beta: BTreeMap<(usize, usize), usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MultiGradings {
    pub length: usize,
    pub psi_legs: usize,
    pub tilde_legs: usize,
    pub alpha_length: usize,
    pub beta_length: usize,
    pub root_length: usize,
    pub populated: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MultiError {
    #[error("multi-index `{0}` is not populated")]
    Unpopulated(String),
    #[error("{legs} ψ-legs exceed the pairing enumeration limit of {max}")]
    TooManyLegs { legs: usize, max: usize },
    #[error("edge count {order} exceeds the enumeration guard {guard}")]
    OrderGuard { order: usize, guard: usize },
    #[error("invalid multi-index `{text}`: {message}")]
    Parse { text: String, message: String },
}

impl FeynmanMultiIndex {
    pub fn new(root: usize) -> Self {
        FeynmanMultiIndex { root, alpha: BTreeMap::new(), beta: BTreeMap::new() }
    }

    pub fn with_alpha(mut self, fertility: usize, count: usize) -> Self {
        if count > 0 {
            *self.alpha.entry(fertility).or_insert(0) += count;
        }
        self
    }

    pub fn with_beta(mut self, k1: usize, k2: usize, count: usize) -> Self {
        if count > 0 {
            *self.beta.entry((k1.min(k2), k1.max(k2))).or_insert(0) += count;
        }
        self
    }

    pub fn gradings(&self) -> MultiGradings {
        let na: usize = self.alpha.values().sum();
        let nb: usize = self.beta.values().sum();
        let psi = self.root
            + self.alpha.iter().map(|(n, c)| n * c).sum::<usize>()
            + self.beta.iter().map(|((a, b), c)| (a + b) * c).sum::<usize>();
        let tilde = na + 2 * nb;
        MultiGradings {
            length: na + nb + 1,
            psi_legs: psi,
            tilde_legs: tilde,
            alpha_length: na,
            beta_length: nb,
            root_length: 1,
            populated: psi == tilde,
        }
    }

    pub fn is_populated(&self) -> bool {
        self.gradings().populated
    }

    /// Number of effective edges of every tree with this index.
    pub fn edge_count(&self) -> usize {
        self.gradings().length - 1
    }

    /// Tightest growth rule admitting every tree with this index.
    pub fn rule(&self) -> GrowthRule {
        GrowthRule {
            alpha: FertilityBound::covering(self.alpha.keys().copied()),
            beta: FertilityBound::covering(self.beta.keys().map(|&(_, b)| b)),
            root: FertilityBound::AtMost(self.root),
        }
    }
}

impl fmt::Display for FeynmanMultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b.{}", self.root)?;
        let pow = |c: usize| if c == 1 { String::new() } else { format!("^{c}") };
        for (n, &c) in &self.alpha {
            write!(f, " a{n}{}", pow(c))?;
        }
        for ((a, b), &c) in &self.beta {
            write!(f, " B({a},{b}){}", pow(c))?;
        }
        Ok(())
    }
}

impl FromStr for FeynmanMultiIndex {
    type Err = MultiError;

    /// Grammar: `b.M` once, then any of `aN[^K]` and `B(K1,K2)[^K]`, whitespace separated.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |message: &str| MultiError::Parse { text: text.to_string(), message: message.to_string() };
        let compact: String = {
            // drop whitespace inside parentheses so `B(1, 2)` stays one token
            let mut depth = 0;
            text.chars()
                .filter(|&c| {
                    match c {
                        '(' => depth += 1,
                        ')' => depth -= 1,
                        _ => {}
                    }
                    !(depth > 0 && c.is_whitespace())
                })
                .collect()
        };
        let num = |s: &str| s.parse::<usize>().map_err(|_| err(&format!("expected a count, found `{s}`")));
        let split_pow = |tok: &str| -> Result<(String, usize), MultiError> {
            match tok.split_once('^') {
                Some((base, k)) => Ok((base.to_string(), num(k)?)),
                None => Ok((tok.to_string(), 1)),
            }
        };
        let mut root = None;
        let mut g = FeynmanMultiIndex::new(0);
        for tok in compact.split_whitespace() {
            if let Some(m) = tok.strip_prefix("b.") {
                if root.replace(num(m)?).is_some() {
                    return Err(err("root marker `b.M` given twice"));
                }
            } else if let Some(rest) = tok.strip_prefix('a') {
                let (n, k) = split_pow(rest)?;
                g = g.with_alpha(num(&n)?, k);
            } else if let Some(rest) = tok.strip_prefix('B') {
                let (body, k) = split_pow(rest)?;
                let inner = body
                    .strip_prefix('(')
                    .and_then(|s| s.strip_suffix(')'))
                    .ok_or_else(|| err("expected `B(k1,k2)`"))?;
                let (a, b) = inner.split_once(',').ok_or_else(|| err("expected `B(k1,k2)`"))?;
                g = g.with_beta(num(a)?, num(b)?, k);
            } else {
                return Err(err(&format!("unexpected token `{tok}`")));
            }
        }
        g.root = root.ok_or_else(|| err("missing root marker `b.M`"))?;
        Ok(g)
    }
}

impl Serialize for FeynmanMultiIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub fn multi_gradings(g: &FeynmanMultiIndex) -> MultiGradings {
    g.gradings()
}

/// `σ_F = ∏ γ_α(n)! (n!)^{γ_α(n)+γ_•(n)} · ∏ γ_β(k)! (k1! k2!)^{γ_β(k)} · 2^{Σ γ_β(i,i)}`.
pub fn symmetry_factor_multi(g: &FeynmanMultiIndex) -> BigUint {
    let mut s = factorial(g.root);
    for (&n, &c) in &g.alpha {
        s *= factorial(c) * num_traits::pow(factorial(n), c);
    }
    for (&(a, b), &c) in &g.beta {
        s *= factorial(c) * num_traits::pow(factorial(a) * factorial(b), c);
        if a == b {
            s *= BigUint::one() << c;
        }
    }
    s
}

/// `Ψ`: fertilities of the root, of α vertices and of β pairs.
pub fn counting_map(t: &ExoticTree) -> FeynmanMultiIndex {
    let mut g = FeynmanMultiIndex::new(t.fertility(0));
    for v in 1..t.len() {
        if t.kind(v) == VertexKind::Alpha {
            g = g.with_alpha(t.fertility(v), 1);
        }
    }
    for (v, w) in t.pairs() {
        g = g.with_beta(t.fertility(v), t.fertility(w), 1);
    }
    g
}

/// Trees with `Ψ(τ) = g`, found by enumerating all trees with `g`'s edge count.
pub fn trees_for(g: &FeynmanMultiIndex, guard: usize) -> Result<Vec<ExoticTree>, MultiError> {
    if !g.is_populated() {
        return Err(MultiError::Unpopulated(g.to_string()));
    }
    let order = g.edge_count();
    if order > guard {
        return Err(MultiError::OrderGuard { order, guard });
    }
    let rule = g.rule();
    let levels = enumerate_trees(order, Some(&rule));
    Ok(levels[order].iter().filter(|t| counting_map(t) == *g).cloned().collect())
}

/// Groups trees by their multi-index.
pub fn group_by_multiindex<'a>(trees: impl IntoIterator<Item = &'a ExoticTree>) -> HashMap<FeynmanMultiIndex, Vec<ExoticTree>> {
    let mut out: HashMap<FeynmanMultiIndex, Vec<ExoticTree>> = HashMap::new();
    for t in trees {
        out.entry(counting_map(t)).or_default().push(t.clone());
    }
    out
}

fn phi_weights(g: &FeynmanMultiIndex, trees: &[ExoticTree]) -> Vec<(ExoticTree, BigRational)> {
    let sf = BigInt::from(symmetry_factor_multi(g));
    trees
        .iter()
        .map(|t| (t.clone(), BigRational::new(sf.clone(), BigInt::from(t.automorphism_count()))))
        .collect()
}

/// `Φ(γ) = Σ_{Ψ(τ)=γ} (σ_F/σ_e) τ`.
pub fn phi_expand(g: &FeynmanMultiIndex, guard: usize) -> Result<Vec<(ExoticTree, BigRational)>, MultiError> {
    Ok(phi_weights(g, &trees_for(g, guard)?))
}

/// Counts leg pairings of the pre-Feynman diagram of `g`, bucketed by resulting tree.
///
/// Pairings with self-loops, directed cycles (also after merging pairs) or
/// disconnected pieces are discarded.
pub fn contraction_oracle(g: &FeynmanMultiIndex) -> Result<BTreeMap<String, u64>, MultiError> {
    let gr = g.gradings();
    if !gr.populated {
        return Err(MultiError::Unpopulated(g.to_string()));
    }
    if gr.psi_legs > ORACLE_MAX_LEGS {
        return Err(MultiError::TooManyLegs { legs: gr.psi_legs, max: ORACLE_MAX_LEGS });
    }
    let mut kinds = vec![VertexKind::Root];
    let mut fert = vec![g.root];
    for (&n, &c) in &g.alpha {
        for _ in 0..c {
            kinds.push(VertexKind::Alpha);
            fert.push(n);
        }
    }
    let mut id = 0;
    for (&(a, b), &c) in &g.beta {
        for _ in 0..c {
            id += 1;
            kinds.extend([VertexKind::Beta(id), VertexKind::Beta(id)]);
            fert.extend([a, b]);
        }
    }
    // owner vertex of every ψ-leg
    let legs: Vec<usize> = fert.iter().enumerate().flat_map(|(v, &f)| std::iter::repeat_n(v, f)).collect();
    let n = kinds.len();

    let partner: Vec<Option<usize>> = (0..n)
        .map(|v| match kinds[v] {
            VertexKind::Beta(id) => (0..n).find(|&w| w != v && kinds[w] == VertexKind::Beta(id)),
            _ => None,
        })
        .collect();

    // would `owner -> v` close a directed cycle once pairs are merged?
    fn closes_cycle(v: usize, owner: usize, parent: &[Option<usize>], partner: &[Option<usize>]) -> bool {
        let mut stack = vec![owner];
        let mut seen = 0u64;
        while let Some(x) = stack.pop() {
            if x == v || partner[v] == Some(x) {
                return true;
            }
            if seen & (1 << x) != 0 {
                continue;
            }
            seen |= 1 << x;
            stack.extend(parent[x]);
            if let Some(y) = partner[x] {
                seen |= 1 << y;
                stack.extend(parent[y]);
            }
        }
        false
    }

    struct Walk<'a> {
        kinds: &'a [VertexKind],
        legs: &'a [usize],
        partner: &'a [Option<usize>],
    }

    fn assign(w: &Walk, v: usize, used: &mut Vec<bool>, parent: &mut Vec<Option<usize>>, out: &mut BTreeMap<String, u64>) {
        if v == w.kinds.len() {
            if let Ok(t) = TreeBuilder::from_parts(w.kinds.to_vec(), parent.clone()).build() {
                *out.entry(t.key().to_string()).or_insert(0) += 1;
            }
            return;
        }
        for (i, &owner) in w.legs.iter().enumerate() {
            if used[i] || closes_cycle(v, owner, parent, w.partner) {
                continue;
            }
            used[i] = true;
            parent[v] = Some(owner);
            assign(w, v + 1, used, parent, out);
            used[i] = false;
        }
        parent[v] = None;
    }

    if n == 1 {
        return Ok(BTreeMap::from([("o".to_string(), 1)]));
    }
    // split on the leg taken by vertex 1
    let walk = Walk { kinds: &kinds, legs: &legs, partner: &partner };
    let parts: Vec<BTreeMap<String, u64>> = (0..legs.len())
        .into_par_iter()
        .filter(|&i| !closes_cycle(1, legs[i], &vec![None; n], &partner))
        .map(|i| {
            let mut used = vec![false; legs.len()];
            let mut parent = vec![None; n];
            used[i] = true;
            parent[1] = Some(legs[i]);
            let mut out = BTreeMap::new();
            assign(&walk, 2, &mut used, &mut parent, &mut out);
            out
        })
        .collect();
    let mut total = BTreeMap::new();
    for p in parts {
        for (k, c) in p {
            *total.entry(k).or_insert(0) += c;
        }
    }
    Ok(total)
}

/// `Π_t(γ)` as a map from power of `t` to coefficient; zero for unpopulated indices.
pub fn realization_multi(g: &FeynmanMultiIndex, guard: usize) -> Result<BTreeMap<usize, BigRational>, MultiError> {
    if !g.is_populated() {
        return Ok(BTreeMap::new());
    }
    Ok(realization_from_trees(g, &trees_for(g, guard)?))
}

pub(crate) fn realization_from_trees(g: &FeynmanMultiIndex, trees: &[ExoticTree]) -> BTreeMap<usize, BigRational> {
    let mut out = BTreeMap::new();
    for (t, w) in phi_weights(g, trees) {
        let e = out.entry(t.edge_count()).or_insert_with(BigRational::zero);
        *e += w * realization_coefficient(&t);
    }
    out.retain(|_, c: &mut BigRational| !c.is_zero());
    out
}

/// `f^{(m)} ∏ (α^{(n)})^{γ_α(n)} ∏ (β^{(k1)} β^{(k2)})^{γ_β(k)}` at the base point.
pub fn elementary_differential_multi<F: Field>(
    g: &FeynmanMultiIndex,
    alpha: &Jet<F>,
    beta: &Jet<F>,
    f: &Jet<F>,
) -> Result<F, JetError> {
    let mut acc = f.deriv(g.root)?.clone();
    for (&n, &c) in &g.alpha {
        let x = alpha.deriv(n)?;
        for _ in 0..c {
            acc = acc * x.clone();
        }
    }
    for (&(a, b), &c) in &g.beta {
        let x = beta.deriv(a)?.clone() * beta.deriv(b)?.clone();
        for _ in 0..c {
            acc = acc * x.clone();
        }
    }
    Ok(acc)
}

/// Every populated multi-index with `[γ] <= max_length` allowed by `rule`.
pub fn enumerate_populated(max_length: usize, rule: &GrowthRule) -> Vec<FeynmanMultiIndex> {
    let allows = |b: FertilityBound, f: usize| match b {
        FertilityBound::Unbounded => true,
        FertilityBound::AtMost(m) => f <= m,
        FertilityBound::Forbidden => false,
    };
    let mut out = Vec::new();
    for length in 1..=max_length {
        let e = length - 1;
        for nb in 0..=e {
            let na = e - nb;
            if (na > 0 && rule.alpha == FertilityBound::Forbidden) || (nb > 0 && rule.beta == FertilityBound::Forbidden) {
                continue;
            }
            let total = na + 2 * nb;
            for m in 0..=total {
                if m > 0 && !allows(rule.root, m) {
                    continue;
                }
                let mut alphas = Vec::new();
                multisets(na, 0, total - m, &mut alphas, &mut |a| {
                    if !a.iter().all(|&f| allows(rule.alpha, f)) {
                        return;
                    }
                    let left = total - m - a.iter().sum::<usize>();
                    let mut pairs = Vec::new();
                    pair_multisets(nb, (0, 0), left, &mut pairs, &mut |p| {
                        if left != p.iter().map(|(x, y)| x + y).sum::<usize>() {
                            return;
                        }
                        if !p.iter().all(|&(_, y)| allows(rule.beta, y)) {
                            return;
                        }
                        let mut g = FeynmanMultiIndex::new(m);
                        for &f in a.iter() {
                            g = g.with_alpha(f, 1);
                        }
                        for &(x, y) in p.iter() {
                            g = g.with_beta(x, y, 1);
                        }
                        out.push(g);
                    });
                });
            }
        }
    }
    out.sort();
    out
}

/// Nondecreasing sequences of length `k` starting at `lo` with sum at most `budget`.
fn multisets(k: usize, lo: usize, budget: usize, acc: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if k == 0 {
        f(acc);
        return;
    }
    for x in lo..=budget {
        if x * k > budget {
            break;
        }
        acc.push(x);
        multisets(k - 1, x, budget - x, acc, f);
        acc.pop();
    }
}

/// Nondecreasing sequences of ordered pairs `(a <= b)` with total at most `budget`.
fn pair_multisets(k: usize, lo: (usize, usize), budget: usize, acc: &mut Vec<(usize, usize)>, f: &mut dyn FnMut(&[(usize, usize)])) {
    if k == 0 {
        f(acc);
        return;
    }
    for a in 0..=budget {
        for b in a..=budget - a {
            if (a, b) < lo {
                continue;
            }
            acc.push((a, b));
            pair_multisets(k - 1, (a, b), budget - a - b, acc, f);
            acc.pop();
        }
    }
}
