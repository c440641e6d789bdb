use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::growth::{
    classical_symmetry, classical_tree_factorial, effective_cut_multiset, graft_alpha, graft_beta_pair,
    linear_extensions, realization_coefficient, reduction_sum, removal_multiset, tree_factorial, GrowthRule,
    GrowthTable, RemovalMultiset,
};
use crate::jets::{
    elementary_differential, iterated_generator, jet_from_spec, jet_product, apply_generator, FunctionSpec, Jet, Scalar,
};
use crate::multiindex::{
    contraction_oracle, counting_map, elementary_differential_multi, enumerate_populated, realization_from_trees,
    symmetry_factor_multi, FeynmanMultiIndex,
};
use crate::rational::{factorial_q, uint};
use crate::series::{expand_by_classical_trees, expand_by_multiindices, expand_by_operator, expand_by_trees, SdeProblem};
use crate::tree::{format_tree, merged_poset, parse_tree, ExoticTree};

type Q = BigRational;

/// Symmetry factor and tree factorial as seen by the suite; replaceable to test the harness itself.
pub trait TreeWeights: Sync {
    fn symmetry(&self, t: &ExoticTree) -> Q {
        Q::from_integer(BigInt::from(t.automorphism_count()))
    }

    fn tree_factorial(&self, t: &ExoticTree) -> Q {
        tree_factorial(t)
    }
}

pub struct StandardWeights;

impl TreeWeights for StandardWeights {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteConfig {
    /// largest edge count of enumerated trees
    pub max_order: usize,
    /// largest length `[γ]` of checked multi-indices
    pub multi_max_length: usize,
    /// random problems per series-level identity
    pub series_problems: usize,
    pub series_order: usize,
    pub seed: u64,
}

impl SuiteConfig {
    pub fn new(max_order: usize) -> Self {
        SuiteConfig {
            max_order,
            multi_max_length: (max_order + 1).min(5),
            series_problems: 3,
            series_order: max_order.min(5),
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub identity: String,
    pub max_order: usize,
    pub checked_count: usize,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Random problem with rational polynomial coefficients of degree at most `max_degree`.
pub fn random_polynomial_problem(seed: u64, max_degree: usize, beta_zero: bool) -> SdeProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = |rng: &mut ChaCha8Rng| Q::new(rng.random_range(-4i64..=4).into(), rng.random_range(1i64..=4).into());
    let poly = |rng: &mut ChaCha8Rng| {
        let deg = rng.random_range(0..=max_degree);
        FunctionSpec::poly(&(0..=deg).map(|_| q(rng)).collect::<Vec<_>>())
    };
    let alpha = poly(&mut rng);
    let beta = if beta_zero { FunctionSpec::poly_i64(&[0]) } else { poly(&mut rng) };
    let f = poly(&mut rng);
    let u0 = Q::new(rng.random_range(-3i64..=3).into(), rng.random_range(1i64..=3).into());
    SdeProblem::new(alpha, beta, f, Scalar::Exact(u0)).expect("polynomial problems are exact")
}

fn q(n: u64) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn cut_sum(m: &RemovalMultiset, f: impl Fn(&ExoticTree) -> Q) -> Q {
    m.entries.values().fold(Q::zero(), |acc, (t, c)| acc + q(*c) * f(t))
}

struct Ctx<'a> {
    w: &'a dyn TreeWeights,
    cfg: &'a SuiteConfig,
    levels: Vec<Vec<(ExoticTree, Q)>>,
    cm: HashMap<ExoticTree, Q>,
}

impl Ctx<'_> {
    fn report(&self, identity: &str, checked: usize, failure: Option<String>) -> IdentityReport {
        IdentityReport {
            identity: identity.to_string(),
            max_order: self.cfg.max_order,
            checked_count: checked,
            status: if failure.is_some() { Status::Fail } else { Status::Pass },
            counterexample: failure,
        }
    }

    /// Runs `check` on every tree with at least `min_order` edges; reports the first failure in key order.
    fn over_trees(&self, identity: &str, min_order: usize, check: impl Fn(&ExoticTree) -> bool + Sync) -> IdentityReport {
        let trees: Vec<&ExoticTree> = self.levels.iter().skip(min_order).flatten().map(|(t, _)| t).collect();
        let failure = trees.par_iter().find_map_first(|t| (!check(t)).then(|| t.key().to_string()));
        self.report(identity, trees.len(), failure)
    }

    fn exotic_fact(&self, t: &ExoticTree) -> Q {
        factorial_q(t.exotic_order()) / self.w.tree_factorial(t)
    }

    fn random_jets(&self, salt: u64, order: usize) -> [Jet<Q>; 3] {
        let p = random_polynomial_problem(self.cfg.seed ^ salt, 3, false);
        let u0 = p.u0.as_exact().expect("exact").clone();
        [&p.alpha, &p.beta, &p.f].map(|s| jet_from_spec(s, &u0, order).expect("polynomial jets exist"))
    }
}

pub fn identity_suite(max_order: usize) -> Vec<IdentityReport> {
    identity_suite_with(&StandardWeights, &SuiteConfig::new(max_order))
}

pub fn identity_suite_with(weights: &dyn TreeWeights, cfg: &SuiteConfig) -> Vec<IdentityReport> {
    let table = GrowthTable::build(cfg.max_order, |_| true);
    let cm = table.levels.iter().flatten().cloned().collect();
    let ctx = Ctx { w: weights, cfg, levels: table.levels, cm };
    let mut out = Vec::new();
    let w = ctx.w;

    out.push(ctx.over_trees("parse_format_roundtrip", 0, |t| {
        parse_tree(&format_tree(t)).is_ok_and(|s| s == *t)
    }));
    out.push(ctx.over_trees("merged_poset_size", 0, |t| merged_poset(t).len() + 1 == t.exotic_order()));
    out.push(ctx.over_trees("kreimer_recursion", 1, |t| {
        let rhs = cut_sum(&removal_multiset(t), |s| Q::one() / w.tree_factorial(s));
        q(t.exotic_order() as u64) / w.tree_factorial(t) == rhs
    }));
    out.push(ctx.over_trees("cm_recursion", 1, |t| {
        let rhs = cut_sum(&removal_multiset(t), |s| w.symmetry(s) * &ctx.cm[s]);
        w.symmetry(t) * &ctx.cm[t] == rhs
    }));
    out.push(ctx.over_trees("growth_cm", 0, |t| {
        factorial_q(t.exotic_order()) / (w.symmetry(t) * w.tree_factorial(t)) == ctx.cm[t]
    }));
    out.push(ctx.over_trees("effective_cut", 1, |t| {
        ctx.exotic_fact(t) == cut_sum(&effective_cut_multiset(t), |s| ctx.exotic_fact(s))
    }));
    out.push(ctx.over_trees("linear_extensions", 0, |t| {
        let n = uint(&linear_extensions(&merged_poset(t)));
        ctx.exotic_fact(t) == n && realization_coefficient(t) * factorial_q(t.edge_count()) == n
    }));
    out.push(ctx.over_trees("reduction", 0, |t| {
        ctx.exotic_fact(t) == uint(&reduction_sum(t))
    }));
    out.push(ctx.over_trees("classical_agreement", 0, |t| {
        if !t.is_beta_free() {
            return true;
        }
        let tf = uint(&classical_tree_factorial(t));
        w.tree_factorial(t) == tf && w.symmetry(t) == uint(&classical_symmetry(t))
    }));
    out.push(ctx.over_trees("psi_populated", 0, |t| {
        let g = counting_map(t).gradings();
        g.populated && g.length == t.exotic_order()
    }));
    let [alpha, beta, f] = ctx.random_jets(1, 2 * cfg.max_order + 1);
    out.push(ctx.over_trees("upsilon_multi", 0, |t| {
        elementary_differential(t, &alpha, &beta, &f).ok()
            == elementary_differential_multi(&counting_map(t), &alpha, &beta, &f).ok()
    }));

    out.extend(multi_identities(&ctx));
    out.push(grafting_leibniz(&ctx));
    out.push(generator_tree(&ctx));
    out.extend(series_identities(&ctx));
    out
}

fn multi_identities(ctx: &Ctx) -> Vec<IdentityReport> {
    let len = ctx.cfg.multi_max_length.min(ctx.cfg.max_order + 1);
    let mut groups: BTreeMap<FeynmanMultiIndex, Vec<ExoticTree>> = BTreeMap::new();
    for (t, _) in ctx.levels.iter().take(len).flatten() {
        groups.entry(counting_map(t)).or_default().push(t.clone());
    }
    let indices = if len == 0 { Vec::new() } else { enumerate_populated(len, &GrowthRule::default()) };
    let results: Vec<(FeynmanMultiIndex, BTreeMap<String, u64>)> = indices
        .par_iter()
        .map(|g| (g.clone(), contraction_oracle(g).expect("indices of length ≤ 5 have at most 8 legs")))
        .collect();
    let empty = Vec::new();

    let mut orbit = None;
    let mut image = None;
    let mut phi = None;
    let mut real = None;
    for (g, oracle) in &results {
        let trees = groups.get(g).unwrap_or(&empty);
        let sf = uint(&symmetry_factor_multi(g));
        let want: BTreeMap<String, Q> = trees.iter().map(|t| (t.key().to_string(), &sf / ctx.w.symmetry(t))).collect();
        let got: BTreeMap<String, Q> = oracle.iter().map(|(k, &c)| (k.clone(), q(c))).collect();
        if orbit.is_none() && want != got {
            orbit = Some(g.to_string());
        }
        // image of Ψ is exactly the populated indices with at least one admissible pairing
        if image.is_none() && trees.is_empty() != oracle.is_empty() {
            image = Some(g.to_string());
        }
        if phi.is_none() && want.values().any(|x| !x.is_integer() || *x < Q::one()) {
            phi = Some(g.to_string());
        }
        let by_pairings = oracle.iter().fold(BTreeMap::new(), |mut acc: BTreeMap<usize, Q>, (k, &c)| {
            let t = parse_tree(k).expect("oracle keys parse");
            *acc.entry(t.edge_count()).or_insert_with(Q::zero) += q(c) * realization_coefficient(&t);
            acc
        });
        if real.is_none() && realization_from_trees(g, trees) != by_pairings {
            real = Some(g.to_string());
        }
    }
    let covered = groups.keys().all(|g| results.iter().any(|(h, _)| h == g));
    if image.is_none() && !covered {
        image = groups.keys().find(|g| !results.iter().any(|(h, _)| h == *g)).map(|g| g.to_string());
    }
    let n = results.len();
    vec![
        ctx.report("orbit_stabilizer", n, orbit),
        ctx.report("psi_image", n, image),
        ctx.report("phi_weights", n, phi),
        ctx.report("realization_multi_pairings", n, real),
    ]
}

/// `L Υ(τ) = Υ(• ↷ τ) + ½ Υ(⫶ ↷ τ)`, with the left side from jets of `u ↦ Υ_u(τ)`.
fn grafting_leibniz(ctx: &Ctx) -> IdentityReport {
    let top = ctx.cfg.max_order.min(4);
    // a root with `top` pairs has fertility `2 top`
    let [alpha, beta, f] = ctx.random_jets(2, 2 * top + 4);
    let shift = |j: &Jet<Q>, n: usize| Jet::new(j.base.clone(), j.d[n..].to_vec());
    let trees: Vec<&ExoticTree> = ctx.levels.iter().take(top + 1).flatten().map(|(t, _)| t).collect();
    let failure = trees.par_iter().find_map_first(|t| {
        let mut jet = shift(&f, t.fertility(0));
        for v in 1..t.len() {
            let src = if t.kind(v) == crate::tree::VertexKind::Alpha { &alpha } else { &beta };
            jet = jet_product(&jet, &shift(src, t.fertility(v))).expect("same base");
        }
        let lhs = apply_generator(&jet, &alpha, &beta).expect("enough order").value().clone();
        let mut rhs = Q::zero();
        for m in [graft_alpha(t), graft_beta_pair(t)] {
            for e in m.iter() {
                rhs += &e.weight * elementary_differential(&e.tree, &alpha, &beta, &f).expect("enough order");
            }
        }
        (lhs != rhs).then(|| t.key().to_string())
    });
    ctx.report("grafting_leibniz", trees.len(), failure)
}

/// `L^k f(u0) = Σ_{|τ| = k+1} |τ|!/(σ τ!) Υ(τ)`.
fn generator_tree(ctx: &Ctx) -> IdentityReport {
    let top = ctx.cfg.max_order.min(5);
    let mut checked = 0;
    for salt in 0..ctx.cfg.series_problems as u64 {
        let [alpha, beta, f] = ctx.random_jets(100 + salt, 2 * top);
        for (k, level) in ctx.levels.iter().enumerate().take(top + 1) {
            let lhs = iterated_generator(k, &alpha, &beta, &f).expect("enough order");
            let rhs = level
                .par_iter()
                .map(|(t, _)| {
                    factorial_q(t.exotic_order()) / (ctx.w.symmetry(t) * ctx.w.tree_factorial(t))
                        * elementary_differential(t, &alpha, &beta, &f).expect("enough order")
                })
                .reduce(Q::zero, |a, b| a + b);
            checked += 1;
            if lhs != rhs {
                return ctx.report("generator_tree", checked, Some(format!("problem {salt}, k = {k}")));
            }
        }
    }
    ctx.report("generator_tree", checked, None)
}

fn series_identities(ctx: &Ctx) -> Vec<IdentityReport> {
    let order = ctx.cfg.series_order;
    let mut triple = None;
    let mut classical = None;
    for i in 0..ctx.cfg.series_problems as u64 {
        let p = random_polynomial_problem(ctx.cfg.seed.wrapping_add(1000 + i), 3, false);
        let t = expand_by_trees(&p, order).expect("polynomial problems expand");
        let agree = expand_by_multiindices(&p, order).is_ok_and(|m| m == t) && expand_by_operator(&p, order).is_ok_and(|o| o == t);
        if triple.is_none() && !agree {
            triple = Some(p.to_json());
        }
        let d = random_polynomial_problem(ctx.cfg.seed.wrapping_add(2000 + i), 3, true);
        let t = expand_by_trees(&d, order).expect("polynomial problems expand");
        let agree = expand_by_classical_trees(&d, order).is_ok_and(|c| c == t) && expand_by_operator(&d, order).is_ok_and(|o| o == t);
        if classical.is_none() && !agree {
            classical = Some(d.to_json());
        }
    }
    let n = ctx.cfg.series_problems;
    vec![ctx.report("triple_equality", n, triple), ctx.report("deterministic_degeneration", n, classical)]
}
