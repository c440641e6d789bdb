use super::*;
use crate::rational::{factorial, int, uint};
use crate::testutil::random_builder;
use crate::tree::merged_poset;
use proptest::prelude::*;

fn t(s: &str) -> ExoticTree {
    ExoticTree::parse(s).unwrap()
}

fn q(p: i64, r: i64) -> BigRational {
    BigRational::new(p.into(), r.into())
}

fn mults(m: &WeightedTreeMultiset) -> Vec<(String, u64)> {
    m.iter().map(|e| (e.tree.key().to_string(), e.multiplicity)).collect()
}

#[test]
fn graft_alpha_examples() {
    assert_eq!(mults(&graft_alpha(&t("o"))), vec![("o(a)".into(), 1)]);
    let m = graft_alpha(&t("o(a)"));
    assert_eq!(m.get("o(a(a))").unwrap().multiplicity, 1);
    assert_eq!(m.get("o(a,a)").unwrap().multiplicity, 1);
    let m = graft_alpha(&t("o(a,a)"));
    assert_eq!(m.len(), 2);
    assert_eq!(m.get(t("o(a(a),a)").key()).unwrap().multiplicity, 2);
    assert_eq!(m.get("o(a,a,a)").unwrap().weight, int(1));
}

#[test]
fn graft_beta_examples() {
    let m = graft_beta_pair(&t("o"));
    let e = m.get("o(b#1,b#1)").unwrap();
    assert_eq!((e.multiplicity, e.weight.clone()), (1, q(1, 2)));
    let m = graft_beta_pair(&t("o(a,a)"));
    let e = m.get("o(a(b#1),a(b#1))").unwrap();
    assert_eq!((e.multiplicity, e.weight.clone()), (2, int(1)));
    let m = graft_beta_pair(&t("o(a)"));
    assert_eq!(m.len(), 3);
    assert_eq!(m.iter().map(|e| e.multiplicity).sum::<u64>(), 4);
    assert_eq!(m.get(t("o(a,b#1,b#1)").key()).is_some(), true);
    assert_eq!(m.get(t("o(b#1,a(b#1))").key()).unwrap().multiplicity, 2);
}

#[test]
fn graft_sites_sum_to_vertex_counts() {
    for s in ["o(a(b#1),a(b#1),a)", "o(a(b#1,b#1,b#2,b#2))", "o(a(a,a),a(a,a))"] {
        let x = t(s);
        let n = x.len() as u64;
        assert_eq!(graft_alpha(&x).iter().map(|e| e.multiplicity).sum::<u64>(), n);
        assert_eq!(graft_beta_pair(&x).iter().map(|e| e.multiplicity).sum::<u64>(), n * n);
    }
}

#[test]
fn enumeration_examples() {
    let l = enumerate_trees(0, None);
    assert_eq!(l, vec![vec![t("o")]]);
    let l = enumerate_trees(1, None);
    assert_eq!(l[1], vec![t("o(a)"), t("o(b#1,b#1)")]);
    let ou = GrowthRule {
        alpha: FertilityBound::AtMost(1),
        beta: FertilityBound::AtMost(0),
        root: FertilityBound::AtMost(1),
    };
    let l = enumerate_trees(3, Some(&ou));
    assert_eq!(l[1], vec![t("o(a)")]);
    assert_eq!(l[3], vec![t("o(a(a(a)))")]);
}

#[test]
fn enumeration_counts() {
    let sizes: Vec<usize> = enumerate_trees(4, None).iter().map(Vec::len).collect();
    // β-free parts reproduce the rooted tree counts 1, 1, 2, 4, 9
    let classical: Vec<usize> = enumerate_trees(4, Some(&"b:none".parse().unwrap()))
        .iter()
        .map(Vec::len)
        .collect();
    assert_eq!(classical, vec![1, 1, 2, 4, 9]);
    // edge count 2: two β-free trees, three pair grafts on o(a), one α and four pair grafts on o(b#1,b#1)
    assert_eq!(&sizes[..3], &[1, 2, 10]);
}

#[test]
fn rule_parsing() {
    let r: GrowthRule = "a:1,b:0,root:1".parse().unwrap();
    assert_eq!(r.alpha, FertilityBound::AtMost(1));
    assert_eq!(r.beta, FertilityBound::AtMost(0));
    assert_eq!(r.to_string().parse::<GrowthRule>().unwrap(), r);
    assert!("a:x".parse::<GrowthRule>().is_err());
    assert!("c:1".parse::<GrowthRule>().is_err());
}

#[test]
fn removal_examples() {
    let r = removal_multiset(&t("o(a,a(b#1,b#1),a)"));
    assert_eq!(r.get("o(a,a,a)"), Some(1));
    assert_eq!(r.get(t("o(a,a(b#1,b#1))").key()), Some(2));
    let r = removal_multiset(&t("o(a(b#1),a(b#1))"));
    assert_eq!(r.entries.len(), 1);
    assert_eq!(r.get("o(a,a)"), Some(1));
    let r = removal_multiset(&t("o(a,a)"));
    assert_eq!(r.get("o(a)"), Some(2));
}

#[test]
fn factorial_examples() {
    for (s, v) in [
        ("o(a)", 2),
        ("o(a(a))", 6),
        ("o(a,a)", 3),
        ("o(a(b#1),a(b#1))", 12),
        ("o(a(a),a)", 8),
        ("o(a(b#1),a(b#1),a)", 15),
        ("o(a,a(b#1,b#1),a)", 10),
    ] {
        assert_eq!(tree_factorial(&t(s)), int(v), "{s}");
    }
    assert_eq!(tree_factorial(&t("o")), int(1));
}

#[test]
fn cm_examples() {
    assert_eq!(cm_weight(&t("o(a,a)")), int(1));
    assert_eq!(cm_weight(&t("o(a(b#1),a(b#1),a)")), int(4));
    assert_eq!(cm_weight(&t("o(a,a(b#1,b#1),a)")), int(3));
    assert_eq!(cm_weight(&t("o(a(b#1,b#1,b#2,b#2))")), q(1, 4));
    assert_eq!(cm_weight_by_growth(&t("o(a(a),a)")), int(3));
    assert_eq!(cm_weight_by_growth(&t("o(a(b#1),a(b#1))")), int(1));
    assert_eq!(cm_weight_by_growth(&t("o(b#1,b#1)")), q(1, 2));
    assert_eq!(cm_weight_by_growth(&t("o(a(b#1,b#1,b#2,b#2))")), q(1, 4));
}

#[test]
fn effective_cut_examples() {
    let c = effective_cut_multiset(&t("o(a(b#1),a(b#1))"));
    assert_eq!(c.entries.len(), 1);
    assert_eq!(c.get(t("o(b#1,a(b#1))").key()), Some(2));
    let c = effective_cut_multiset(&t("o(a(a))"));
    assert_eq!(c.get("o(a)"), Some(1));
    let c = effective_cut_multiset(&t("o(b#1,b#1)"));
    assert_eq!(c.get("o"), Some(1));
}

#[test]
fn reduction_examples() {
    let r = reduce_tree(&t("o(a(b#1),a(b#1))"));
    assert_eq!(r.entries.len(), 1);
    assert_eq!(r.get("o(a(a(a)))"), Some(2));
    let x = t("o(a(a),a)");
    assert_eq!(reduce_tree(&x).get(x.key()), Some(1));
    let r = reduce_tree(&t("o(a(b#1),a(b#1,a))"));
    assert_eq!(r.entries.len(), 2);
    assert_eq!(r.total_sites(), 2);
    // paired pair sharing a parent merges without shuffles
    let r = reduce_tree(&t("o(a(b#1,b#1))"));
    assert_eq!(r.get("o(a(a))"), Some(1));
}

#[test]
fn linear_extension_examples() {
    assert_eq!(linear_extensions(&merged_poset(&t("o(a(b#1),a(b#1))"))), BigUint::from(2u32));
    assert_eq!(linear_extensions(&merged_poset(&t("o(a(a))"))), BigUint::from(1u32));
    assert_eq!(linear_extensions(&merged_poset(&t("o(a,a,a,a)"))), factorial(4));
    assert_eq!(linear_extensions(&merged_poset(&t("o"))), BigUint::from(1u32));
}

#[test]
fn realization_examples() {
    assert_eq!(realization_coefficient(&t("o(a(b#1),a(b#1))")), q(1, 3));
    assert_eq!(realization_coefficient(&t("o(a)")), int(1));
    assert_eq!(realization_coefficient(&t("o(a(a))")), q(1, 2));
}

#[test]
fn classical_oracles() {
    let x = t("o(a(a),a(a),a)");
    assert_eq!(classical_symmetry(&x), BigUint::from(2u32));
    assert_eq!(uint(&classical_tree_factorial(&x)), tree_factorial(&x));
}

fn brute_linear_extensions(p: &MergedPoset) -> u64 {
    fn go(placed: &mut Vec<usize>, p: &MergedPoset) -> u64 {
        if placed.len() == p.len() {
            return 1;
        }
        let mut total = 0;
        for x in 0..p.len() {
            if placed.contains(&x) || !p.covers.iter().all(|&(lo, hi)| hi != x || placed.contains(&lo)) {
                continue;
            }
            placed.push(x);
            total += go(placed, p);
            placed.pop();
        }
        total
    }
    go(&mut Vec::new(), p)
}

#[test]
fn identities_on_all_trees_to_order_four() {
    let table = GrowthTable::build(4, |_| true);
    for (x, cm_g) in table.levels.iter().flatten() {
        let fact = tree_factorial(x);
        let a = factorial_q(x.exotic_order()) / &fact;
        assert_eq!(&cm_weight(x), cm_g, "{x}");
        assert_eq!(uint(&linear_extensions(&merged_poset(x))), a, "{x}");
        let red: BigRational = reduce_tree(x)
            .entries
            .values()
            .map(|(r, c)| int(*c as i64) * factorial_q(r.exotic_order()) / uint(&classical_tree_factorial(r)))
            .sum();
        assert_eq!(red, a, "{x}");
        assert_eq!(uint(&reduction_sum(x)), a, "{x}");
        if x.exotic_order() >= 2 {
            let cut: BigRational = effective_cut_multiset(x)
                .entries
                .values()
                .map(|(r, c)| int(*c as i64) * factorial_q(r.exotic_order()) / tree_factorial(r))
                .sum();
            assert_eq!(cut, a, "{x}");
        }
        if x.is_beta_free() {
            assert_eq!(uint(&classical_tree_factorial(x)), fact);
            assert_eq!(classical_symmetry(x), BigUint::from(x.automorphism_count()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_extensions_match_brute_force(seed in any::<u64>(), steps in 0usize..6) {
        let x = random_builder(seed, steps).build().unwrap();
        let p = merged_poset(&x);
        prop_assert_eq!(linear_extensions(&p), BigUint::from(brute_linear_extensions(&p)));
    }

    #[test]
    fn kreimer_recursion_random(seed in any::<u64>(), steps in 1usize..7) {
        let x = random_builder(seed, steps).build().unwrap();
        let s: BigRational = removal_multiset(&x)
            .entries
            .values()
            .map(|(r, c)| int(*c as i64) / tree_factorial(r))
            .sum();
        prop_assert_eq!(s, int(x.exotic_order() as i64) / tree_factorial(&x));
    }
}
