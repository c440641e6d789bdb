use std::collections::{BTreeMap, HashSet};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::RemovalMultiset;
use crate::rational::factorial;
use crate::tree::{merged_poset, ExoticTree, TreeBuilder, VertexKind};

/// Resolves merged pairs into ordinary trees by shuffling their two closing paths.
///
/// Returns a multiset of β-free trees; a β-free input maps to itself.
pub fn reduce_tree(t: &ExoticTree) -> RemovalMultiset {
    let mut out = RemovalMultiset::default();
    resolve(merged_parents(t), &mut |parents| {
        let n = parents.len();
        let kinds = (0..n).map(|i| if i == 0 { VertexKind::Root } else { VertexKind::Alpha }).collect();
        let parent = (0..n).map(|i| (i > 0).then(|| parents[i][0])).collect();
        let tree = TreeBuilder::from_parts(kinds, parent).build().expect("resolved graph is a tree");
        out.entries.entry(tree.key().to_string()).or_insert((tree, 0)).1 += 1;
    });
    out
}

/// `Σ |τ̄|!/τ̄!` over `reduce_tree(t)` (with multiplicity), without canonicalizing the reduced trees.
pub fn reduction_sum(t: &ExoticTree) -> BigUint {
    let mut total = BigUint::zero();
    resolve(merged_parents(t), &mut |parents| {
        let n = parents.len();
        let mut size = vec![1usize; n];
        for v in 1..n {
            let mut u = v;
            while u != 0 {
                u = parents[u][0];
                size[u] += 1;
            }
        }
        total += factorial(n) / size.iter().fold(BigUint::one(), |acc, &s| acc * s);
    });
    total
}

/// Parents of each merged-poset node, with node 0 the root.
fn merged_parents(t: &ExoticTree) -> Vec<Vec<usize>> {
    let poset = merged_poset(t);
    let mut node_of = vec![0usize; t.len()];
    for (i, members) in poset.elements.iter().enumerate() {
        for &v in members {
            node_of[v] = i + 1;
        }
    }
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); poset.len() + 1];
    for v in 1..t.len() {
        let p = node_of[t.parent(v).expect("non-root")];
        let list = &mut parents[node_of[v]];
        if !list.contains(&p) {
            list.push(p);
        }
    }
    parents
}

fn chain(parents: &[Vec<usize>], mut v: usize) -> Vec<usize> {
    let mut out = vec![v];
    while v != 0 {
        v = parents[v][0];
        out.push(v);
    }
    out
}

fn resolve(parents: Vec<Vec<usize>>, emit: &mut dyn FnMut(&[Vec<usize>])) {
    let n = parents.len();
    let pick = (1..n).find(|&m| {
        if parents[m].len() < 2 {
            return false;
        }
        let mut stack = parents[m].clone();
        let mut seen = HashSet::new();
        while let Some(u) = stack.pop() {
            if u == 0 || !seen.insert(u) {
                continue;
            }
            if parents[u].len() > 1 {
                return false;
            }
            stack.push(parents[u][0]);
        }
        true
    });
    let Some(m) = pick else {
        emit(&parents);
        return;
    };
    let (p1, p2) = (parents[m][0], parents[m][1]);
    let c1 = chain(&parents, p1);
    let c2 = chain(&parents, p2);
    let lca = *c1.iter().find(|u| c2.contains(u)).expect("chains meet at the root");
    // top-first closing paths, LCA excluded
    let mut a: Vec<usize> = c1.iter().copied().take_while(|&u| u != lca).collect();
    let mut b: Vec<usize> = c2.iter().copied().take_while(|&u| u != lca).collect();
    a.reverse();
    b.reverse();
    let mut merged = Vec::with_capacity(a.len() + b.len());
    shuffles(&a, &b, &mut merged, &mut |order| {
        let mut next = parents.clone();
        let mut above = lca;
        for &u in order {
            next[u] = vec![above];
            above = u;
        }
        next[m] = vec![above];
        resolve(next, emit);
    });
}

fn shuffles(a: &[usize], b: &[usize], acc: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if a.is_empty() && b.is_empty() {
        f(acc);
        return;
    }
    if let Some((&x, rest)) = a.split_first() {
        acc.push(x);
        shuffles(rest, b, acc, f);
        acc.pop();
    }
    if let Some((&x, rest)) = b.split_first() {
        acc.push(x);
        shuffles(a, rest, acc, f);
        acc.pop();
    }
}

fn subtree_sizes(t: &ExoticTree) -> Vec<usize> {
    let mut size = vec![1usize; t.len()];
    for v in (1..t.len()).rev() {
        size[t.parent(v).expect("non-root")] += size[v];
    }
    size
}

/// Classical factorial of a β-free tree: product of all subtree sizes.
pub fn classical_tree_factorial(t: &ExoticTree) -> BigUint {
    assert!(t.is_beta_free(), "classical factorial needs a β-free tree");
    subtree_sizes(t).iter().fold(BigUint::one(), |acc, &s| acc * s)
}

/// Classical symmetry of a β-free tree: product over groups of identical child subtrees of m!·σ^m.
pub fn classical_symmetry(t: &ExoticTree) -> BigUint {
    assert!(t.is_beta_free(), "classical symmetry needs a β-free tree");
    fn walk(t: &ExoticTree, v: usize) -> (String, BigUint) {
        let mut kids: Vec<(String, BigUint)> = t.children(v).map(|c| walk(t, c)).collect();
        kids.sort_by(|x, y| x.0.cmp(&y.0));
        let mut groups: BTreeMap<&str, (usize, &BigUint)> = BTreeMap::new();
        for (s, sym) in &kids {
            groups.entry(s.as_str()).or_insert((0, sym)).0 += 1;
        }
        let mut sigma = BigUint::one();
        for (m, sym) in groups.values() {
            sigma *= factorial(*m) * num_traits::pow((*sym).clone(), *m);
        }
        let shape = format!("[{}]", kids.iter().map(|k| k.0.as_str()).collect::<Vec<_>>().join(""));
        (shape, sigma)
    }
    walk(t, 0).1
}
