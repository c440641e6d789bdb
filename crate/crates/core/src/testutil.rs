//! Shared oracles for unit tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tree::{ExoticTree, TreeBuilder, VertexKind};

/// Grows a random valid builder by `steps` α or β-pair grafts.
pub fn random_builder(seed: u64, steps: usize) -> TreeBuilder {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = TreeBuilder::new();
    for _ in 0..steps {
        let n = b.len();
        if rng.random_bool(0.5) {
            b.add_alpha(rng.random_range(0..n));
        } else {
            let id = b.fresh_pair_id();
            let (v, w) = (rng.random_range(0..n), rng.random_range(0..n));
            b.add_beta(v, id);
            b.add_beta(w, id);
        }
    }
    b
}

/// Same tree with shuffled vertex indices and relabelled pairing ids.
pub fn scramble(t: &ExoticTree, seed: u64) -> TreeBuilder {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = t.len();
    let mut perm: Vec<usize> = (1..n).collect();
    perm.shuffle(&mut rng);
    let mut to_new = vec![0usize; n];
    for (i, &v) in perm.iter().enumerate() {
        to_new[v] = i + 1;
    }
    let mut ids: Vec<u32> = (1..=(n as u32)).map(|x| x * 7 + 3).collect();
    ids.shuffle(&mut rng);
    let mut kinds = vec![VertexKind::Root; n];
    let mut parent = vec![None; n];
    for v in 1..n {
        kinds[to_new[v]] = match t.kind(v) {
            VertexKind::Beta(p) => VertexKind::Beta(ids[p as usize - 1]),
            k => k,
        };
        parent[to_new[v]] = t.parent(v).map(|p| to_new[p]);
    }
    TreeBuilder::from_parts(kinds, parent)
}

fn same_kind(a: VertexKind, b: VertexKind) -> bool {
    matches!(
        (a, b),
        (VertexKind::Root, VertexKind::Root) | (VertexKind::Alpha, VertexKind::Alpha) | (VertexKind::Beta(_), VertexKind::Beta(_))
    )
}

/// Number of structure-preserving bijections from `s` onto `t`, by exhaustive assignment.
pub fn brute_isomorphisms(s: &ExoticTree, t: &ExoticTree) -> u64 {
    let n = s.len();
    if n != t.len() {
        return 0;
    }
    let mut img = vec![usize::MAX; n];
    let mut used = vec![false; n];
    img[0] = 0;
    used[0] = true;
    fn go(v: usize, s: &ExoticTree, t: &ExoticTree, img: &mut [usize], used: &mut [bool]) -> u64 {
        let n = s.len();
        if v == n {
            for u in 0..n {
                if let Some(p) = s.partner(u) {
                    if t.partner(img[u]) != Some(img[p]) {
                        return 0;
                    }
                }
            }
            return 1;
        }
        let mut total = 0;
        for w in 1..n {
            if used[w] || !same_kind(s.kind(v), t.kind(w)) {
                continue;
            }
            // preorder indices put parents first
            let ps = s.parent(v).expect("non-root");
            if t.parent(w) != Some(img[ps]) {
                continue;
            }
            img[v] = w;
            used[w] = true;
            total += go(v + 1, s, t, img, used);
            used[w] = false;
        }
        total
    }
    go(1, s, t, &mut img, &mut used)
}
