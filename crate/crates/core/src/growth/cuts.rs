use std::collections::BTreeMap;

use crate::tree::{ExoticTree, VertexKind};

/// Trees obtained by deleting one site, with the number of sites producing each.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RemovalMultiset {
    pub entries: BTreeMap<String, (ExoticTree, u64)>,
}

impl RemovalMultiset {
    pub fn get(&self, key: &str) -> Option<u64> {
        self.entries.get(key).map(|e| e.1)
    }

    pub fn total_sites(&self) -> u64 {
        self.entries.values().map(|e| e.1).sum()
    }

    fn add(&mut self, t: ExoticTree) {
        self.entries.entry(t.key().to_string()).or_insert((t, 0)).1 += 1;
    }
}

/// Sites are α leaves and pairs whose two members are both leaves.
pub fn removal_multiset(t: &ExoticTree) -> RemovalMultiset {
    assert!(t.exotic_order() >= 2, "the bare root has no removal site");
    let b = t.to_builder();
    let mut out = RemovalMultiset::default();
    for v in 1..t.len() {
        if t.kind(v) == VertexKind::Alpha && t.fertility(v) == 0 {
            out.add(b.remove_and_regraft(&[v]).build().expect("leaf removal keeps validity"));
        }
    }
    for (v, w) in t.pairs() {
        if t.fertility(v) == 0 && t.fertility(w) == 0 {
            out.add(b.remove_and_regraft(&[v, w]).build().expect("leaf removal keeps validity"));
        }
    }
    out
}

/// Sites are root-child α edges and pairs with both members on the root; orphans move to the root.
pub fn effective_cut_multiset(t: &ExoticTree) -> RemovalMultiset {
    assert!(t.exotic_order() >= 2, "the bare root has no effective edge");
    let b = t.to_builder();
    let mut out = RemovalMultiset::default();
    for v in t.children(0) {
        if t.kind(v) == VertexKind::Alpha {
            out.add(b.remove_and_regraft(&[v]).build().expect("contraction keeps validity"));
        }
    }
    for (v, w) in t.pairs() {
        if t.parent(v) == Some(0) && t.parent(w) == Some(0) {
            out.add(b.remove_and_regraft(&[v, w]).build().expect("contraction keeps validity"));
        }
    }
    out
}
