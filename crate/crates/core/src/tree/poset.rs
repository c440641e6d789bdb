use super::{ExoticTree, VertexKind};

/// Non-root vertices with each β pair merged into one element, ordered child below parent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergedPoset {
    /// tree vertices making up each element (one α vertex or the two members of a pair)
    pub elements: Vec<Vec<usize>>,
    /// cover relations `(lower, upper)`; the root is not an element
    pub covers: Vec<(usize, usize)>,
}

impl MergedPoset {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Element indices strictly above each element through a single cover.
    pub fn upper_covers(&self) -> Vec<Vec<usize>> {
        let mut up = vec![Vec::new(); self.len()];
        for &(lo, hi) in &self.covers {
            up[lo].push(hi);
        }
        up
    }
}

pub fn merged_poset(t: &ExoticTree) -> MergedPoset {
    let n = t.len();
    let mut elem = vec![usize::MAX; n];
    let mut elements: Vec<Vec<usize>> = Vec::new();
    for v in 1..n {
        if elem[v] != usize::MAX {
            continue;
        }
        elem[v] = elements.len();
        let mut members = vec![v];
        if let VertexKind::Beta(_) = t.kind(v) {
            let w = t.partner(v).expect("β vertex has a partner");
            elem[w] = elements.len();
            members.push(w);
        }
        elements.push(members);
    }
    let mut covers = Vec::new();
    for v in 1..n {
        let p = t.parent(v).expect("non-root vertex");
        if p == 0 {
            continue;
        }
        let c = (elem[v], elem[p]);
        assert!(c.0 != c.1, "merging produced a loop");
        if !covers.contains(&c) {
            covers.push(c);
        }
    }
    covers.sort_unstable();
    MergedPoset { elements, covers }
}
