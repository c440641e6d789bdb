//! Exotic coloured trees: parsing, canonical form, gradings and automorphisms.

mod canon;
mod parse;
mod poset;

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub(crate) use canon::UnionFind;
use canon::{Graph, NONE};
pub use poset::{merged_poset, MergedPoset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Colour {
    Alpha,
    Beta,
}

/// Vertex kind as stored in a builder or a canonical tree; β vertices carry their pairing id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexKind {
    Root,
    Alpha,
    Beta(u32),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("syntax error at byte {pos} in rule `{rule}`: {message}")]
    Syntax { pos: usize, rule: &'static str, message: String },
    #[error("pairing id on an `a` node at byte {pos} (rule `node`)")]
    AlphaPairing { pos: usize },
    #[error("pairing id {id} used {count} times, expected exactly 2")]
    PairCount { id: u32, count: usize },
    #[error("degenerate tree: {0}")]
    Degenerate(String),
    #[error("malformed tree: {0}")]
    Malformed(String),
}

/// Mutable, unvalidated tree under construction. Vertex 0 is the root.
#[derive(Clone, Debug)]
pub struct TreeBuilder {
    kinds: Vec<VertexKind>,
    parent: Vec<Option<usize>>,
}

impl Default for TreeBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl TreeBuilder {
    pub fn new() -> Self {
        TreeBuilder { kinds: vec![VertexKind::Root], parent: vec![None] }
    }

    /// Builder from explicit arrays; validated by [`TreeBuilder::build`].
    pub fn from_parts(kinds: Vec<VertexKind>, parent: Vec<Option<usize>>) -> Self {
        TreeBuilder { kinds, parent }
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn add_alpha(&mut self, parent: usize) -> usize {
        self.kinds.push(VertexKind::Alpha);
        self.parent.push(Some(parent));
        self.kinds.len() - 1
    }

    pub fn add_beta(&mut self, parent: usize, pair: u32) -> usize {
        self.kinds.push(VertexKind::Beta(pair));
        self.parent.push(Some(parent));
        self.kinds.len() - 1
    }

    pub fn fresh_pair_id(&self) -> u32 {
        self.kinds
            .iter()
            .filter_map(|k| match k {
                VertexKind::Beta(p) => Some(*p),
                _ => None,
            })
            .max()
            .unwrap_or(0)
            + 1
    }

    /// Drops `removed` and hangs every orphaned child on the root.
    pub fn remove_and_regraft(&self, removed: &[usize]) -> TreeBuilder {
        let n = self.len();
        let mut gone = vec![false; n];
        for &v in removed {
            gone[v] = true;
        }
        let mut map = vec![NONE; n];
        let mut next = 0;
        for v in 0..n {
            if !gone[v] {
                map[v] = next;
                next += 1;
            }
        }
        let mut kinds = Vec::with_capacity(next);
        let mut parent = Vec::with_capacity(next);
        for v in 0..n {
            if gone[v] {
                continue;
            }
            kinds.push(self.kinds[v]);
            parent.push(self.parent[v].map(|p| if gone[p] { 0 } else { map[p] }));
        }
        TreeBuilder { kinds, parent }
    }

    fn validate(&self) -> Result<(), TreeError> {
        let n = self.len();
        if n == 0 || self.kinds[0] != VertexKind::Root || self.parent[0].is_some() {
            return Err(TreeError::Malformed("vertex 0 must be the root".into()));
        }
        for v in 1..n {
            if self.kinds[v] == VertexKind::Root {
                return Err(TreeError::Malformed("more than one root".into()));
            }
            match self.parent[v] {
                Some(p) if p < n && p != v => {}
                _ => return Err(TreeError::Malformed(format!("vertex {v} has no valid parent"))),
            }
        }
        // every vertex reaches the root
        let mut state = vec![0u8; n];
        state[0] = 2;
        for v in 1..n {
            let mut path = Vec::new();
            let mut u = v;
            while state[u] == 0 {
                state[u] = 1;
                path.push(u);
                u = self.parent[u].expect("checked");
            }
            if state[u] == 1 {
                return Err(TreeError::Malformed("parent relation has a cycle".into()));
            }
            for w in path {
                state[w] = 2;
            }
        }
        let mut pairs: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for v in 0..n {
            if let VertexKind::Beta(p) = self.kinds[v] {
                pairs.entry(p).or_default().push(v);
            }
        }
        for (&id, members) in &pairs {
            if members.len() != 2 {
                return Err(TreeError::PairCount { id, count: members.len() });
            }
        }
        // merged graph: pair members collapse into one element
        let mut elem = vec![NONE; n];
        let mut count = 0;
        let mut pair_elem: BTreeMap<u32, usize> = BTreeMap::new();
        for v in 1..n {
            elem[v] = match self.kinds[v] {
                VertexKind::Beta(p) => *pair_elem.entry(p).or_insert_with(|| {
                    count += 1;
                    count - 1
                }),
                _ => {
                    count += 1;
                    count - 1
                }
            };
        }
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); count];
        let mut indeg = vec![0usize; count];
        for v in 1..n {
            let p = self.parent[v].expect("checked");
            if p == 0 {
                continue;
            }
            let (a, b) = (elem[v], elem[p]);
            if a == b {
                return Err(TreeError::Degenerate("paired vertices on a common root path".into()));
            }
            out[a].push(b);
            indeg[b] += 1;
        }
        let mut queue: Vec<usize> = (0..count).filter(|&e| indeg[e] == 0).collect();
        let mut seen = 0;
        while let Some(e) = queue.pop() {
            seen += 1;
            for &f in &out[e] {
                indeg[f] -= 1;
                if indeg[f] == 0 {
                    queue.push(f);
                }
            }
        }
        if seen != count {
            let chain = self.has_common_path_pair();
            return Err(TreeError::Degenerate(if chain {
                "paired vertices on a common root path".into()
            } else {
                "pairings close a cycle through several branches".into()
            }));
        }
        Ok(())
    }

    fn has_common_path_pair(&self) -> bool {
        let n = self.len();
        (1..n).any(|v| {
            let VertexKind::Beta(p) = self.kinds[v] else { return false };
            let mut u = self.parent[v];
            while let Some(w) = u {
                if self.kinds[w] == VertexKind::Beta(p) {
                    return true;
                }
                u = self.parent[w];
            }
            false
        })
    }

    pub fn build(&self) -> Result<ExoticTree, TreeError> {
        self.validate()?;
        Ok(ExoticTree::canonical_from(self))
    }
}

/// Packed per-vertex data, all indices `u8`:
/// `kind[n] pair[n] parent[n] partner[n] child_start[n+1] child_list[n-1]`.
struct Inner {
    key: Box<str>,
    n: usize,
    data: Box<[u8]>,
    sigma: u64,
    /// generators flattened, `n` entries each
    generators: Box<[u8]>,
}

const NIL: u8 = u8::MAX;

impl Inner {
    fn section(&self, i: usize) -> &[u8] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Canonical exotic coloured tree. Vertex indices follow the preorder of the canonical key.
#[derive(Clone)]
pub struct ExoticTree(Arc<Inner>);

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeGradings {
    pub vertex_count: usize,
    pub alpha_count: usize,
    pub beta_count: usize,
    pub exotic_order: usize,
    pub edge_count: usize,
    pub fertility: Vec<usize>,
}

impl ExoticTree {
    pub fn root() -> ExoticTree {
        TreeBuilder::new().build().expect("single root is valid")
    }

    fn canonical_from(b: &TreeBuilder) -> ExoticTree {
        let n = b.len();
        assert!(n < NIL as usize, "trees are limited to {} vertices", NIL as usize - 1);
        let mut children = vec![Vec::new(); n];
        for v in 1..n {
            children[b.parent[v].expect("validated")].push(v);
        }
        let mut partner = vec![NONE; n];
        let mut first: BTreeMap<u32, usize> = BTreeMap::new();
        for v in 0..n {
            if let VertexKind::Beta(p) = b.kinds[v] {
                if let Some(&w) = first.get(&p) {
                    partner[v] = w;
                    partner[w] = v;
                } else {
                    first.insert(p, v);
                }
            }
        }
        let g = Graph {
            kind: b
                .kinds
                .iter()
                .map(|k| match k {
                    VertexKind::Root => 0,
                    VertexKind::Alpha => 1,
                    VertexKind::Beta(_) => 2,
                })
                .collect(),
            parent: b.parent.iter().map(|p| p.unwrap_or(NONE)).collect(),
            children,
            partner,
        };
        let c = canon::canonicalize(&g);

        let mut sorted_children = g.children.clone();
        for ch in &mut sorted_children {
            ch.sort_by_key(|&v| c.lab[v]);
        }
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(sorted_children[v].iter().rev());
        }
        let mut new_index = vec![0usize; n];
        for (i, &v) in order.iter().enumerate() {
            new_index[v] = i;
        }

        let mut data = vec![0u8; 6 * n];
        let mut next_pair = 0u8;
        for (i, &v) in order.iter().enumerate() {
            data[i] = g.kind[v];
            if g.kind[v] == 2 {
                let q = new_index[g.partner[v]];
                data[n + i] = if q < i {
                    data[n + q]
                } else {
                    next_pair += 1;
                    next_pair
                };
            }
            data[2 * n + i] = if g.parent[v] == NONE { NIL } else { new_index[g.parent[v]] as u8 };
            data[3 * n + i] = if g.partner[v] == NONE { NIL } else { new_index[g.partner[v]] as u8 };
        }
        let mut pos = 0u8;
        for (i, &v) in order.iter().enumerate() {
            data[4 * n + i] = pos;
            for &ch in &sorted_children[v] {
                data[5 * n + 1 + pos as usize] = new_index[ch] as u8;
                pos += 1;
            }
        }
        data[5 * n] = pos;

        let mut generators = Vec::with_capacity(c.generators.len() * n);
        for gen in &c.generators {
            let mut out = vec![0u8; n];
            for v in 0..n {
                out[new_index[v]] = new_index[gen[v]] as u8;
            }
            generators.extend(out);
        }

        let mut inner = Inner {
            key: Box::from(""),
            n,
            data: data.into_boxed_slice(),
            sigma: c.group_order,
            generators: generators.into_boxed_slice(),
        };
        let mut key = String::with_capacity(4 * n);
        write_key(&mut key, 0, &inner);
        inner.key = key.into_boxed_str();
        ExoticTree(Arc::new(inner))
    }

    pub fn parse(text: &str) -> Result<ExoticTree, TreeError> {
        parse::parse(text)?.build()
    }

    /// Canonical text form; equal for isomorphic trees.
    pub fn key(&self) -> &str {
        &self.0.key
    }

    pub fn len(&self) -> usize {
        self.0.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn kind(&self, v: usize) -> VertexKind {
        match self.0.data[v] {
            0 => VertexKind::Root,
            1 => VertexKind::Alpha,
            _ => VertexKind::Beta(self.0.data[self.0.n + v] as u32),
        }
    }

    pub fn colour(&self, v: usize) -> Option<Colour> {
        match self.0.data[v] {
            0 => None,
            1 => Some(Colour::Alpha),
            _ => Some(Colour::Beta),
        }
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.0.section(2)[v];
        (p != NIL).then_some(p as usize)
    }

    /// Children of `v` in canonical order.
    pub fn children(&self, v: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        let n = self.0.n;
        let (a, b) = (self.0.data[4 * n + v] as usize, self.0.data[4 * n + v + 1] as usize);
        self.0.data[5 * n + 1 + a..5 * n + 1 + b].iter().map(|&c| c as usize)
    }

    pub fn partner(&self, v: usize) -> Option<usize> {
        let p = self.0.section(3)[v];
        (p != NIL).then_some(p as usize)
    }

    pub fn fertility(&self, v: usize) -> usize {
        let n = self.0.n;
        (self.0.data[4 * n + v + 1] - self.0.data[4 * n + v]) as usize
    }

    pub fn alpha_count(&self) -> usize {
        self.0.section(0).iter().filter(|&&k| k == 1).count()
    }

    pub fn beta_count(&self) -> usize {
        self.0.section(0).iter().filter(|&&k| k == 2).count()
    }

    pub fn exotic_order(&self) -> usize {
        self.alpha_count() + self.beta_count() / 2 + 1
    }

    pub fn edge_count(&self) -> usize {
        self.exotic_order() - 1
    }

    pub fn is_beta_free(&self) -> bool {
        self.beta_count() == 0
    }

    pub fn gradings(&self) -> TreeGradings {
        TreeGradings {
            vertex_count: self.len(),
            alpha_count: self.alpha_count(),
            beta_count: self.beta_count(),
            exotic_order: self.exotic_order(),
            edge_count: self.edge_count(),
            fertility: (0..self.len()).map(|v| self.fertility(v)).collect(),
        }
    }

    /// Order of the colour- and pairing-preserving automorphism group.
    pub fn automorphism_count(&self) -> u64 {
        self.0.sigma
    }

    /// Generators of the automorphism group, as permutations of vertex indices.
    pub fn automorphism_generators(&self) -> Vec<Vec<usize>> {
        self.0
            .generators
            .chunks(self.0.n.max(1))
            .map(|g| g.iter().map(|&x| x as usize).collect())
            .collect()
    }

    /// Smallest vertex of each vertex's orbit under the automorphism group.
    pub fn vertex_orbits(&self) -> Vec<usize> {
        let n = self.len();
        let mut uf = UnionFind::new(n);
        for gen in self.0.generators.chunks(n) {
            for (v, &w) in gen.iter().enumerate() {
                uf.union(v, w as usize);
            }
        }
        (0..n).map(|v| uf.find(v)).collect()
    }

    pub fn to_builder(&self) -> TreeBuilder {
        TreeBuilder {
            kinds: (0..self.len()).map(|v| self.kind(v)).collect(),
            parent: (0..self.len()).map(|v| self.parent(v)).collect(),
        }
    }

    /// Pairs of β vertices, each listed once with the smaller index first.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .filter_map(|v| self.partner(v).filter(|&w| v < w).map(|w| (v, w)))
            .collect()
    }
}

fn write_key(out: &mut String, v: usize, t: &Inner) {
    let n = t.n;
    match t.data[v] {
        0 => out.push('o'),
        1 => out.push('a'),
        _ => {
            out.push_str("b#");
            out.push_str(&t.data[n + v].to_string());
        }
    }
    let (a, b) = (t.data[4 * n + v] as usize, t.data[4 * n + v + 1] as usize);
    if a < b {
        out.push('(');
        for i in a..b {
            if i > a {
                out.push(',');
            }
            write_key(out, t.data[5 * n + 1 + i] as usize, t);
        }
        out.push(')');
    }
}

pub fn parse_tree(text: &str) -> Result<ExoticTree, TreeError> {
    ExoticTree::parse(text)
}

pub fn format_tree(t: &ExoticTree) -> String {
    t.key().to_string()
}

pub fn canonical_key(t: &ExoticTree) -> &[u8] {
    t.key().as_bytes()
}

impl PartialEq for ExoticTree {
    fn eq(&self, other: &Self) -> bool {
        self.0.key == other.0.key
    }
}

impl Eq for ExoticTree {}

impl Hash for ExoticTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.key.hash(state)
    }
}

impl PartialOrd for ExoticTree {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExoticTree {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.key.cmp(&other.0.key)
    }
}

impl fmt::Display for ExoticTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.key)
    }
}

impl fmt::Debug for ExoticTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExoticTree({})", self.0.key)
    }
}

impl FromStr for ExoticTree {
    type Err = TreeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExoticTree::parse(s)
    }
}

impl Serialize for ExoticTree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.key())
    }
}

impl<'de> Deserialize<'de> for ExoticTree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ExoticTree::parse(&s).map_err(serde::de::Error::custom)
    }
}
