//! Canonical labelling of coloured trees with a β pairing.
//!
//! Individualization-refinement over an ordered vertex partition. Leaves of
//! the search tree are discrete partitions; the smallest leaf certificate is
//! canonical. Automorphisms found on the way prune sibling branches and give
//! the group order through the orbit sizes along the first path.

pub(crate) const NONE: usize = usize::MAX;

pub(crate) struct Graph {
    /// 0 = root, 1 = α, 2 = β
    pub kind: Vec<u8>,
    pub parent: Vec<usize>,
    pub children: Vec<Vec<usize>>,
    pub partner: Vec<usize>,
}

pub(crate) struct Canonical {
    /// vertex -> canonical rank
    pub lab: Vec<usize>,
    pub group_order: u64,
    pub generators: Vec<Vec<usize>>,
}

impl Graph {
    fn len(&self) -> usize {
        self.kind.len()
    }

    fn initial_partition(&self) -> Vec<usize> {
        let n = self.len();
        let mut depth = vec![0usize; n];
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            order.push(v);
            for &c in &self.children[v] {
                depth[c] = depth[v] + 1;
                stack.push(c);
            }
        }
        let mut size = vec![1usize; n];
        for &v in order.iter().rev() {
            if self.parent[v] != NONE {
                size[self.parent[v]] += size[v];
            }
        }
        let inv: Vec<(usize, u8, usize)> = (0..n).map(|v| (depth[v], self.kind[v], size[v])).collect();
        dense_ranks(&inv)
    }

    fn refine(&self, cells: &mut Vec<usize>) {
        let n = self.len();
        let mut count = distinct(cells);
        loop {
            let sigs: Vec<(usize, usize, Vec<usize>, usize)> = (0..n)
                .map(|v| {
                    let p = self.parent[v];
                    let mut ch: Vec<usize> = self.children[v].iter().map(|&c| cells[c]).collect();
                    ch.sort_unstable();
                    let q = self.partner[v];
                    (
                        cells[v],
                        if p == NONE { NONE } else { cells[p] },
                        ch,
                        if q == NONE { NONE } else { cells[q] },
                    )
                })
                .collect();
            let next = dense_ranks(&sigs);
            let c = distinct(&next);
            *cells = next;
            if c == count {
                return;
            }
            count = c;
        }
    }

    fn certificate(&self, cells: &[usize]) -> Vec<usize> {
        let n = self.len();
        let mut inv = vec![0usize; n];
        for v in 0..n {
            inv[cells[v]] = v;
        }
        let mut cert = Vec::with_capacity(3 * n);
        for &v in &inv {
            cert.push(self.kind[v] as usize);
            let p = self.parent[v];
            cert.push(if p == NONE { NONE } else { cells[p] });
            let q = self.partner[v];
            cert.push(if q == NONE { NONE } else { cells[q] });
        }
        cert
    }
}

fn dense_ranks<T: Ord>(keys: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut out = vec![0usize; keys.len()];
    let mut rank = 0;
    for (i, &v) in idx.iter().enumerate() {
        if i > 0 && keys[idx[i - 1]] != keys[v] {
            rank += 1;
        }
        out[v] = rank;
    }
    out
}

fn distinct(cells: &[usize]) -> usize {
    cells.iter().copied().max().map_or(0, |m| m + 1)
}

fn individualize(cells: &[usize], v: usize) -> Vec<usize> {
    let c = cells[v];
    cells
        .iter()
        .enumerate()
        .map(|(u, &r)| if r > c || (r == c && u != v) { r + 1 } else { r })
        .collect()
}

fn target_cell(cells: &[usize]) -> Option<Vec<usize>> {
    let k = distinct(cells);
    let mut sizes = vec![0usize; k];
    for &c in cells {
        sizes[c] += 1;
    }
    let c = sizes.iter().position(|&s| s > 1)?;
    Some((0..cells.len()).filter(|&v| cells[v] == c).collect())
}

pub(crate) struct UnionFind(Vec<usize>);

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    pub fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

struct Leaf {
    cert: Vec<usize>,
    lab: Vec<usize>,
}

struct Search<'g> {
    g: &'g Graph,
    first: Option<Leaf>,
    first_path: Vec<usize>,
    best: Option<Leaf>,
    gens: Vec<Vec<usize>>,
    level_cells: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn fixing_orbits(&self, prefix: &[usize]) -> UnionFind {
        let mut uf = UnionFind::new(self.g.len());
        for gen in &self.gens {
            if prefix.iter().all(|&p| gen[p] == p) {
                for (v, &w) in gen.iter().enumerate() {
                    uf.union(v, w);
                }
            }
        }
        uf
    }

    fn perm(from: &[usize], to: &[usize]) -> Vec<usize> {
        let mut inv = vec![0usize; to.len()];
        for (v, &r) in to.iter().enumerate() {
            inv[r] = v;
        }
        from.iter().map(|&r| inv[r]).collect()
    }

    fn leaf(&mut self, cells: Vec<usize>, prefix: &[usize]) -> Option<usize> {
        let cert = self.g.certificate(&cells);
        let Some(first) = &self.first else {
            self.first = Some(Leaf { cert: cert.clone(), lab: cells.clone() });
            self.best = Some(Leaf { cert, lab: cells });
            self.first_path = prefix.to_vec();
            return None;
        };
        if cert == first.cert {
            let gen = Self::perm(&first.lab, &cells);
            self.gens.push(gen);
            let d = prefix.iter().zip(&self.first_path).position(|(a, b)| a != b);
            return d;
        }
        let best = self.best.as_ref().expect("best leaf");
        match cert.cmp(&best.cert) {
            std::cmp::Ordering::Less => self.best = Some(Leaf { cert, lab: cells }),
            std::cmp::Ordering::Equal => {
                let gen = Self::perm(&best.lab, &cells);
                self.gens.push(gen);
            }
            std::cmp::Ordering::Greater => {}
        }
        None
    }

    fn visit(&mut self, cells: Vec<usize>, prefix: &mut Vec<usize>) -> Option<usize> {
        let Some(target) = target_cell(&cells) else {
            return self.leaf(cells, prefix);
        };
        let depth = prefix.len();
        let on_first = self.first.is_none();
        if on_first {
            self.level_cells.push(target.clone());
        }
        let mut explored: Vec<usize> = Vec::new();
        for &w in &target {
            if !explored.is_empty() {
                let mut uf = self.fixing_orbits(prefix);
                let rw = uf.find(w);
                if explored.iter().any(|&e| uf.find(e) == rw) {
                    continue;
                }
            }
            explored.push(w);
            let mut child = individualize(&cells, w);
            self.g.refine(&mut child);
            prefix.push(w);
            let r = self.visit(child, prefix);
            prefix.pop();
            if let Some(level) = r {
                if level < depth {
                    return Some(level);
                }
            }
        }
        None
    }
}

pub(crate) fn canonicalize(g: &Graph) -> Canonical {
    let mut cells = g.initial_partition();
    g.refine(&mut cells);
    let mut s = Search {
        g,
        first: None,
        first_path: Vec::new(),
        best: None,
        gens: Vec::new(),
        level_cells: Vec::new(),
    };
    let mut prefix = Vec::new();
    s.visit(cells, &mut prefix);
    let mut order: u64 = 1;
    for k in 0..s.first_path.len() {
        let mut uf = s.fixing_orbits(&s.first_path[..k]);
        let r = uf.find(s.first_path[k]);
        let size = s.level_cells[k].iter().filter(|&&v| uf.find(v) == r).count() as u64;
        order = order.checked_mul(size).expect("automorphism group order overflow");
    }
    Canonical {
        lab: s.best.expect("search reaches a leaf").lab,
        group_order: order,
        generators: s.gens,
    }
}
