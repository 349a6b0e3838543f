//! Random hierarchical decomposition trees, terminal trees with their
//! retraction V -> K, and per-tree-edge congestion loads.

use std::io::{self, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Metric, TerminalSet, VertexId, WeightedGraph};

/// One cluster of the hierarchical decomposition.
#[derive(Debug, Clone)]
pub struct DtNode {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub level: u32,
    /// Vertex whose ball carved this cluster (the cluster's routing anchor).
    pub center: VertexId,
    /// Carving radius used at this node's level (0 for singleton leaves).
    pub radius: f64,
    /// Cluster members, ascending vertex ids.
    pub vertices: Vec<VertexId>,
}

/// Rooted hierarchical decomposition: leaves at level 0 are in bijection
/// with V, every root-leaf path has one node per level, and a level-i
/// cluster has graph diameter at most 2^(i+1).
///
/// Tree edges have length 2^(level of the upper endpoint), which makes the
/// leaf-to-leaf tree distance dominate the graph distance.
#[derive(Debug, Clone)]
pub struct DecompositionTree {
    nodes: Vec<DtNode>,
    root: usize,
    /// leaf node id per vertex; entry 0 unused
    leaf: Vec<usize>,
    n: usize,
}

impl DecompositionTree {
    pub fn nodes(&self) -> &[DtNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn leaf(&self, v: VertexId) -> usize {
        self.leaf[v]
    }

    pub fn levels(&self) -> u32 {
        self.nodes[self.root].level
    }

    /// Tree distance between the leaves of `u` and `v`.
    pub fn tree_distance(&self, u: VertexId, v: VertexId) -> f64 {
        let mut a = self.leaf[u];
        let mut b = self.leaf[v];
        let mut d = 0.0;
        // leaves sit at the same level, so walk up in lockstep
        while a != b {
            a = self.nodes[a].parent.expect("distinct nodes share the root");
            b = self.nodes[b].parent.expect("distinct nodes share the root");
            d += 2.0 * f64::from(2u32).powi(self.nodes[a].level as i32);
        }
        d
    }
}

/// Source of random decomposition trees for a fixed instance.
///
/// The default is the FRT-style sampler below; an alternative construction
/// (e.g. a congestion-tree sampler) plugs in behind this trait.
pub trait TreeSampler {
    fn sample(&self, seed: u64) -> DecompositionTree;
}

/// FRT-style sampler: a uniform vertex permutation plus a scale beta with
/// log2(beta) uniform on [0, 1); the level-i children of a cluster are
/// carved by the first permutation vertex within distance beta * 2^(i-1).
pub struct FrtSampler<'a> {
    g: &'a WeightedGraph,
    metric: Metric,
}

impl<'a> FrtSampler<'a> {
    pub fn new(g: &'a WeightedGraph) -> Self {
        let metric = crate::graph::shortest_path_metric(g);
        FrtSampler { g, metric }
    }

    pub fn with_metric(g: &'a WeightedGraph, metric: Metric) -> Self {
        FrtSampler { g, metric }
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }
}

impl TreeSampler for FrtSampler<'_> {
    fn sample(&self, seed: u64) -> DecompositionTree {
        let n = self.g.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        if n == 1 {
            let node = DtNode {
                parent: None,
                children: Vec::new(),
                level: 0,
                center: 1,
                radius: 0.0,
                vertices: vec![1],
            };
            return DecompositionTree { nodes: vec![node], root: 0, leaf: vec![usize::MAX, 0], n };
        }

        // uniform permutation; rank[v] = position of v in the permutation
        let mut perm: Vec<VertexId> = (1..=n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        let mut rank = vec![0usize; n + 1];
        for (i, &v) in perm.iter().enumerate() {
            rank[v] = i;
        }
        let beta = f64::from(2u32).powf(rng.random::<f64>());

        let diam = self.metric.diameter();
        // root level: carving radius beta * 2^(levels-1) >= diameter
        let levels = (diam.log2().ceil() as i64 + 1).max(1) as u32;

        let mut nodes = Vec::new();
        nodes.push(DtNode {
            parent: None,
            children: Vec::new(),
            level: levels,
            center: perm[0],
            radius: beta * f64::from(2u32).powi(levels as i32 - 1),
            vertices: (1..=n).collect(),
        });
        let mut frontier = vec![0usize];

        for level in (1..levels).rev() {
            let radius = beta * f64::from(2u32).powi(level as i32 - 1);
            let mut next_frontier = Vec::new();
            for &parent_id in &frontier {
                let members = nodes[parent_id].vertices.clone();
                // assign each member to the first permutation vertex within radius
                let mut assigned: Vec<(usize, VertexId)> = members
                    .iter()
                    .map(|&u| {
                        let center = perm
                            .iter()
                            .copied()
                            .find(|&c| self.metric.dist(u, c) <= radius)
                            .expect("u itself is within any nonnegative radius");
                        (rank[center], u)
                    })
                    .collect();
                assigned.sort_unstable();
                let mut i = 0;
                while i < assigned.len() {
                    let r = assigned[i].0;
                    let mut cluster = Vec::new();
                    while i < assigned.len() && assigned[i].0 == r {
                        cluster.push(assigned[i].1);
                        i += 1;
                    }
                    cluster.sort_unstable();
                    let id = nodes.len();
                    nodes.push(DtNode {
                        parent: Some(parent_id),
                        children: Vec::new(),
                        level,
                        center: perm[r],
                        radius,
                        vertices: cluster,
                    });
                    nodes[parent_id].children.push(id);
                    next_frontier.push(id);
                }
            }
            frontier = next_frontier;
        }

        // level 0: singleton leaves, each its own center
        let mut leaf = vec![usize::MAX; n + 1];
        for &parent_id in &frontier {
            let members = nodes[parent_id].vertices.clone();
            for &u in &members {
                let id = nodes.len();
                nodes.push(DtNode {
                    parent: Some(parent_id),
                    children: Vec::new(),
                    level: 0,
                    center: u,
                    radius: 0.0,
                    vertices: vec![u],
                });
                nodes[parent_id].children.push(id);
                leaf[u] = id;
            }
        }

        DecompositionTree { nodes, root: 0, leaf, n }
    }
}

/// Convenience wrapper matching the one-shot operation shape.
pub fn sample_decomposition_tree(g: &WeightedGraph, seed: u64) -> DecompositionTree {
    FrtSampler::new(g).sample(seed)
}

// ---------------------------------------------------------------------------
// Terminal tree
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct TtNode {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Decomposition level this node came from.
    pub level: u32,
    pub center: VertexId,
    /// `Some(t)` iff this node is the leaf of terminal `t`.
    pub terminal: Option<VertexId>,
}

/// Contraction of a decomposition tree onto the terminals: leaves are
/// exactly K, every vertex retracts to a terminal, and each edge carries
/// the total weight of graph edges whose retracted endpoints' tree path
/// crosses it.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalTree {
    nodes: Vec<TtNode>,
    root: usize,
    /// retraction V -> K; entry 0 unused
    retraction: Vec<VertexId>,
    /// load of the edge (node, parent); root entry unused
    loads: Vec<f64>,
    /// terminal -> its leaf node id, in TerminalSet order
    terminal_leaves: Vec<(VertexId, usize)>,
    depth: Vec<usize>,
    n: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeShapeError {
    #[error("node {0} has inconsistent parent/child links")]
    BadLinks(usize),
    #[error("leaves do not match the terminal set")]
    LeavesNotTerminals,
    #[error("retraction must map every vertex to a terminal and fix terminals")]
    BadRetraction,
    #[error("internal node {0} has degree 2")]
    DegreeTwo(usize),
}

impl TerminalTree {
    /// Low-level constructor for hand-built trees; validates the shape
    /// invariants (leaves = terminals, total retraction, no degree-2
    /// internal node) and starts with zero loads.
    pub fn from_parts(
        nodes: Vec<TtNode>,
        root: usize,
        retraction: Vec<VertexId>,
        terminals: &TerminalSet,
        n: usize,
    ) -> Result<Self, TreeShapeError> {
        let loads = vec![0.0; nodes.len()];
        let mut tt = TerminalTree {
            nodes,
            root,
            retraction,
            loads,
            terminal_leaves: Vec::new(),
            depth: Vec::new(),
            n,
        };
        tt.finish(terminals)?;
        Ok(tt)
    }

    fn finish(&mut self, terminals: &TerminalSet) -> Result<(), TreeShapeError> {
        for (id, node) in self.nodes.iter().enumerate() {
            for &c in &node.children {
                if c >= self.nodes.len() || self.nodes[c].parent != Some(id) {
                    return Err(TreeShapeError::BadLinks(id));
                }
            }
            if let Some(p) = node.parent {
                if p >= self.nodes.len() || !self.nodes[p].children.contains(&id) {
                    return Err(TreeShapeError::BadLinks(id));
                }
            } else if id != self.root {
                return Err(TreeShapeError::BadLinks(id));
            }
        }
        // unrooted degree: leaves are exactly the terminals
        let membership = terminals.membership(self.n);
        let mut leaf_terminals = Vec::new();
        for (id, node) in self.nodes.iter().enumerate() {
            let degree = node.children.len() + usize::from(node.parent.is_some());
            match node.terminal {
                Some(t) => {
                    if degree > 1 || !membership.get(t).copied().unwrap_or(false) {
                        return Err(TreeShapeError::LeavesNotTerminals);
                    }
                    leaf_terminals.push(t);
                }
                None => {
                    if degree <= 1 && self.nodes.len() > 1 {
                        return Err(TreeShapeError::LeavesNotTerminals);
                    }
                    if degree == 2 {
                        return Err(TreeShapeError::DegreeTwo(id));
                    }
                }
            }
        }
        let mut sorted = leaf_terminals.clone();
        sorted.sort_unstable();
        sorted.dedup();
        let mut expected: Vec<VertexId> = terminals.ids().to_vec();
        expected.sort_unstable();
        if sorted != expected || leaf_terminals.len() != expected.len() {
            return Err(TreeShapeError::LeavesNotTerminals);
        }
        if self.retraction.len() != self.n + 1 {
            return Err(TreeShapeError::BadRetraction);
        }
        for v in 1..=self.n {
            let f = self.retraction[v];
            if !membership.get(f).copied().unwrap_or(false) {
                return Err(TreeShapeError::BadRetraction);
            }
            if membership[v] && f != v {
                return Err(TreeShapeError::BadRetraction);
            }
        }
        // caches
        self.terminal_leaves = terminals
            .ids()
            .iter()
            .map(|&t| {
                let leaf = self
                    .nodes
                    .iter()
                    .position(|nd| nd.terminal == Some(t))
                    .expect("every terminal has a leaf");
                (t, leaf)
            })
            .collect();
        self.depth = vec![0; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(u) = stack.pop() {
            for &c in &self.nodes[u].children {
                self.depth[c] = self.depth[u] + 1;
                stack.push(c);
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[TtNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.terminal_leaves.len()
    }

    pub fn terminals(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.terminal_leaves.iter().map(|&(t, _)| t)
    }

    pub fn leaf_of(&self, terminal: VertexId) -> usize {
        self.terminal_leaves
            .iter()
            .find(|&&(t, _)| t == terminal)
            .map(|&(_, id)| id)
            .expect("not a terminal")
    }

    pub fn retraction(&self, v: VertexId) -> VertexId {
        self.retraction[v]
    }

    /// Edge ids are the ids of non-root nodes (the edge to their parent).
    pub fn edge_ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&id| id != self.root)
    }

    pub fn load(&self, edge_id: usize) -> f64 {
        self.loads[edge_id]
    }

    pub fn loads(&self) -> &[f64] {
        &self.loads
    }

    pub(crate) fn set_load(&mut self, edge_id: usize, load: f64) {
        self.loads[edge_id] = load;
    }

    /// Edge ids on the path between two nodes.
    pub fn path_edges(&self, a: usize, b: usize) -> Vec<usize> {
        let mut x = a;
        let mut y = b;
        let mut left = Vec::new();
        let mut right = Vec::new();
        while self.depth[x] > self.depth[y] {
            left.push(x);
            x = self.nodes[x].parent.unwrap();
        }
        while self.depth[y] > self.depth[x] {
            right.push(y);
            y = self.nodes[y].parent.unwrap();
        }
        while x != y {
            left.push(x);
            right.push(y);
            x = self.nodes[x].parent.unwrap();
            y = self.nodes[y].parent.unwrap();
        }
        right.reverse();
        left.extend(right);
        left
    }

    /// Node ids on the path between two nodes, inclusive.
    pub fn path_nodes(&self, a: usize, b: usize) -> Vec<usize> {
        let mut x = a;
        let mut y = b;
        let mut left = vec![x];
        let mut right = vec![y];
        while self.depth[x] > self.depth[y] {
            x = self.nodes[x].parent.unwrap();
            left.push(x);
        }
        while self.depth[y] > self.depth[x] {
            y = self.nodes[y].parent.unwrap();
            right.push(y);
        }
        while x != y {
            x = self.nodes[x].parent.unwrap();
            y = self.nodes[y].parent.unwrap();
            left.push(x);
            right.push(y);
        }
        right.pop();
        right.reverse();
        left.extend(right);
        left
    }

    /// Component label per node after removing the given edge ids.
    pub fn components_without(&self, cut: &[usize]) -> Vec<usize> {
        let mut cut_mark = vec![false; self.nodes.len()];
        for &e in cut {
            cut_mark[e] = true;
        }
        let mut label = vec![usize::MAX; self.nodes.len()];
        let mut next = 0;
        for start in 0..self.nodes.len() {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                let mut neighbors = Vec::new();
                if let Some(p) = self.nodes[u].parent {
                    if !cut_mark[u] {
                        neighbors.push(p);
                    }
                }
                for &c in &self.nodes[u].children {
                    if !cut_mark[c] {
                        neighbors.push(c);
                    }
                }
                for v in neighbors {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Dump format: `n <id> <parent> <level> <center>` per node (root's
    /// parent printed as 0, ids 1-based), `f <v> <terminal>` per vertex,
    /// `l <a> <b> <load>` per edge.
    pub fn write_dump<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (id, node) in self.nodes.iter().enumerate() {
            let parent = node.parent.map_or(0, |p| p + 1);
            writeln!(w, "n {} {} {} {}", id + 1, parent, node.level, node.center)?;
        }
        for v in 1..=self.n {
            writeln!(w, "f {} {}", v, self.retraction[v])?;
        }
        for id in self.edge_ids() {
            let p = self.nodes[id].parent.unwrap();
            writeln!(w, "l {} {} {}", id + 1, p + 1, self.loads[id])?;
        }
        Ok(())
    }
}

/// Contracts a decomposition tree onto the terminals and derives the
/// retraction: each vertex walks up from its leaf to the lowest ancestor
/// whose cluster contains a terminal and retracts to the minimum-id
/// terminal there.
pub fn build_terminal_tree(dt: &DecompositionTree, terminals: &TerminalSet) -> TerminalTree {
    let n = dt.n();
    let membership = terminals.membership(n);

    // min terminal id in each cluster (usize::MAX if none)
    let mut min_terminal = vec![usize::MAX; dt.nodes().len()];
    for (id, node) in dt.nodes().iter().enumerate() {
        for &v in &node.vertices {
            if membership[v] {
                min_terminal[id] = min_terminal[id].min(v);
            }
        }
    }

    let mut retraction = vec![0usize; n + 1];
    for v in 1..=n {
        let mut node = dt.leaf(v);
        while min_terminal[node] == usize::MAX {
            node = dt.nodes()[node].parent.expect("root contains all terminals");
        }
        retraction[v] = min_terminal[node];
    }

    // minimal subtree spanning terminal leaves, with degree-2 chains spliced
    let k = terminals.k();
    let mut terminal_count = vec![0usize; dt.nodes().len()];
    for (id, node) in dt.nodes().iter().enumerate() {
        terminal_count[id] = node.vertices.iter().filter(|&&v| membership[v]).count();
    }
    // subtree root: deepest node containing all terminals
    let mut sub_root = dt.root();
    loop {
        let mut descend = None;
        for &c in &dt.nodes()[sub_root].children {
            if terminal_count[c] == k {
                descend = Some(c);
                break;
            }
        }
        match descend {
            Some(c) => sub_root = c,
            None => break,
        }
    }

    // build contracted nodes by walking down from sub_root, skipping chains
    let mut nodes: Vec<TtNode> = Vec::new();
    // stack of (dt node with >= 1 terminal below, parent id in new tree)
    let mut stack: Vec<(usize, Option<usize>)> = vec![(sub_root, None)];
    let mut root_new = usize::MAX;
    while let Some((mut dt_id, parent)) = stack.pop() {
        // splice through single-terminal-child chains
        loop {
            let kept: Vec<usize> = dt.nodes()[dt_id]
                .children
                .iter()
                .copied()
                .filter(|&c| terminal_count[c] > 0)
                .collect();
            if kept.len() == 1 && terminal_count[dt_id] == terminal_count[kept[0]] {
                dt_id = kept[0];
            } else {
                break;
            }
        }
        let dt_node = &dt.nodes()[dt_id];
        let id = nodes.len();
        let terminal = if dt_node.level == 0 && membership[dt_node.center] {
            Some(dt_node.center)
        } else {
            None
        };
        nodes.push(TtNode {
            parent,
            children: Vec::new(),
            level: dt_node.level,
            center: dt_node.center,
            terminal,
        });
        if let Some(p) = parent {
            nodes[p].children.push(id);
        } else {
            root_new = id;
        }
        let mut kept: Vec<usize> = dt_node
            .children
            .iter()
            .copied()
            .filter(|&c| terminal_count[c] > 0)
            .collect();
        // push in reverse so children appear in dt order
        kept.reverse();
        for c in kept {
            stack.push((c, Some(id)));
        }
    }

    // the root may have unrooted degree 2 (exactly two children); merge
    // through it so no internal node of the unrooted tree has degree 2
    if nodes[root_new].children.len() == 2 {
        let c_keep = nodes[root_new].children[0];
        let c_move = nodes[root_new].children[1];
        nodes[c_keep].parent = None;
        nodes[c_move].parent = Some(c_keep);
        nodes[c_keep].children.push(c_move);
        // drop the old root; compact ids
        let old_root = root_new;
        root_new = c_keep;
        let remap = |id: usize| if id > old_root { id - 1 } else { id };
        nodes.remove(old_root);
        for node in nodes.iter_mut() {
            node.parent = node.parent.map(remap);
            for c in node.children.iter_mut() {
                *c = remap(*c);
            }
        }
        root_new = remap(root_new);
    }

    let loads = vec![0.0; nodes.len()];
    let mut tt = TerminalTree {
        nodes,
        root: root_new,
        retraction,
        loads,
        terminal_leaves: Vec::new(),
        depth: Vec::new(),
        n,
    };
    tt.finish(terminals).expect("construction preserves the shape invariants");
    tt
}

/// Fills `load(e) = sum over graph edges (u, v) of w(u,v) * [e on the tree
/// path between the leaves of retraction(u) and retraction(v)]`.
pub fn compute_edge_loads(g: &WeightedGraph, tt: &mut TerminalTree) {
    for id in 0..tt.nodes.len() {
        tt.loads[id] = 0.0;
    }
    for e in g.edges() {
        let fu = tt.retraction(e.u);
        let fv = tt.retraction(e.v);
        if fu == fv {
            continue;
        }
        let a = tt.leaf_of(fu);
        let b = tt.leaf_of(fv);
        for edge in tt.path_edges(a, b) {
            tt.loads[edge] += e.w;
        }
    }
}
