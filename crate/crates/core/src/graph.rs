//! Instance representation, parsing/generation, shortest paths, and the
//! min s-t cut primitive used by the solvers and oracles.

use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// 1-based vertex id, matching the instance file format.
pub type VertexId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    /// Cut cost in partitioning problems, capacity in routing problems.
    pub w: f64,
}

/// Undirected weighted graph with vertices `1..=n`.
///
/// Invariants enforced at construction: no self-loops, ids in range,
/// positive weights, at most one edge per unordered pair, connected.
/// Edges are stored canonically (`u < v`, sorted by `(u, v)`).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(VertexId, f64, usize)>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    EmptyGraph,
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("vertex id {v} out of range 1..={n}")]
    VertexOutOfRange { v: VertexId, n: usize },
    #[error("nonpositive weight on edge ({u}, {v})")]
    NonpositiveWeight { u: VertexId, v: VertexId },
    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: VertexId, v: VertexId },
    #[error("graph is not connected ({components} components)")]
    Disconnected { components: usize },
}

impl WeightedGraph {
    /// Strict constructor: duplicate unordered pairs are an error.
    pub fn new(n: usize, edges: Vec<(VertexId, VertexId, f64)>) -> Result<Self, GraphError> {
        Self::build(n, edges, false)
    }

    /// Merging constructor: parallel edges are combined by weight sum.
    pub fn merged(n: usize, edges: Vec<(VertexId, VertexId, f64)>) -> Result<Self, GraphError> {
        Self::build(n, edges, true)
    }

    fn build(n: usize, raw: Vec<(VertexId, VertexId, f64)>, merge: bool) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        let mut edges: Vec<Edge> = Vec::with_capacity(raw.len());
        for (u, v, w) in raw {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            for x in [u, v] {
                if x == 0 || x > n {
                    return Err(GraphError::VertexOutOfRange { v: x, n });
                }
            }
            if w <= 0.0 || !w.is_finite() {
                return Err(GraphError::NonpositiveWeight { u, v });
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            edges.push(Edge { u: a, v: b, w });
        }
        edges.sort_by(|x, y| (x.u, x.v).cmp(&(y.u, y.v)));
        let mut merged: Vec<Edge> = Vec::with_capacity(edges.len());
        for e in edges {
            match merged.last_mut() {
                Some(last) if last.u == e.u && last.v == e.v => {
                    if !merge {
                        return Err(GraphError::DuplicateEdge { u: e.u, v: e.v });
                    }
                    last.w += e.w;
                }
                _ => merged.push(e),
            }
        }
        let mut adj = vec![Vec::new(); n + 1];
        for (i, e) in merged.iter().enumerate() {
            adj[e.u].push((e.v, e.w, i));
            adj[e.v].push((e.u, e.w, i));
        }
        let g = WeightedGraph { n, edges: merged, adj };
        let components = g.component_count();
        if components != 1 {
            return Err(GraphError::Disconnected { components });
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        1..=self.n
    }

    /// Neighbors of `u` as `(v, weight, edge index)`.
    pub fn adj(&self, u: VertexId) -> &[(VertexId, f64, usize)] {
        &self.adj[u]
    }

    /// Index into `edges()` for the unordered pair, if present.
    pub fn edge_index(&self, u: VertexId, v: VertexId) -> Option<usize> {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        self.edges
            .binary_search_by(|e| (e.u, e.v).cmp(&(a, b)))
            .ok()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n + 1];
        let mut components = 0;
        for s in 1..=self.n {
            if seen[s] {
                continue;
            }
            components += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                for &(v, _, _) in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        components
    }

    /// Component label per vertex after deleting the given edge indices.
    pub fn components_without(&self, removed: &[usize]) -> Vec<usize> {
        let mut gone = vec![false; self.edges.len()];
        for &i in removed {
            gone[i] = true;
        }
        let mut label = vec![usize::MAX; self.n + 1];
        let mut next = 0;
        for s in 1..=self.n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(v, _, i) in &self.adj[u] {
                    if !gone[i] && label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }
}

/// Ordered set of distinct terminal vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminalSet {
    ids: Vec<VertexId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TerminalError {
    #[error("no terminals")]
    Empty,
    #[error("duplicate terminal {0}")]
    Duplicate(VertexId),
    #[error("terminal {v} out of range 1..={n}")]
    OutOfRange { v: VertexId, n: usize },
}

impl TerminalSet {
    pub fn new(ids: Vec<VertexId>, n: usize) -> Result<Self, TerminalError> {
        if ids.is_empty() {
            return Err(TerminalError::Empty);
        }
        let mut seen = vec![false; n + 1];
        for &t in &ids {
            if t == 0 || t > n {
                return Err(TerminalError::OutOfRange { v: t, n });
            }
            if seen[t] {
                return Err(TerminalError::Duplicate(t));
            }
            seen[t] = true;
        }
        Ok(TerminalSet { ids })
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn k(&self) -> usize {
        self.ids.len()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.ids.contains(&v)
    }

    /// Membership vector indexed by vertex id (entry 0 unused).
    pub fn membership(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n + 1];
        for &t in &self.ids {
            m[t] = true;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandPair {
    pub s: VertexId,
    pub t: VertexId,
    pub demand: f64,
}

/// Vertex pairs with positive demands; multicut and routing input.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemandPairs {
    pub pairs: Vec<DemandPair>,
}

impl DemandPairs {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Instance format
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: nonpositive weight")]
    NonpositiveWeight { line: usize },
    #[error("line {line}: vertex id {v} out of range 1..={n}")]
    VertexOutOfRange { line: usize, v: usize, n: usize },
    #[error("no terminals")]
    NoTerminals,
    #[error("declared {declared} edges but found {found}")]
    EdgeCountMismatch { declared: usize, found: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Result of parsing one instance file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedInstance {
    pub graph: WeightedGraph,
    pub terminals: TerminalSet,
    pub demands: Option<DemandPairs>,
    /// One entry per ignored duplicate terminal line.
    pub warnings: Vec<String>,
}

/// Parses the line-oriented instance format:
/// `p steiner <n> <m>`, then `t <v>` per terminal, `e <u> <v> <w>` per edge,
/// optional `d <s> <t> [demand]` per pair. `#` starts a comment.
pub fn parse_instance(text: &str) -> Result<ParsedInstance, ParseError> {
    let mut n = 0usize;
    let mut declared_m = 0usize;
    let mut saw_header = false;
    let mut terminals: Vec<VertexId> = Vec::new();
    let mut edges: Vec<(VertexId, VertexId, f64)> = Vec::new();
    let mut demands: Vec<DemandPair> = Vec::new();
    let mut saw_demands = false;
    let mut warnings = Vec::new();

    let malformed = |line: usize, msg: &str| ParseError::Malformed { line, msg: msg.to_string() };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tok = content.split_whitespace();
        let Some(kind) = tok.next() else { continue };
        let rest: Vec<&str> = tok.collect();
        let parse_id = |s: &str| -> Result<usize, ParseError> {
            s.parse::<usize>().map_err(|_| malformed(line, &format!("bad vertex id '{s}'")))
        };
        match kind {
            "p" => {
                if saw_header {
                    return Err(malformed(line, "duplicate header"));
                }
                if rest.len() != 3 || rest[0] != "steiner" {
                    return Err(malformed(line, "expected 'p steiner <n> <m>'"));
                }
                n = parse_id(rest[1])?;
                declared_m = parse_id(rest[2])?;
                if n == 0 {
                    return Err(malformed(line, "vertex count must be positive"));
                }
                saw_header = true;
            }
            "t" => {
                if !saw_header {
                    return Err(malformed(line, "terminal before header"));
                }
                if rest.len() != 1 {
                    return Err(malformed(line, "expected 't <v>'"));
                }
                let v = parse_id(rest[0])?;
                if v == 0 || v > n {
                    return Err(ParseError::VertexOutOfRange { line, v, n });
                }
                if terminals.contains(&v) {
                    warnings.push(format!("line {line}: duplicate terminal {v} ignored"));
                } else {
                    terminals.push(v);
                }
            }
            "e" => {
                if !saw_header {
                    return Err(malformed(line, "edge before header"));
                }
                if rest.len() != 3 {
                    return Err(malformed(line, "expected 'e <u> <v> <w>'"));
                }
                let u = parse_id(rest[0])?;
                let v = parse_id(rest[1])?;
                let w: f64 = rest[2]
                    .parse()
                    .map_err(|_| malformed(line, &format!("bad weight '{}'", rest[2])))?;
                for x in [u, v] {
                    if x == 0 || x > n {
                        return Err(ParseError::VertexOutOfRange { line, v: x, n });
                    }
                }
                if u == v {
                    return Err(malformed(line, "self-loop"));
                }
                if w <= 0.0 || !w.is_finite() {
                    return Err(ParseError::NonpositiveWeight { line });
                }
                edges.push((u, v, w));
            }
            "d" => {
                if !saw_header {
                    return Err(malformed(line, "demand before header"));
                }
                if rest.len() != 2 && rest.len() != 3 {
                    return Err(malformed(line, "expected 'd <s> <t> [demand]'"));
                }
                let s = parse_id(rest[0])?;
                let t = parse_id(rest[1])?;
                let demand: f64 = if rest.len() == 3 {
                    rest[2]
                        .parse()
                        .map_err(|_| malformed(line, &format!("bad demand '{}'", rest[2])))?
                } else {
                    1.0
                };
                for x in [s, t] {
                    if x == 0 || x > n {
                        return Err(ParseError::VertexOutOfRange { line, v: x, n });
                    }
                }
                if s == t {
                    return Err(malformed(line, "demand endpoints must differ"));
                }
                if demand <= 0.0 || !demand.is_finite() {
                    return Err(ParseError::NonpositiveWeight { line });
                }
                saw_demands = true;
                demands.push(DemandPair { s, t, demand });
            }
            other => return Err(malformed(line, &format!("unknown record '{other}'"))),
        }
    }

    if !saw_header {
        return Err(malformed(1, "missing 'p steiner' header"));
    }
    if edges.len() != declared_m {
        return Err(ParseError::EdgeCountMismatch { declared: declared_m, found: edges.len() });
    }
    if terminals.is_empty() {
        return Err(ParseError::NoTerminals);
    }
    let graph = WeightedGraph::merged(n, edges)?;
    let terminals = TerminalSet::new(terminals, n).map_err(|e| match e {
        TerminalError::Empty => ParseError::NoTerminals,
        // Range and duplicates were handled per line.
        other => ParseError::Malformed { line: 0, msg: other.to_string() },
    })?;
    Ok(ParsedInstance {
        graph,
        terminals,
        demands: if saw_demands { Some(DemandPairs { pairs: demands }) } else { None },
        warnings,
    })
}

/// Inverse of `parse_instance` on valid instances.
pub fn serialize_instance(g: &WeightedGraph, ts: &TerminalSet, demands: Option<&DemandPairs>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p steiner {} {}", g.n(), g.m());
    for &t in ts.ids() {
        let _ = writeln!(out, "t {t}");
    }
    for e in g.edges() {
        let _ = writeln!(out, "e {} {} {}", e.u, e.v, e.w);
    }
    if let Some(d) = demands {
        for p in &d.pairs {
            let _ = writeln!(out, "d {} {} {}", p.s, p.t, p.demand);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Shortest paths
// ---------------------------------------------------------------------------

/// All-pairs shortest-path distances (the metric the tree sampler embeds).
#[derive(Debug, Clone)]
pub struct Metric {
    n: usize,
    dist: Vec<Vec<f64>>,
}

impl Metric {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dist(&self, u: VertexId, v: VertexId) -> f64 {
        self.dist[u][v]
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for u in 1..=self.n {
            for v in (u + 1)..=self.n {
                d = d.max(self.dist[u][v]);
            }
        }
        d
    }
}

/// Weighted shortest-path distances from every vertex (Dijkstra per source).
pub fn shortest_path_metric(g: &WeightedGraph) -> Metric {
    let n = g.n();
    let mut dist = vec![vec![f64::INFINITY; n + 1]; n + 1];
    for s in 1..=n {
        dijkstra_into(g, s, |_| 1.0, &mut dist[s]);
    }
    Metric { n, dist }
}

/// Dijkstra from `source` under per-edge length `w(e) * length(edge index)`.
/// Fills `out[v]` for every vertex; `out` must have length `n + 1`.
pub(crate) fn dijkstra_into<F: Fn(usize) -> f64>(g: &WeightedGraph, source: VertexId, length: F, out: &mut [f64]) {
    #[derive(PartialEq)]
    struct Item(f64, VertexId);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Item {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            // Min-heap on distance, ties by vertex id.
            other
                .0
                .partial_cmp(&self.0)
                .unwrap()
                .then_with(|| other.1.cmp(&self.1))
        }
    }
    for d in out.iter_mut() {
        *d = f64::INFINITY;
    }
    out[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Item(0.0, source));
    while let Some(Item(d, u)) = heap.pop() {
        if d > out[u] {
            continue;
        }
        for &(v, w, idx) in g.adj(u) {
            let nd = d + w * length(idx);
            if nd < out[v] {
                out[v] = nd;
                heap.push(Item(nd, v));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Min s-t cut (Dinic)
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CutError {
    #[error("source set is empty")]
    EmptySources,
    #[error("sink set is empty")]
    EmptySinks,
    #[error("vertex {0} is both a source and a sink")]
    Overlap(VertexId),
    #[error("vertex {v} out of range 1..={n}")]
    OutOfRange { v: VertexId, n: usize },
}

const FLOW_EPS: f64 = 1e-12;

struct Dinic {
    // arcs stored as (to, cap); arc i's reverse is i ^ 1
    to: Vec<usize>,
    cap: Vec<f64>,
    head: Vec<Vec<usize>>,
}

impl Dinic {
    fn new(nodes: usize) -> Self {
        Dinic { to: Vec::new(), cap: Vec::new(), head: vec![Vec::new(); nodes] }
    }

    fn add(&mut self, u: usize, v: usize, cap_uv: f64, cap_vu: f64) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(cap_uv);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(cap_vu);
    }

    fn bfs(&self, s: usize, level: &mut [i32]) -> bool {
        for l in level.iter_mut() {
            *l = -1;
        }
        level[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.head[u] {
                let v = self.to[a];
                if self.cap[a] > FLOW_EPS && level[v] < 0 {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        true
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64, level: &[i32], it: &mut [usize]) -> f64 {
        if u == t {
            return pushed;
        }
        while it[u] < self.head[u].len() {
            let a = self.head[u][it[u]];
            let v = self.to[a];
            if self.cap[a] > FLOW_EPS && level[v] == level[u] + 1 {
                let got = self.dfs(v, t, pushed.min(self.cap[a]), level, it);
                if got > FLOW_EPS {
                    self.cap[a] -= got;
                    self.cap[a ^ 1] += got;
                    return got;
                }
            }
            it[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let nodes = self.head.len();
        let mut flow = 0.0;
        let mut level = vec![-1i32; nodes];
        loop {
            self.bfs(s, &mut level);
            if level[t] < 0 {
                return flow;
            }
            let mut it = vec![0usize; nodes];
            loop {
                let got = self.dfs(s, t, f64::INFINITY, &level, &mut it);
                if got <= FLOW_EPS {
                    break;
                }
                flow += got;
            }
        }
    }

    fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &a in &self.head[u] {
                let v = self.to[a];
                if self.cap[a] > FLOW_EPS && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

/// Minimum-weight edge set separating `sources` from `sinks` (both contracted).
///
/// Returns the cut value and the minimal source side (sorted vertex ids).
/// Exact on integral weights: all flow arithmetic stays integral.
pub fn min_st_cut(
    g: &WeightedGraph,
    sources: &[VertexId],
    sinks: &[VertexId],
) -> Result<(f64, Vec<VertexId>), CutError> {
    if sources.is_empty() {
        return Err(CutError::EmptySources);
    }
    if sinks.is_empty() {
        return Err(CutError::EmptySinks);
    }
    let n = g.n();
    let mut role = vec![0u8; n + 1];
    for &s in sources {
        if s == 0 || s > n {
            return Err(CutError::OutOfRange { v: s, n });
        }
        role[s] = 1;
    }
    for &t in sinks {
        if t == 0 || t > n {
            return Err(CutError::OutOfRange { v: t, n });
        }
        if role[t] == 1 {
            return Err(CutError::Overlap(t));
        }
        role[t] = 2;
    }

    // internal nodes: 0..n-1 are vertices 1..=n; n = supersource, n+1 = supersink
    let s_node = n;
    let t_node = n + 1;
    let inf = g.total_weight() + 1.0;
    let mut net = Dinic::new(n + 2);
    for e in g.edges() {
        net.add(e.u - 1, e.v - 1, e.w, e.w);
    }
    for v in 1..=n {
        match role[v] {
            1 => net.add(s_node, v - 1, inf, 0.0),
            2 => net.add(v - 1, t_node, inf, 0.0),
            _ => {}
        }
    }
    let value = net.max_flow(s_node, t_node);
    let seen = net.reachable(s_node);
    let side: Vec<VertexId> = (1..=n).filter(|&v| seen[v - 1]).collect();
    Ok((value, side))
}

/// Max s-t flow value (single pair); capacities are the edge weights.
pub fn max_flow_value(g: &WeightedGraph, s: VertexId, t: VertexId) -> Result<f64, CutError> {
    min_st_cut(g, &[s], &[t]).map(|(v, _)| v)
}

// ---------------------------------------------------------------------------
// Instance generators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InstanceKind {
    Grid { rows: usize, cols: usize },
    Gnp { n: usize, p: f64 },
    StarOfCliques { cliques: usize, clique_size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub kind: InstanceKind,
    /// Number of terminals, sampled uniformly without replacement.
    pub terminals: usize,
    /// Number of demand pairs between distinct terminals.
    pub pairs: usize,
    /// Weights are uniform integers in `1..=max_weight`.
    pub max_weight: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("requested {k} terminals but the graph has {n} vertices")]
    TooManyTerminals { k: usize, n: usize },
    #[error("could not generate a connected graph in {0} attempts")]
    RetryBudgetExhausted(usize),
}

const GNP_RETRIES: usize = 64;

/// Deterministic instance generator: same `(params, seed)` gives the same
/// instance regardless of platform or thread count.
pub fn generate_instance(
    params: &GenParams,
    seed: u64,
) -> Result<(WeightedGraph, TerminalSet, DemandPairs), GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw_w = |rng: &mut ChaCha8Rng| -> f64 {
        if params.max_weight <= 1 {
            1.0
        } else {
            rng.random_range(1..=params.max_weight) as f64
        }
    };
    if params.max_weight == 0 {
        return Err(GenError::BadParams("max_weight must be at least 1".into()));
    }

    let graph = match params.kind {
        InstanceKind::Grid { rows, cols } => {
            if rows == 0 || cols == 0 {
                return Err(GenError::BadParams("grid dimensions must be positive".into()));
            }
            let id = |r: usize, c: usize| (r - 1) * cols + c;
            let mut edges = Vec::new();
            for r in 1..=rows {
                for c in 1..=cols {
                    if c < cols {
                        edges.push((id(r, c), id(r, c + 1), draw_w(&mut rng)));
                    }
                    if r < rows {
                        edges.push((id(r, c), id(r + 1, c), draw_w(&mut rng)));
                    }
                }
            }
            WeightedGraph::new(rows * cols, edges)
                .map_err(|e| GenError::BadParams(e.to_string()))?
        }
        InstanceKind::Gnp { n, p } => {
            if n == 0 || !(0.0..=1.0).contains(&p) {
                return Err(GenError::BadParams("need n >= 1 and p in [0, 1]".into()));
            }
            let mut found = None;
            for _ in 0..GNP_RETRIES {
                let mut edges = Vec::new();
                for u in 1..=n {
                    for v in (u + 1)..=n {
                        if rng.random::<f64>() < p {
                            edges.push((u, v, draw_w(&mut rng)));
                        }
                    }
                }
                match WeightedGraph::new(n, edges) {
                    Ok(g) => {
                        found = Some(g);
                        break;
                    }
                    Err(GraphError::Disconnected { .. }) => continue,
                    Err(e) => return Err(GenError::BadParams(e.to_string())),
                }
            }
            found.ok_or(GenError::RetryBudgetExhausted(GNP_RETRIES))?
        }
        InstanceKind::StarOfCliques { cliques, clique_size } => {
            if cliques == 0 || clique_size == 0 {
                return Err(GenError::BadParams("need at least one clique of size one".into()));
            }
            let n = 1 + cliques * clique_size;
            let mut edges = Vec::new();
            for c in 0..cliques {
                let base = 2 + c * clique_size;
                edges.push((1, base, draw_w(&mut rng)));
                for i in 0..clique_size {
                    for j in (i + 1)..clique_size {
                        edges.push((base + i, base + j, draw_w(&mut rng)));
                    }
                }
            }
            WeightedGraph::new(n, edges).map_err(|e| GenError::BadParams(e.to_string()))?
        }
    };

    let n = graph.n();
    let k = params.terminals;
    if k > n {
        return Err(GenError::TooManyTerminals { k, n });
    }
    if k == 0 {
        return Err(GenError::BadParams("need at least one terminal".into()));
    }
    // partial Fisher-Yates: first k entries are a uniform sample without replacement
    let mut pool: Vec<VertexId> = (1..=n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    let mut ids: Vec<VertexId> = pool[..k].to_vec();
    ids.sort_unstable();
    let terminals = TerminalSet::new(ids, n).expect("sampled terminals are valid");

    if params.pairs > 0 && k < 2 {
        return Err(GenError::BadParams("demand pairs need at least two terminals".into()));
    }
    let mut pairs = Vec::with_capacity(params.pairs);
    for _ in 0..params.pairs {
        let a = rng.random_range(0..k);
        let mut b = rng.random_range(0..k - 1);
        if b >= a {
            b += 1;
        }
        pairs.push(DemandPair { s: terminals.ids()[a], t: terminals.ids()[b], demand: 1.0 });
    }
    Ok((graph, terminals, DemandPairs { pairs }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> WeightedGraph {
        WeightedGraph::new(3, vec![(1, 2, 1.0), (2, 3, 1.0)]).unwrap()
    }

    fn triangle() -> WeightedGraph {
        WeightedGraph::new(3, vec![(1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)]).unwrap()
    }

    #[test]
    fn parse_basic_instance() {
        let text = "p steiner 3 2\nt 1\nt 3\ne 1 2 1\ne 2 3 1\n";
        let parsed = parse_instance(text).unwrap();
        assert_eq!(parsed.graph.n(), 3);
        assert_eq!(parsed.graph.m(), 2);
        assert_eq!(parsed.terminals.k(), 2);
        assert!(parsed.demands.is_none());
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn parse_rejects_zero_terminals() {
        let err = parse_instance("p steiner 2 1\ne 1 2 1\n").unwrap_err();
        assert_eq!(err, ParseError::NoTerminals);
    }

    #[test]
    fn parse_merges_duplicate_edges() {
        let text = "p steiner 2 2\nt 1\nt 2\ne 1 2 1\ne 1 2 1\n";
        let parsed = parse_instance(text).unwrap();
        assert_eq!(parsed.graph.m(), 1);
        assert_eq!(parsed.graph.edges()[0].w, 2.0);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = parse_instance("p steiner 2 1\nt 1\ne 1 5 1\n").unwrap_err();
        assert_eq!(err, ParseError::VertexOutOfRange { line: 3, v: 5, n: 2 });
        let err = parse_instance("p steiner 2 1\nt 1\ne 1 2 -3\n").unwrap_err();
        assert_eq!(err, ParseError::NonpositiveWeight { line: 3 });
        let err = parse_instance("p steiner 2 1\nt 1\nq 1\n").unwrap_err();
        assert!(matches!(err, ParseError::Malformed { line: 3, .. }));
    }

    #[test]
    fn parse_rejects_disconnected() {
        let err = parse_instance("p steiner 4 2\nt 1\ne 1 2 1\ne 3 4 1\n").unwrap_err();
        assert_eq!(err, ParseError::Graph(GraphError::Disconnected { components: 2 }));
    }

    #[test]
    fn parse_warns_on_duplicate_terminals() {
        let text = "p steiner 2 1\nt 1\nt 1\nt 2\ne 1 2 1\n";
        let parsed = parse_instance(text).unwrap();
        assert_eq!(parsed.terminals.k(), 2);
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn parse_demand_defaults_to_one() {
        let text = "p steiner 2 1\nt 1\nt 2\ne 1 2 1\nd 1 2\n";
        let parsed = parse_instance(text).unwrap();
        assert_eq!(parsed.demands.unwrap().pairs[0].demand, 1.0);
    }

    #[test]
    fn roundtrip_parse_serialize() {
        let text = "p steiner 4 4\nt 2\nt 4\ne 1 2 2\ne 2 3 0.5\ne 3 4 1\ne 1 4 3\nd 2 4 1.5\n";
        let a = parse_instance(text).unwrap();
        let ser = serialize_instance(&a.graph, &a.terminals, a.demands.as_ref());
        let b = parse_instance(&ser).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.terminals, b.terminals);
        assert_eq!(a.demands, b.demands);
    }

    #[test]
    fn metric_on_path() {
        let g = WeightedGraph::new(3, vec![(1, 2, 2.0), (2, 3, 3.0)]).unwrap();
        let m = shortest_path_metric(&g);
        assert_eq!(m.dist(1, 3), 5.0);
        for v in 1..=3 {
            assert_eq!(m.dist(v, v), 0.0);
        }
    }

    #[test]
    fn metric_on_triangle() {
        let m = shortest_path_metric(&triangle());
        for u in 1..=3 {
            for v in 1..=3 {
                if u != v {
                    assert_eq!(m.dist(u, v), 1.0);
                }
            }
        }
    }

    #[test]
    fn min_cut_on_path() {
        let (value, side) = min_st_cut(&path3(), &[1], &[3]).unwrap();
        assert_eq!(value, 1.0);
        assert!(side.contains(&1));
        assert!(!side.contains(&3));
    }

    /// Independent oracle: minimum over all vertex sides containing the
    /// sources and excluding the sinks.
    fn brute_force_cut(g: &WeightedGraph, sources: &[VertexId], sinks: &[VertexId]) -> f64 {
        let n = g.n();
        let mut best = f64::INFINITY;
        for mask in 0u64..(1 << n) {
            let inside = |v: VertexId| mask >> (v - 1) & 1 == 1;
            if sources.iter().any(|&s| !inside(s)) || sinks.iter().any(|&t| inside(t)) {
                continue;
            }
            let cut: f64 = g.edges().iter().filter(|e| inside(e.u) != inside(e.v)).map(|e| e.w).sum();
            best = best.min(cut);
        }
        best
    }

    #[test]
    fn min_cut_on_triangle_matches_enumeration() {
        let g = triangle();
        assert_eq!(brute_force_cut(&g, &[1], &[2]), 2.0);
        let (value, _) = min_st_cut(&g, &[1], &[2]).unwrap();
        assert_eq!(value, 2.0);
    }

    #[test]
    fn min_cut_rejects_overlap() {
        assert_eq!(min_st_cut(&path3(), &[1, 2], &[2]).unwrap_err(), CutError::Overlap(2));
    }

    #[test]
    fn min_cut_matches_brute_force_on_random_graphs() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut tested = 0;
        while tested < 60 {
            let n = rng.random_range(2..=9usize);
            let p = rng.random_range(0.3..0.9);
            let mut edges = Vec::new();
            for u in 1..=n {
                for v in (u + 1)..=n {
                    if rng.random::<f64>() < p {
                        edges.push((u, v, rng.random_range(1..=6) as f64));
                    }
                }
            }
            let Ok(g) = WeightedGraph::new(n, edges) else { continue };
            tested += 1;
            let s = rng.random_range(1..=n);
            let mut t = rng.random_range(1..=n - 1);
            if t >= s {
                t += 1;
            }
            let (value, side) = min_st_cut(&g, &[s], &[t]).unwrap();
            assert_eq!(value, brute_force_cut(&g, &[s], &[t]), "n={n} s={s} t={t}");
            // reported side realizes the reported value
            let side_cut: f64 = g
                .edges()
                .iter()
                .filter(|e| side.contains(&e.u) != side.contains(&e.v))
                .map(|e| e.w)
                .sum();
            assert_eq!(side_cut, value);
        }
    }

    #[test]
    fn metric_satisfies_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let params = GenParams {
                kind: InstanceKind::Gnp { n: 12, p: 0.3 },
                terminals: 3,
                pairs: 0,
                max_weight: 9,
            };
            let seed = rng.random::<u64>();
            let (g, _, _) = generate_instance(&params, seed).unwrap();
            let m = shortest_path_metric(&g);
            for a in 1..=g.n() {
                for b in 1..=g.n() {
                    for c in 1..=g.n() {
                        assert!(m.dist(a, c) <= m.dist(a, b) + m.dist(b, c) + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn grid_generator_shape() {
        let params = GenParams {
            kind: InstanceKind::Grid { rows: 2, cols: 2 },
            terminals: 2,
            pairs: 1,
            max_weight: 1,
        };
        let (g, ts, dp) = generate_instance(&params, 0).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.m(), 4);
        assert_eq!(ts.k(), 2);
        assert_eq!(dp.len(), 1);
    }

    #[test]
    fn generator_is_deterministic() {
        let params = GenParams {
            kind: InstanceKind::Gnp { n: 15, p: 0.3 },
            terminals: 5,
            pairs: 3,
            max_weight: 7,
        };
        let a = generate_instance(&params, 99).unwrap();
        let b = generate_instance(&params, 99).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(&params, 100).unwrap();
        assert!(a != c);
    }

    #[test]
    fn generator_rejects_too_many_terminals() {
        let params = GenParams {
            kind: InstanceKind::Grid { rows: 2, cols: 2 },
            terminals: 5,
            pairs: 0,
            max_weight: 1,
        };
        assert_eq!(
            generate_instance(&params, 0).unwrap_err(),
            GenError::TooManyTerminals { k: 5, n: 4 }
        );
    }

    #[test]
    fn star_of_cliques_shape() {
        let params = GenParams {
            kind: InstanceKind::StarOfCliques { cliques: 3, clique_size: 4 },
            terminals: 6,
            pairs: 0,
            max_weight: 3,
        };
        let (g, _, _) = generate_instance(&params, 5).unwrap();
        assert_eq!(g.n(), 13);
        assert_eq!(g.m(), 3 + 3 * 6);
    }
}
