//! Bottleneck-path connection times and the remaining-lifetime estimate.
//!
//! The connection time of a node is the widest-path value from the base
//! station: the best, over all paths, of the smallest node weight on the path.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::energy::NetworkState;
use crate::error::{Error, Result};

/// Largest graph accepted by [`brute_force_ct`].
pub const BRUTE_FORCE_LIMIT: usize = 12;

/// Node-weighted undirected graph. Node 0 is the base station, whose weight is
/// `+inf`; it only ever takes part in min/max comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeGraph {
    pub weights: Vec<f64>,
    pub adj: Vec<Vec<usize>>,
    /// External id of each node (sensor index + 1 for state-built graphs).
    pub ids: Vec<usize>,
}

impl LifetimeGraph {
    /// Graph with the base station as node 0 and `weights` for nodes `1..`.
    pub fn new(sensor_weights: &[f64], edges: &[(usize, usize)]) -> Self {
        let n = sensor_weights.len() + 1;
        let mut weights = Vec::with_capacity(n);
        weights.push(f64::INFINITY);
        weights.extend(sensor_weights.iter().map(|w| w.max(0.0)));
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b && !adj[a].contains(&b) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        LifetimeGraph {
            weights,
            adj,
            ids: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Builds the graph of the current network: alive sensors weighted by
    /// `(e - e_th) / p`, linked when within `r_c`. Also returns, for each
    /// sensor, its node index (if alive).
    pub fn from_state(state: &NetworkState) -> (Self, Vec<Option<usize>>) {
        let p = state.params();
        let mut node_of = vec![None; state.sensors.len()];
        let mut weights = Vec::new();
        let mut pos = Vec::new();
        for s in state.sensors.iter().filter(|s| s.alive) {
            node_of[s.id] = Some(weights.len() + 1);
            weights.push((s.energy - p.e_th).max(0.0) / s.rate);
            pos.push(s.position);
        }
        let bs = state.instance.base_station;
        let mut edges = Vec::new();
        for (a, pa) in pos.iter().enumerate() {
            if pa.dist(&bs) <= p.r_c {
                edges.push((0, a + 1));
            }
            for (b, pb) in pos.iter().enumerate().skip(a + 1) {
                if pa.dist(pb) <= p.r_c {
                    edges.push((a + 1, b + 1));
                }
            }
        }
        let mut g = LifetimeGraph::new(&weights, &edges);
        g.ids = std::iter::once(0)
            .chain(state.sensors.iter().filter(|s| s.alive).map(|s| s.id + 1))
            .collect();
        (g, node_of)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64, Reverse<usize>);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Connection time of every node. Unreachable nodes stay at 0.
pub fn connection_times(g: &LifetimeGraph) -> Vec<f64> {
    connection_times_traced(g, |_, _| {})
}

/// [`connection_times`] with a callback invoked as each node is finalized,
/// receiving the node and its value at that moment. Ties between frontier
/// nodes of equal value go to the lowest node index.
pub fn connection_times_traced(g: &LifetimeGraph, mut on_final: impl FnMut(usize, f64)) -> Vec<f64> {
    let n = g.len();
    if n == 0 {
        return Vec::new();
    }
    let mut d = vec![0.0; n];
    d[0] = f64::INFINITY;
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::with_capacity(n);
    heap.push(Key(d[0], Reverse(0)));

    while let Some(Key(dx, Reverse(x))) = heap.pop() {
        if done[x] || dx != d[x] {
            continue;
        }
        done[x] = true;
        on_final(x, d[x]);
        for &y in &g.adj[x] {
            let cand = d[x].min(g.weights[y]);
            if cand > d[y] {
                d[y] = cand;
                if !done[y] {
                    heap.push(Key(cand, Reverse(y)));
                }
            }
        }
    }
    // whatever is left was never reached and keeps its initial 0
    for x in 0..n {
        if !done[x] {
            on_final(x, d[x]);
        }
    }
    d
}

/// Exhaustive simple-path enumeration from node 0; the test oracle for
/// [`connection_times`].
pub fn brute_force_ct(g: &LifetimeGraph) -> Result<Vec<f64>> {
    let n = g.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::GraphTooLarge {
            nodes: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut best = vec![0.0; n];
    if n == 0 {
        return Ok(best);
    }
    let mut on_path = vec![false; n];
    fn dfs(g: &LifetimeGraph, x: usize, width: f64, on_path: &mut [bool], best: &mut [f64]) {
        if width > best[x] {
            best[x] = width;
        }
        on_path[x] = true;
        for &y in &g.adj[x] {
            if !on_path[y] {
                dfs(g, y, width.min(g.weights[y]), on_path, best);
            }
        }
        on_path[x] = false;
    }
    dfs(g, 0, f64::INFINITY, &mut on_path, &mut best);
    Ok(best)
}

/// Minimum over targets of the best connection time among the target's alive
/// monitors; 0 on a dead network.
pub fn estimate_remaining_lifetime(state: &NetworkState) -> f64 {
    if state.dead {
        return 0.0;
    }
    let (g, node_of) = LifetimeGraph::from_state(state);
    let ct = connection_times(&g);
    fhat_from_connection_times(state, &ct, &node_of)
}

pub fn fhat_from_connection_times(state: &NetworkState, ct: &[f64], node_of: &[Option<usize>]) -> f64 {
    state
        .instance
        .monitors
        .iter()
        .map(|ms| {
            ms.iter()
                .map(|&j| node_of[j].map_or(0.0, |x| ct[x]))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// JSON graph exchange format: `{nodes: [{id, weight}], edges: [[i, j]]}`.
/// The node with id 0 is the base station; its weight, if present, is ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphNode {
    pub id: usize,
    #[serde(default)]
    pub weight: Option<f64>,
}

impl GraphFile {
    pub fn to_graph(&self) -> Result<LifetimeGraph> {
        let mut index = HashMap::new();
        index.insert(0usize, 0usize);
        let mut ids = vec![0];
        let mut weights = Vec::new();
        for node in self.nodes.iter().filter(|n| n.id != 0) {
            let w = node
                .weight
                .ok_or_else(|| Error::Parse(format!("node {} has no weight", node.id)))?;
            if !(w >= 0.0) {
                return Err(Error::Validation(format!("node {} has negative or NaN weight", node.id)));
            }
            if index.insert(node.id, ids.len()).is_some() {
                return Err(Error::Parse(format!("duplicate node id {}", node.id)));
            }
            ids.push(node.id);
            weights.push(w);
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for [a, b] in &self.edges {
            let ia = *index.get(a).ok_or_else(|| Error::Parse(format!("edge references unknown node {a}")))?;
            let ib = *index.get(b).ok_or_else(|| Error::Parse(format!("edge references unknown node {b}")))?;
            edges.push((ia, ib));
        }
        let mut g = LifetimeGraph::new(&weights, &edges);
        g.ids = ids;
        Ok(g)
    }
}
