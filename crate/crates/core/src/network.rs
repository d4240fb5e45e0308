//! Multi-hop directed radio networks.
//!
//! A dormant node wakes on the step after exactly one of its in-neighbours
//! transmits. Awake nodes follow their schedule; they never need to listen.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::{Mode, NodeId, Schedule, ScheduleSeed};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetworkLimits {
    pub max_nodes: usize,
    pub max_edges: usize,
}

impl Default for NetworkLimits {
    fn default() -> Self {
        Self {
            max_nodes: 100_000,
            max_edges: 1_000_000,
        }
    }
}

/// A strongly connected directed graph over distinct node ids. An edge
/// `u -> v` means `v` hears `u`'s transmissions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct Network {
    ids: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId)>,
    index: HashMap<NodeId, usize>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    ids: Vec<NodeId>,
    edges: Vec<[NodeId; 2]>,
}

impl TryFrom<GraphFile> for Network {
    type Error = Error;

    fn try_from(g: GraphFile) -> Result<Self> {
        Network::new(g.ids, g.edges.into_iter().map(|[u, v]| (u, v)).collect())
    }
}

impl From<Network> for GraphFile {
    fn from(net: Network) -> Self {
        GraphFile {
            ids: net.ids,
            edges: net.edges.into_iter().map(|(u, v)| [u, v]).collect(),
        }
    }
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids && self.edges == other.edges
    }
}

impl Network {
    pub fn new(ids: Vec<NodeId>, edges: Vec<(NodeId, NodeId)>) -> Result<Self> {
        Self::with_limits(ids, edges, NetworkLimits::default())
    }

    /// Validates ids, edges and strong connectivity. Duplicate edges are
    /// dropped; edge order is otherwise preserved.
    pub fn with_limits(
        ids: Vec<NodeId>,
        edges: Vec<(NodeId, NodeId)>,
        limits: NetworkLimits,
    ) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::InvalidNetwork("no nodes".into()));
        }
        if ids.len() > limits.max_nodes {
            return Err(Error::LimitExceeded {
                what: "node count",
                requested: ids.len() as u128,
                limit: limits.max_nodes as u128,
            });
        }
        if edges.len() > limits.max_edges {
            return Err(Error::LimitExceeded {
                what: "edge count",
                requested: edges.len() as u128,
                limit: limits.max_edges as u128,
            });
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, &id) in ids.iter().enumerate() {
            if index.insert(id, i).is_some() {
                return Err(Error::DuplicateId(id.get()));
            }
        }
        let mut out = vec![Vec::new(); ids.len()];
        let mut inc = vec![Vec::new(); ids.len()];
        let mut kept = Vec::with_capacity(edges.len());
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for (u, v) in edges {
            let lookup = |x: NodeId| {
                index.get(&x).copied().ok_or_else(|| {
                    Error::InvalidNetwork(format!("edge endpoint {x} is not a node"))
                })
            };
            let (a, b) = (lookup(u)?, lookup(v)?);
            if a == b {
                return Err(Error::InvalidNetwork(format!("self-loop at {u}")));
            }
            if !seen.insert((a, b)) {
                continue;
            }
            out[a].push(b);
            inc[b].push(a);
            kept.push((u, v));
        }
        let net = Self {
            ids,
            edges: kept,
            index,
            out,
            inc,
        };
        net.check_strongly_connected()?;
        Ok(net)
    }

    fn check_strongly_connected(&self) -> Result<()> {
        for adj in [&self.out, &self.inc] {
            let dist = bfs(adj, 0);
            if let Some(i) = dist.iter().position(Option::is_none) {
                let (source, target) = if std::ptr::eq(adj, &self.out) {
                    (self.ids[0], self.ids[i])
                } else {
                    (self.ids[i], self.ids[0])
                };
                return Err(Error::Unreachable {
                    from: source.get(),
                    to: target.get(),
                });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        match (self.index_of(u), self.index_of(v)) {
            (Some(a), Some(b)) => self.out[a].contains(&b),
            _ => false,
        }
    }

    pub(crate) fn out_adj(&self) -> &[Vec<usize>] {
        &self.out
    }

    pub(crate) fn in_adj(&self) -> &[Vec<usize>] {
        &self.inc
    }

    /// Largest id, `L`.
    pub fn max_id(&self) -> NodeId {
        *self.ids.iter().max().expect("nonempty")
    }

    /// Largest shortest-path distance over ordered pairs (`D`). Runs a BFS
    /// from every node.
    pub fn eccentricity(&self) -> usize {
        (0..self.n())
            .map(|s| bfs(&self.out, s).into_iter().flatten().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_with_limits(s: &str, limits: NetworkLimits) -> Result<Self> {
        let g: GraphFile = serde_json::from_str(s)?;
        Self::with_limits(
            g.ids,
            g.edges.into_iter().map(|[u, v]| (u, v)).collect(),
            limits,
        )
    }

    /// `blocks` cliques of `width` nodes; every node of block `b` reaches every
    /// node of block `b + 1`, and the first node of the last block reaches
    /// node 1. Ids are `1..=blocks*width`, block by block.
    pub fn layered_chain(blocks: usize, width: usize) -> Result<Self> {
        if blocks == 0 || width == 0 {
            return Err(Error::InvalidParameter(
                "layered chain needs blocks and width".into(),
            ));
        }
        let id = |b: usize, t: usize| NodeId((b * width + t + 1) as u64);
        let ids = (0..blocks)
            .flat_map(|b| (0..width).map(move |t| id(b, t)))
            .collect();
        let mut edges = Vec::new();
        for b in 0..blocks {
            for s in 0..width {
                for t in 0..width {
                    if s != t {
                        edges.push((id(b, s), id(b, t)));
                    }
                }
                if b + 1 < blocks {
                    for t in 0..width {
                        edges.push((id(b, s), id(b + 1, t)));
                    }
                }
            }
        }
        if blocks > 1 {
            edges.push((id(blocks - 1, 0), id(0, 0)));
        }
        Self::new(ids, edges)
    }

    /// Ids of block `b` in a [`Network::layered_chain`].
    pub fn chain_block(b: usize, width: usize) -> Vec<NodeId> {
        (0..width)
            .map(|t| NodeId((b * width + t + 1) as u64))
            .collect()
    }

    /// Directed cycle `1 -> 2 -> .. -> n -> 1`.
    pub fn cycle(n: usize) -> Result<Self> {
        let ids: Vec<NodeId> = (1..=n as u64).map(NodeId).collect();
        let edges = if n > 1 {
            (0..n).map(|i| (ids[i], ids[(i + 1) % n])).collect()
        } else {
            Vec::new()
        };
        Self::new(ids, edges)
    }

    /// Bidirected clique over the given ids.
    pub fn complete(ids: Vec<NodeId>) -> Result<Self> {
        let mut edges = Vec::new();
        for &u in &ids {
            for &v in &ids {
                if u != v {
                    edges.push((u, v));
                }
            }
        }
        Self::new(ids, edges)
    }

    /// Random strongly connected digraph: a random spanning cycle over ids
    /// `1..=n` plus `extra` distinct random edges.
    pub fn random_strongly_connected(n: usize, extra: usize, rng_seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        let max_extra = n * (n - 1) - if n > 1 { n } else { 0 };
        if extra > max_extra {
            return Err(Error::InvalidParameter(format!(
                "at most {max_extra} extra edges fit on {n} nodes"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let ids: Vec<NodeId> = (1..=n as u64).map(NodeId).collect();
        let mut order = ids.clone();
        order.shuffle(&mut rng);
        let mut edges = Vec::new();
        let mut present = std::collections::HashSet::new();
        if n > 1 {
            for i in 0..n {
                let e = (order[i], order[(i + 1) % n]);
                present.insert(e);
                edges.push(e);
            }
        }
        while edges.len() < extra + if n > 1 { n } else { 0 } {
            let u = ids[rng.random_range(0..n)];
            let v = ids[rng.random_range(0..n)];
            if u != v && present.insert((u, v)) {
                edges.push((u, v));
            }
        }
        Self::new(ids, edges)
    }
}

/// Hop distances from `source` over the adjacency lists.
pub(crate) fn bfs(adj: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].expect("queued nodes have a distance");
        for &w in &adj[u] {
            if dist[w].is_none() {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NetworkResult {
    /// Aligned with [`Network::ids`].
    pub ids: Vec<NodeId>,
    pub wake_time: Vec<Option<u64>>,
    /// Step at which the last node woke, if every node woke.
    pub completion_step: Option<u64>,
}

impl NetworkResult {
    pub fn wake_of(&self, id: NodeId) -> Option<u64> {
        self.ids
            .iter()
            .position(|&x| x == id)
            .and_then(|i| self.wake_time[i])
    }
}

/// Simulates steps `0..horizon` until every node is awake.
pub fn simulate_network<S: Schedule + ?Sized>(
    net: &Network,
    initial: &[(NodeId, u64)],
    schedule: &S,
    horizon: u64,
) -> Result<NetworkResult> {
    if initial.is_empty() {
        return Err(Error::InvalidParameter("no initially woken node".into()));
    }
    let n = net.n();
    let mut wake: Vec<Option<u64>> = vec![None; n];
    let mut pending = BinaryHeap::new();
    for &(id, w) in initial {
        let i = net.index_of(id).ok_or_else(|| {
            Error::InvalidNetwork(format!("initial node {id} is not in the network"))
        })?;
        if wake[i].is_none_or(|cur| w < cur) {
            wake[i] = Some(w);
            pending.push(Reverse((w, i)));
        }
    }

    let mut awake: Vec<usize> = Vec::with_capacity(n);
    let mut is_awake = vec![false; n];
    let mut heard = vec![0u32; n];
    let mut touched = Vec::new();
    let mut j = 0;
    loop {
        while let Some(&Reverse((w, i))) = pending.peek() {
            if w > j.min(horizon) {
                break;
            }
            pending.pop();
            if !is_awake[i] && wake[i] == Some(w) {
                is_awake[i] = true;
                awake.push(i);
            }
        }
        if awake.len() == n || j >= horizon {
            break;
        }
        for &i in &awake {
            let id = net.ids[i];
            if schedule.transmits(id, wake[i].expect("awake"), j) {
                for &w in &net.out[i] {
                    if !is_awake[w] {
                        if heard[w] == 0 {
                            touched.push(w);
                        }
                        heard[w] += 1;
                    }
                }
            }
        }
        for &w in &touched {
            if heard[w] == 1 && wake[w].is_none_or(|cur| cur > j + 1) {
                wake[w] = Some(j + 1);
                pending.push(Reverse((j + 1, w)));
            }
            heard[w] = 0;
        }
        touched.clear();
        if awake.is_empty() {
            // nothing can happen before the next spontaneous wake
            match pending.peek() {
                Some(&Reverse((w, _))) => j = w.max(j + 1),
                None => break,
            }
        } else {
            j += 1;
        }
    }
    let wake_time: Vec<Option<u64>> = (0..n)
        .map(|i| if is_awake[i] { wake[i] } else { None })
        .collect();
    let completion_step = if awake.len() == n {
        wake_time.iter().map(|w| w.expect("all awake")).max()
    } else {
        None
    };
    Ok(NetworkResult {
        ids: net.ids.clone(),
        wake_time,
        completion_step,
    })
}

/// [`simulate_network`] with the seed's schedule for `mode`.
pub fn simulate_network_seeded(
    net: &Network,
    initial: &[(NodeId, u64)],
    seed: &ScheduleSeed,
    mode: Mode,
    horizon: u64,
) -> Result<NetworkResult> {
    simulate_network(net, initial, &seed.schedule(mode), horizon)
}
