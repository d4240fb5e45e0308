//! Layer decomposition along a shortest path, and how long each layer stays
//! leading during a run.
//!
//! Fix a shortest path `p_0 .. p_d` from a source to a target. Node `v` is in
//! layer `i` when `i` is the largest index with an edge `v -> p_i`; nodes
//! with no edge into the path belong to no layer. The leading layer at a
//! step is the largest layer index holding an awake node.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{bfs, Network, NetworkResult};
use crate::numeric::instance_r;
use crate::schedule::{delay_budget, Mode, NodeId, ScheduleParams};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerDecomposition {
    pub path: Vec<NodeId>,
    /// `layers[i]` holds the nodes of layer `i`, sorted by id.
    pub layers: Vec<Vec<NodeId>>,
}

impl LayerDecomposition {
    pub fn sizes(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    pub fn layer_of(&self, v: NodeId) -> Option<usize> {
        self.layers.iter().position(|l| l.binary_search(&v).is_ok())
    }
}

/// Shortest path from `source` to `target`, choosing the lowest id at every
/// hop among successors that stay on some shortest path.
pub fn shortest_path(net: &Network, source: NodeId, target: NodeId) -> Result<Vec<NodeId>> {
    let s = net
        .index_of(source)
        .ok_or_else(|| Error::InvalidNetwork(format!("source {source} is not a node")))?;
    let t = net
        .index_of(target)
        .ok_or_else(|| Error::InvalidNetwork(format!("target {target} is not a node")))?;
    let to_target = bfs(net.in_adj(), t);
    let Some(mut remaining) = to_target[s] else {
        return Err(Error::Unreachable {
            from: source.get(),
            to: target.get(),
        });
    };
    let ids = net.ids();
    let mut path = vec![source];
    let mut cur = s;
    while remaining > 0 {
        cur = net.out_adj()[cur]
            .iter()
            .copied()
            .filter(|&w| to_target[w] == Some(remaining - 1))
            .min_by_key(|&w| ids[w])
            .expect("a successor one hop closer exists");
        path.push(ids[cur]);
        remaining -= 1;
    }
    Ok(path)
}

pub fn layer_decompose(
    net: &Network,
    source: NodeId,
    target: NodeId,
) -> Result<LayerDecomposition> {
    let path = shortest_path(net, source, target)?;
    let mut position = vec![None; net.n()];
    for (i, &p) in path.iter().enumerate() {
        position[net.index_of(p).expect("path nodes exist")] = Some(i);
    }
    let mut layers = vec![Vec::new(); path.len()];
    for (u, outs) in net.out_adj().iter().enumerate() {
        if let Some(i) = outs.iter().filter_map(|&w| position[w]).max() {
            layers[i].push(net.ids()[u]);
        }
    }
    for l in &mut layers {
        l.sort_unstable();
    }
    Ok(LayerDecomposition { path, layers })
}

/// Steps during which each layer was leading, over `[0, completion_step)`.
///
/// Intervals are half-open: a layer leads from the step its first node is
/// awake until the step a higher layer first has an awake node. Steps where
/// no layered node is awake are counted in `idle`, so
/// `sum(durations) + idle == completion_step`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LeadingTrace {
    pub durations: Vec<u64>,
    pub idle: u64,
    pub completion_step: u64,
}

pub fn leading_layer_trace(
    result: &NetworkResult,
    layers: &LayerDecomposition,
) -> Result<LeadingTrace> {
    let completion = result.completion_step.ok_or(Error::Incomplete)?;
    let mut first_awake: Vec<Option<u64>> = vec![None; layers.layers.len()];
    for (i, layer) in layers.layers.iter().enumerate() {
        for &v in layer {
            let w = result.wake_of(v).ok_or(Error::Incomplete)?;
            first_awake[i] = Some(first_awake[i].map_or(w, |cur: u64| cur.min(w)));
        }
    }
    let mut events: Vec<(u64, usize)> = first_awake
        .iter()
        .enumerate()
        .filter_map(|(i, w)| w.map(|w| (w, i)))
        .filter(|&(w, _)| w < completion)
        .collect();
    events.sort_unstable();

    let mut durations = vec![0u64; layers.layers.len()];
    let mut idle = 0;
    let mut leader: Option<usize> = None;
    let mut since = 0u64;
    for (w, i) in events {
        if leader.is_some_and(|l| l >= i) {
            continue;
        }
        match leader {
            Some(l) => durations[l] += w - since,
            None => idle += w - since,
        }
        leader = Some(i);
        since = w;
    }
    match leader {
        Some(l) => durations[l] += completion - since,
        None => idle += completion - since,
    }
    Ok(LeadingTrace {
        durations,
        idle,
        completion_step: completion,
    })
}

/// One layer's leading time against its single-hop budget.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerBudgetRow {
    pub layer: usize,
    pub size: usize,
    pub r: u64,
    pub duration: u64,
    pub budget: u64,
    pub within: bool,
}

/// Compares each nonempty layer's leading duration with
/// `kappa * budget(r_i, size_i)`. Empty layers must have zero duration.
pub fn layer_budget_report(
    layers: &LayerDecomposition,
    trace: &LeadingTrace,
    params: &ScheduleParams,
    mode: Mode,
    kappa: f64,
) -> Vec<LayerBudgetRow> {
    layers
        .layers
        .iter()
        .zip(&trace.durations)
        .enumerate()
        .map(|(i, (layer, &duration))| {
            if layer.is_empty() {
                return LayerBudgetRow {
                    layer: i,
                    size: 0,
                    r: 0,
                    duration,
                    budget: 0,
                    within: duration == 0,
                };
            }
            let r = instance_r(layer.iter().map(|v| v.get()));
            let budget = delay_budget(params, mode, r, layer.len() as u64).value;
            LayerBudgetRow {
                layer: i,
                size: layer.len(),
                r,
                duration,
                budget,
                within: duration as f64 <= kappa * budget as f64,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::AlwaysTransmit;
    use crate::network::simulate_network;

    fn id(v: u64) -> NodeId {
        NodeId::new(v).unwrap()
    }

    #[test]
    fn cycle_layers() {
        // 1 -> 2 -> 3 -> 4 -> 1, path 1..4
        let net = Network::cycle(4).unwrap();
        let d = layer_decompose(&net, id(1), id(4)).unwrap();
        assert_eq!(d.path, vec![id(1), id(2), id(3), id(4)]);
        assert_eq!(
            d.layers,
            vec![vec![id(4)], vec![id(1)], vec![id(2)], vec![id(3)]]
        );
    }

    #[test]
    fn complete_graph_layers() {
        let ids: Vec<NodeId> = (1..=5).map(id).collect();
        let net = Network::complete(ids).unwrap();
        let d = layer_decompose(&net, id(2), id(4)).unwrap();
        assert_eq!(d.path, vec![id(2), id(4)]);
        // everyone except the target has an edge to the target
        assert_eq!(d.layers[1], vec![id(1), id(2), id(3), id(5)]);
        assert_eq!(d.layers[0], vec![id(4)]);
    }

    #[test]
    fn lowest_id_tie_break() {
        // 1 -> {3, 2} -> 4, back edges to 1
        let edges = vec![
            (id(1), id(3)),
            (id(1), id(2)),
            (id(2), id(4)),
            (id(3), id(4)),
            (id(4), id(1)),
            (id(2), id(1)),
            (id(3), id(1)),
        ];
        let net = Network::new((1..=4).map(id).collect(), edges).unwrap();
        assert_eq!(
            shortest_path(&net, id(1), id(4)).unwrap(),
            vec![id(1), id(2), id(4)]
        );
        assert!(shortest_path(&net, id(1), id(9)).is_err());
    }

    #[test]
    fn path_durations_are_wake_gaps() {
        let net = Network::cycle(4).unwrap();
        let d = layer_decompose(&net, id(1), id(4)).unwrap();
        let res = simulate_network(&net, &[(id(1), 0)], &AlwaysTransmit, 100).unwrap();
        let trace = leading_layer_trace(&res, &d).unwrap();
        assert_eq!(trace.completion_step, 3);
        for i in 0..3 {
            let gap = res.wake_of(d.path[i + 1]).unwrap() - res.wake_of(d.path[i]).unwrap();
            let layer = d.layer_of(d.path[i]).unwrap();
            assert_eq!(trace.durations[layer], gap);
        }
        assert_eq!(trace.durations.iter().sum::<u64>() + trace.idle, 3);
    }

    #[test]
    fn single_layer_takes_everything() {
        let net = Network::cycle(2).unwrap();
        let d = layer_decompose(&net, id(1), id(2)).unwrap();
        let res = simulate_network(&net, &[(id(1), 0)], &AlwaysTransmit, 10).unwrap();
        let trace = leading_layer_trace(&res, &d).unwrap();
        assert_eq!(trace.durations[1], res.completion_step.unwrap());
        assert_eq!(trace.idle, 0);
    }

    #[test]
    fn incomplete_result_is_rejected() {
        let net = Network::cycle(3).unwrap();
        let d = layer_decompose(&net, id(1), id(3)).unwrap();
        let res = simulate_network(&net, &[(id(1), 0)], &AlwaysTransmit, 1).unwrap();
        assert!(matches!(
            leading_layer_trace(&res, &d),
            Err(Error::Incomplete)
        ));
    }
}
