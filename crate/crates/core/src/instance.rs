//! (r,k)-instances: node ids with wake-up times.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{instance_r, z_phase, WeightProduct};
use crate::schedule::{delay_budget, DelayBudget, Mode, NodeId, ScheduleParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub wake: u64,
}

/// A nonempty set of distinct node ids with spontaneous wake times.
///
/// Nodes are kept sorted by id, so equal sets compare and hash equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct Instance {
    nodes: Vec<Node>,
    r: u64,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    nodes: Vec<Node>,
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(f: InstanceFile) -> Result<Self> {
        Instance::from_nodes(f.nodes)
    }
}

impl From<Instance> for InstanceFile {
    fn from(inst: Instance) -> Self {
        InstanceFile { nodes: inst.nodes }
    }
}

impl Instance {
    /// Builds and validates an instance from `(id, wake)` pairs.
    pub fn new<I: IntoIterator<Item = (u64, u64)>>(pairs: I) -> Result<Self> {
        let nodes = pairs
            .into_iter()
            .map(|(id, wake)| {
                Ok(Node {
                    id: NodeId::new(id)?,
                    wake,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_nodes(nodes)
    }

    pub fn from_nodes(mut nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyInstance);
        }
        nodes.sort_unstable();
        if let Some(w) = nodes.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::DuplicateId(w[0].id.get()));
        }
        let r = instance_r(nodes.iter().map(|n| n.id.get()));
        Ok(Self { nodes, r })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn k(&self) -> u64 {
        self.nodes.len() as u64
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    /// Earliest wake time, `w(K)`.
    pub fn min_wake(&self) -> u64 {
        self.nodes.iter().map(|n| n.wake).min().expect("nonempty")
    }

    pub fn max_id(&self) -> NodeId {
        self.nodes.last().expect("nonempty").id
    }

    pub fn pairs(&self) -> Vec<(NodeId, u64)> {
        self.nodes.iter().map(|n| (n.id, n.wake)).collect()
    }

    pub fn budget(&self, params: &ScheduleParams, mode: Mode) -> DelayBudget {
        delay_budget(params, mode, self.r, self.k())
    }

    /// Nodes woken by step `j`, with their `r_j` and `k_j`.
    pub fn awake_set(&self, j: u64) -> AwakeSet {
        let nodes: Vec<Node> = self.nodes.iter().copied().filter(|n| n.wake <= j).collect();
        let r = if nodes.is_empty() {
            0
        } else {
            instance_r(nodes.iter().map(|n| n.id.get()))
        };
        AwakeSet {
            k: nodes.len() as u64,
            r,
            nodes,
        }
    }

    /// Every wake time moved later by `delta`.
    pub fn shifted(&self, delta: u64) -> Instance {
        Instance {
            nodes: self
                .nodes
                .iter()
                .map(|n| Node {
                    id: n.id,
                    wake: n.wake + delta,
                })
                .collect(),
            r: self.r,
        }
    }

    /// The earliest step `t` (relative to `w(K)`) with `t > budget(r_t, k_t)`.
    pub fn curtail_point(&self, mode: Mode, params: &ScheduleParams) -> u64 {
        let base = self.min_wake();
        let mut by_wake: Vec<Node> = self.nodes.clone();
        by_wake.sort_unstable_by_key(|n| (n.wake, n.id));

        let mut product = WeightProduct::default();
        let mut k = 0u64;
        let mut i = 0;
        loop {
            let t0 = by_wake[i].wake - base;
            while i < by_wake.len() && by_wake[i].wake - base == t0 {
                product.push(by_wake[i].id.get());
                k += 1;
                i += 1;
            }
            let budget = delay_budget(params, mode, product.floor().max(1), k).value;
            let candidate = t0.max(budget + 1);
            match by_wake.get(i) {
                Some(next) if candidate >= next.wake - base => continue,
                _ => return candidate,
            }
        }
    }

    /// Restricts the instance to the nodes awake strictly before its curtail
    /// point. Idempotent.
    pub fn curtail(&self, mode: Mode, params: &ScheduleParams) -> Instance {
        let cut = self.min_wake() + self.curtail_point(mode, params);
        if self.nodes.iter().all(|n| n.wake < cut) {
            return self.clone();
        }
        Instance::from_nodes(
            self.nodes
                .iter()
                .copied()
                .filter(|n| n.wake < cut)
                .collect(),
        )
        .expect("curtailed instance keeps the first waker")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({}, {})", n.id, n.wake)?;
        }
        write!(f, "]")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AwakeSet {
    pub nodes: Vec<Node>,
    /// `max(1, floor(sum of weights))`, or 0 when empty.
    pub r: u64,
    pub k: u64,
}

/// How a corpus was produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Exhaustive {
        mode: Mode,
        r_max: u64,
        wake_max: u64,
    },
    Random {
        k: u64,
        l: u64,
        pattern: String,
        rng_seed: u64,
        count: u64,
    },
    File,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceCorpus {
    pub provenance: Provenance,
    pub instances: Vec<Instance>,
}

impl InstanceCorpus {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// JSON array of instance objects.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.instances).expect("corpus serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(Self {
            provenance: Provenance::File,
            instances: serde_json::from_str(s)?,
        })
    }
}

pub const DEFAULT_MAX_CORPUS: u128 = 2_000_000;

/// Every curtailed instance with `r <= r_max`, wakes in `0..=wake_max` and
/// at least one wake at 0, in a fixed order: by node count, then ids, then
/// wake vector. Broadcast corpora repeat each instance at every global clock
/// offset in `0..z(budget)`.
pub fn enumerate_instances(
    r_max: u64,
    wake_max: u64,
    mode: Mode,
    params: &ScheduleParams,
    max_instances: u128,
) -> Result<InstanceCorpus> {
    if r_max == 0 || r_max > 60 {
        return Err(Error::InvalidParameter(format!(
            "r_max must be in 1..=60, got {r_max}"
        )));
    }
    let id_sets = id_sets_up_to(r_max);

    let width = u128::from(wake_max) + 1;
    let offsets = match mode {
        Mode::Wakeup => 1,
        // z never exceeds 16
        Mode::Broadcast => 16,
    };
    let mut requested: u128 = 0;
    for set in &id_sets {
        let k = set.len() as u32;
        let patterns = width
            .checked_pow(k)
            .and_then(|a| a.checked_sub((width - 1).pow(k)))
            .unwrap_or(u128::MAX);
        requested = requested.saturating_add(patterns.saturating_mul(offsets));
    }
    if requested > max_instances {
        return Err(Error::LimitExceeded {
            what: "instance corpus",
            requested,
            limit: max_instances,
        });
    }

    let mut seen = HashSet::new();
    let mut instances = Vec::new();
    let mut wakes = Vec::new();
    for set in &id_sets {
        wakes.clear();
        wakes.resize(set.len(), 0u64);
        loop {
            if wakes.contains(&0) {
                let inst = Instance::new(set.iter().copied().zip(wakes.iter().copied()))?
                    .curtail(mode, params);
                match mode {
                    Mode::Wakeup => {
                        if seen.insert(inst.clone()) {
                            instances.push(inst);
                        }
                    }
                    Mode::Broadcast => {
                        let z = z_phase(inst.budget(params, mode).value);
                        for offset in 0..z {
                            let shifted = inst.shifted(offset);
                            if seen.insert(shifted.clone()) {
                                instances.push(shifted);
                            }
                        }
                    }
                }
            }
            if !next_wake_vector(&mut wakes, wake_max) {
                break;
            }
        }
    }
    Ok(InstanceCorpus {
        provenance: Provenance::Exhaustive {
            mode,
            r_max,
            wake_max,
        },
        instances,
    })
}

/// Odometer increment; false after the last vector.
fn next_wake_vector(wakes: &mut [u64], wake_max: u64) -> bool {
    for w in wakes.iter_mut().rev() {
        if *w < wake_max {
            *w += 1;
            return true;
        }
        *w = 0;
    }
    false
}

/// Ascending id sets whose weights sum to less than `r_max + 1`, sorted by
/// size then lexicographically.
fn id_sets_up_to(r_max: u64) -> Vec<Vec<u64>> {
    fn extend(limit: u128, start: u64, product: u128, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        let mut v = start;
        while product * u128::from(v + 1) < limit {
            cur.push(v);
            out.push(cur.clone());
            extend(limit, v + 1, product * u128::from(v + 1), cur, out);
            cur.pop();
            v += 1;
        }
    }
    let limit = 1u128 << (r_max + 1);
    let mut out = Vec::new();
    extend(limit, 1, 1, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Wake-time pattern of generated instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WakePattern {
    /// Every node wakes at step 0.
    Simultaneous,
    /// Independent uniform wakes in `0..=W`.
    UniformStagger(u64),
    /// The i-th sampled node wakes at step `i`, one step after its
    /// predecessor's first transmission opportunity.
    AdversarialChain,
}

impl fmt::Display for WakePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WakePattern::Simultaneous => f.write_str("simultaneous"),
            WakePattern::UniformStagger(w) => write!(f, "stagger:{w}"),
            WakePattern::AdversarialChain => f.write_str("chain"),
        }
    }
}

impl FromStr for WakePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simultaneous" => Ok(WakePattern::Simultaneous),
            "chain" | "adversarial-chain" => Ok(WakePattern::AdversarialChain),
            _ => {
                let w = s
                    .strip_prefix("stagger:")
                    .or_else(|| s.strip_prefix("uniform-stagger:"))
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!("unknown wake pattern `{s}`"))
                    })?;
                Ok(WakePattern::UniformStagger(w))
            }
        }
    }
}

/// `k` distinct ids drawn uniformly from `1..=l`, with wakes per `pattern`.
pub fn random_instance(k: u64, l: u64, pattern: WakePattern, rng_seed: u64) -> Result<Instance> {
    if k == 0 {
        return Err(Error::EmptyInstance);
    }
    if k > l {
        return Err(Error::InvalidParameter(format!(
            "cannot draw {k} distinct ids from 1..={l}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let ids = index::sample(&mut rng, l as usize, k as usize);
    let nodes = ids
        .iter()
        .enumerate()
        .map(|(i, idx)| {
            let wake = match pattern {
                WakePattern::Simultaneous => 0,
                WakePattern::UniformStagger(w) => rng.random_range(0..=w),
                WakePattern::AdversarialChain => i as u64,
            };
            Node {
                id: NodeId(idx as u64 + 1),
                wake,
            }
        })
        .collect();
    Instance::from_nodes(nodes)
}
