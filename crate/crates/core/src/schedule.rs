//! The synchronizer and the transmission schedule, evaluated bit by bit.
//!
//! A synchronizer bit `S(v)_j` depends only on the node id and the number of
//! steps since the node woke. A transmission-schedule bit `T(v, w)_j` also
//! depends on the global step `j`, through a phase that decays the
//! transmission probability geometrically within windows of length `z`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{loglog_size, safe_log, safe_loglog, weight, z_phase};
use crate::prf::{prf_uniform, unit_interval, MasterKey, StreamTag};

/// A node id. Valid ids are `>= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct NodeId(pub(crate) u64);

impl NodeId {
    pub fn new(v: u64) -> Result<Self> {
        if v == 0 {
            Err(Error::ZeroId)
        } else {
            Ok(Self(v))
        }
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// `log2(id + 1)`.
    #[inline]
    pub fn weight(self) -> f64 {
        weight(self.0)
    }
}

impl TryFrom<u64> for NodeId {
    type Error = Error;

    fn try_from(v: u64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<NodeId> for u64 {
    fn from(id: NodeId) -> u64 {
        id.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which task is being solved: wake-up (local clocks only) or broadcasting
/// (global clock available).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Wakeup,
    Broadcast,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Wakeup, Mode::Broadcast];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Wakeup => "wakeup",
            Mode::Broadcast => "broadcast",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wakeup" | "wake-up" => Ok(Mode::Wakeup),
            "broadcast" => Ok(Mode::Broadcast),
            other => Err(Error::InvalidParameter(format!("unknown mode `{other}`"))),
        }
    }
}

/// Constants of the two constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScheduleParams {
    /// Synchronizer constant.
    pub c: u32,
    /// Transmission-schedule constant.
    pub d: u32,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self { c: 9, d: 34 }
    }
}

impl ScheduleParams {
    pub fn new(c: u32, d: u32) -> Result<Self> {
        if c == 0 || d == 0 {
            return Err(Error::InvalidParameter("c and d must be positive".into()));
        }
        Ok(Self { c, d })
    }
}

/// Master key plus constants; every schedule bit is a function of this.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct ScheduleSeed {
    pub key: MasterKey,
    pub params: ScheduleParams,
}

impl ScheduleSeed {
    pub fn new(key: MasterKey, params: ScheduleParams) -> Self {
        Self { key, params }
    }

    pub fn with_key(&self, key: MasterKey) -> Self {
        Self {
            key,
            params: self.params,
        }
    }

    /// The schedule this seed defines for `mode`.
    pub fn schedule(&self, mode: Mode) -> SeededSchedule {
        SeededSchedule { seed: *self, mode }
    }
}

/// Number of steps after the first wake within which a hit is guaranteed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayBudget {
    pub mode: Mode,
    pub r: u64,
    pub k: u64,
    pub value: u64,
}

/// `ceil(c^2 r log k / loglog k)` for wake-up, `ceil(d^2 r loglog k)` for
/// broadcasting. `r` and `k` are clamped to at least 1.
pub fn delay_budget(params: &ScheduleParams, mode: Mode, r: u64, k: u64) -> DelayBudget {
    let r = r.max(1);
    let k = k.max(1);
    let value = match mode {
        Mode::Wakeup => {
            let c = f64::from(params.c);
            c * c * r as f64 * safe_log(k) / loglog_size(k)
        }
        Mode::Broadcast => {
            let d = f64::from(params.d);
            d * d * r as f64 * loglog_size(k)
        }
    };
    DelayBudget {
        mode,
        r,
        k,
        value: value.ceil() as u64,
    }
}

/// Probability that `S(v)_rel = 1`: `c w / (rel + 2 c w)` with `w = log2(v+1)`.
#[inline]
pub fn sync_probability(params: &ScheduleParams, v: NodeId, rel: u64) -> f64 {
    let cw = f64::from(params.c) * v.weight();
    cw / (rel as f64 + 2.0 * cw)
}

/// Probability of the base transmission bit `s_{v,x}`.
#[inline]
pub fn ts_send_probability(params: &ScheduleParams, v: NodeId, x: u64) -> f64 {
    let dw = f64::from(params.d) * v.weight() * safe_loglog(x);
    dw / (x as f64 + 2.0 * dw)
}

/// Synchronizer bit for node `v`, `rel` steps after it woke.
#[inline]
pub fn sync_bit(seed: &ScheduleSeed, v: NodeId, rel: u64) -> bool {
    let u = prf_uniform(&seed.key, StreamTag::Sync, v.get(), rel);
    unit_interval(u) < sync_probability(&seed.params, v, rel)
}

/// `p <= 2^-m` for the phase value `p = u / 2^64`, compared exactly.
#[inline]
pub fn phase_passes(u: u64, m: u32) -> bool {
    if m >= 64 {
        return u == 0;
    }
    u128::from(u) <= 1u128 << (64 - m)
}

/// Transmission-schedule bit of node `v` that woke at global step `wake`,
/// evaluated at global step `global_j`.
#[inline]
pub fn ts_bit(seed: &ScheduleSeed, v: NodeId, wake: u64, global_j: u64) -> bool {
    if global_j < wake {
        return false;
    }
    let x = global_j - wake;
    let s = prf_uniform(&seed.key, StreamTag::TsSend, v.get(), x);
    if unit_interval(s) >= ts_send_probability(&seed.params, v, x) {
        return false;
    }
    let m = (global_j % z_phase(x)) as u32;
    let p = prf_uniform(&seed.key, StreamTag::TsPhase, v.get(), x);
    phase_passes(p, m)
}

/// Any deterministic transmit rule of `(node id, wake step, global step)`.
///
/// Implementations must return `false` for `global_j < wake`.
pub trait Schedule: Sync {
    fn transmits(&self, v: NodeId, wake: u64, global_j: u64) -> bool;

    /// A step `>= from` before which `v` is certainly silent. The default,
    /// `from`, claims nothing.
    fn silent_until(&self, _v: NodeId, _wake: u64, from: u64) -> u64 {
        from
    }
}

impl<S: Schedule + ?Sized> Schedule for &S {
    fn transmits(&self, v: NodeId, wake: u64, global_j: u64) -> bool {
        (**self).transmits(v, wake, global_j)
    }

    fn silent_until(&self, v: NodeId, wake: u64, from: u64) -> u64 {
        (**self).silent_until(v, wake, from)
    }
}

/// The synchronizer (wake-up) or transmission schedule (broadcast) of a seed.
#[derive(Clone, Copy, Debug)]
pub struct SeededSchedule {
    pub seed: ScheduleSeed,
    pub mode: Mode,
}

impl Schedule for SeededSchedule {
    #[inline]
    fn transmits(&self, v: NodeId, wake: u64, global_j: u64) -> bool {
        match self.mode {
            Mode::Wakeup => global_j >= wake && sync_bit(&self.seed, v, global_j - wake),
            Mode::Broadcast => ts_bit(&self.seed, v, wake, global_j),
        }
    }
}

/// Analytic probability that `v` (woken at `wake`) transmits at `global_j`.
pub fn transmit_probability(
    params: &ScheduleParams,
    mode: Mode,
    v: NodeId,
    wake: u64,
    global_j: u64,
) -> f64 {
    if global_j < wake {
        return 0.0;
    }
    let x = global_j - wake;
    match mode {
        Mode::Wakeup => sync_probability(params, v, x),
        Mode::Broadcast => {
            let m = (global_j % z_phase(x)) as i32;
            ts_send_probability(params, v, x) * 2f64.powi(-m)
        }
    }
}
