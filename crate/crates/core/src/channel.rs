//! Single-hop simulation: a multiple access channel on which a step succeeds
//! iff exactly one node transmits.
//!
//! A success wakes every node that is still dormant; they may first transmit
//! on the following step.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::numeric::{loglog_size, safe_log};
use crate::prf::MasterKey;
use crate::schedule::{
    transmit_probability, DelayBudget, Mode, NodeId, Schedule, ScheduleParams, ScheduleSeed,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepOutcome {
    Silence,
    Collision(u32),
    Success(NodeId),
}

impl fmt::Display for StepOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepOutcome::Silence => f.write_str("silence"),
            StepOutcome::Collision(_) => f.write_str("collision"),
            StepOutcome::Success(v) => write!(f, "success {v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HitResult {
    /// First step with a success, if any before the horizon.
    pub hit_step: Option<u64>,
    pub transcript: Option<Vec<StepOutcome>>,
    pub horizon: u64,
    pub budget: Option<DelayBudget>,
}

impl HitResult {
    /// `hit_step - w(K) <= kappa * budget`.
    pub fn within(&self, min_wake: u64, budget: u64, kappa: f64) -> bool {
        self.hit_step
            .is_some_and(|h| (h - min_wake) as f64 <= kappa * budget as f64)
    }
}

/// Steps simulated by default: the first wake plus twice the budget.
pub fn default_horizon(inst: &Instance, budget: &DelayBudget) -> u64 {
    inst.min_wake() + 2 * budget.value
}

/// Runs the seed's synchronizer (wake-up) or transmission schedule
/// (broadcast) on `inst` for steps `0..horizon`.
pub fn simulate_mac(
    inst: &Instance,
    seed: &ScheduleSeed,
    mode: Mode,
    horizon: u64,
    keep_transcript: bool,
) -> HitResult {
    let budget = inst.budget(&seed.params, mode);
    let mut result = run_mac(inst, &seed.schedule(mode), horizon, keep_transcript);
    result.budget = Some(budget);
    result
}

/// Runs any schedule on the channel. Without a transcript the run stops at
/// the first success.
pub fn run_mac<S: Schedule + ?Sized>(
    inst: &Instance,
    schedule: &S,
    horizon: u64,
    keep_transcript: bool,
) -> HitResult {
    let mut nodes = inst.pairs();
    nodes.sort_unstable_by_key(|&(id, wake)| (wake, id));
    let mut transcript = keep_transcript.then(Vec::new);
    let mut hit_step = None;
    let mut awake = 0;
    let mut j = 0;
    while j < horizon {
        while awake < nodes.len() && nodes[awake].1 <= j {
            awake += 1;
        }
        if awake == 0 && transcript.is_none() {
            j = nodes[0].1;
            continue;
        }
        let mut count = 0u32;
        let mut sender = None;
        for &(id, wake) in &nodes[..awake] {
            if schedule.transmits(id, wake, j) {
                count += 1;
                sender = Some(id);
                if count >= 2 && transcript.is_none() {
                    break;
                }
            }
        }
        let outcome = match (count, sender) {
            (0, _) => StepOutcome::Silence,
            (1, Some(v)) => StepOutcome::Success(v),
            _ => StepOutcome::Collision(count),
        };
        if let Some(t) = transcript.as_mut() {
            t.push(outcome);
        } else if outcome == StepOutcome::Silence {
            j = skip_silence(&nodes, awake, schedule, j + 1).min(horizon);
            continue;
        }
        if let StepOutcome::Success(_) = outcome {
            hit_step.get_or_insert(j);
            for node in &mut nodes[awake..] {
                node.1 = j + 1;
            }
            if transcript.is_none() {
                break;
            }
        }
        j += 1;
    }
    HitResult {
        hit_step,
        transcript,
        horizon,
        budget: None,
    }
}

/// First step `>= from` at which some node may transmit or a new node wakes.
fn skip_silence<S: Schedule + ?Sized>(
    nodes: &[(NodeId, u64)],
    awake: usize,
    schedule: &S,
    from: u64,
) -> u64 {
    let mut next = nodes.get(awake).map_or(u64::MAX, |n| n.1.max(from));
    for &(id, wake) in &nodes[..awake] {
        next = next.min(schedule.silent_until(id, wake, from));
        if next == from {
            break;
        }
    }
    next
}

/// The set of transmitting nodes at each step of `start..start + len`,
/// including wakes caused by successful transmissions.
pub fn transmitter_trace<S: Schedule + ?Sized>(
    inst: &Instance,
    schedule: &S,
    start: u64,
    len: u64,
) -> Vec<Vec<NodeId>> {
    let mut wakes = inst.pairs();
    let mut trace = Vec::with_capacity(len as usize);
    let mut senders = Vec::new();
    for j in 0..start + len {
        senders.clear();
        senders.extend(
            wakes
                .iter()
                .filter(|&&(id, wake)| wake <= j && schedule.transmits(id, wake, j))
                .map(|&(id, _)| id),
        );
        if j >= start {
            trace.push(senders.clone());
        }
        if senders.len() == 1 {
            for node in wakes.iter_mut().filter(|n| n.1 > j) {
                node.1 = j + 1;
            }
        }
    }
    trace
}

/// One `j outcome [v]` line per step.
pub fn write_transcript<W: Write>(mut w: W, transcript: &[StepOutcome]) -> io::Result<()> {
    for (j, outcome) in transcript.iter().enumerate() {
        writeln!(w, "{j} {outcome}")?;
    }
    Ok(())
}

/// Expected number of transmitters per step, and the steps whose load falls
/// inside the band the hitting argument relies on.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoadProfile {
    pub loads: Vec<f64>,
    pub band: (f64, f64),
    pub good_steps: Vec<u64>,
}

/// `[loglog k / (2c log k), loglog k / 3]` for wake-up, `[1/(2d), 1]` for
/// broadcasting.
pub fn load_band(params: &ScheduleParams, mode: Mode, k: u64) -> (f64, f64) {
    match mode {
        Mode::Wakeup => {
            let ll = loglog_size(k);
            (ll / (2.0 * f64::from(params.c) * safe_log(k)), ll / 3.0)
        }
        Mode::Broadcast => (1.0 / (2.0 * f64::from(params.d)), 1.0),
    }
}

/// Analytic load of step `j`: summed transmit probabilities of awake nodes.
pub fn load_at(inst: &Instance, params: &ScheduleParams, mode: Mode, j: u64) -> f64 {
    inst.nodes()
        .iter()
        .map(|n| transmit_probability(params, mode, n.id, n.wake, j))
        .sum()
}

pub fn load_profile(
    inst: &Instance,
    params: &ScheduleParams,
    mode: Mode,
    horizon: u64,
) -> LoadProfile {
    let band = load_band(params, mode, inst.k());
    let loads: Vec<f64> = (0..horizon)
        .map(|j| load_at(inst, params, mode, j))
        .collect();
    let good_steps = loads
        .iter()
        .enumerate()
        .filter(|(_, &f)| f >= band.0 && f <= band.1)
        .map(|(j, _)| j as u64)
        .collect();
    LoadProfile {
        loads,
        band,
        good_steps,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmpiricalLoad {
    pub mean: f64,
    /// Standard error of the mean, from the sample variance.
    pub std_error: f64,
    pub n_keys: u64,
}

/// Mean transmitter count at step `j` over `n_keys` master keys derived from
/// `derivation_key`. Wake times are the instance's own; no reception.
pub fn empirical_load(
    inst: &Instance,
    params: &ScheduleParams,
    mode: Mode,
    j: u64,
    n_keys: u64,
    derivation_key: &MasterKey,
) -> EmpiricalLoad {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..n_keys {
        let seed = ScheduleSeed::new(derivation_key.derive(i), *params);
        let schedule = seed.schedule(mode);
        let count = inst
            .nodes()
            .iter()
            .filter(|n| schedule.transmits(n.id, n.wake, j))
            .count() as f64;
        sum += count;
        sum_sq += count * count;
    }
    let n = n_keys as f64;
    let mean = sum / n;
    let var = if n_keys > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    EmpiricalLoad {
        mean,
        std_error: (var / n).sqrt(),
        n_keys,
    }
}
