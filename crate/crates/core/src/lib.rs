//! Deterministic wake-up and broadcasting for blind multiple access channels
//! and multi-hop radio networks.
//!
//! The two schedules are infinite per-node bit streams derived from a
//! 256-bit master key:
//!
//! - the *synchronizer* (`Mode::Wakeup`) runs on each node's local clock and
//!   hits every instance within `ceil(c^2 r log k / loglog k)` steps of the
//!   first wake;
//! - the *transmission schedule* (`Mode::Broadcast`) also reads the global
//!   clock and hits within `ceil(d^2 r loglog k)` steps.
//!
//! [`channel`] simulates a single-hop channel, [`network`] a directed radio
//! network, and [`verify`] checks the budgets exhaustively on small
//! instances and searches for keys that pass them.

pub mod baselines;
pub mod channel;
pub mod error;
pub mod instance;
pub mod layers;
pub mod network;
pub mod numeric;
pub mod prf;
pub mod schedule;
pub mod verify;

pub use baselines::{prime_bit, AlwaysTransmit, PrimeSchedule, PrimeTable};
pub use channel::{
    empirical_load, load_profile, run_mac, simulate_mac, EmpiricalLoad, HitResult, LoadProfile,
    StepOutcome,
};
pub use error::{Error, Result};
pub use instance::{
    enumerate_instances, random_instance, Instance, InstanceCorpus, Node, Provenance, WakePattern,
};
pub use layers::{layer_decompose, leading_layer_trace, LayerDecomposition, LeadingTrace};
pub use network::{simulate_network, Network, NetworkResult};
pub use numeric::{lambda_weight, safe_log, safe_loglog, z_phase};
pub use prf::{prf_uniform, MasterKey, StreamTag};
pub use schedule::{
    delay_budget, sync_bit, ts_bit, DelayBudget, Mode, NodeId, Schedule, ScheduleParams,
    ScheduleSeed, SeededSchedule,
};
pub use verify::{
    colhit_bound, exactly_one_probability, exhaustive_verify, seed_search, shift_invariance_check,
    SearchOutcome, VerifyReport,
};
