//! Exhaustive budget checks, key search, and exact probability oracles.
//!
//! The existence results behind the two schedules are probabilistic: a
//! randomly drawn schedule works with positive probability. Here a candidate
//! schedule is a master key, so existence becomes a search over keys that
//! pass every instance of a small exhaustive corpus.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{run_mac, transmitter_trace};
use crate::error::{Error, Result};
use crate::instance::{
    enumerate_instances, Instance, InstanceCorpus, Provenance, DEFAULT_MAX_CORPUS,
};
use crate::numeric::z_phase;
use crate::prf::MasterKey;
use crate::schedule::{Mode, Schedule, ScheduleParams, ScheduleSeed};

/// One checked instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub index: usize,
    pub k: u64,
    pub r: u64,
    pub min_wake: u64,
    pub hit_step: Option<u64>,
    pub budget: u64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyAggregate {
    pub checked: usize,
    pub passed: usize,
    /// Largest `(hit_step - min_wake) / budget` over instances that were hit.
    pub max_ratio: Option<f64>,
    pub failures: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub provenance: Provenance,
    pub mode: Mode,
    pub key: Option<String>,
    pub params: ScheduleParams,
    pub kappa: f64,
    pub rows: Vec<VerifyRow>,
    pub aggregate: VerifyAggregate,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.aggregate.passed == self.aggregate.checked
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Steps needed to decide `pass` for an instance: up to twice the budget,
/// or further when `kappa > 2`.
fn verify_horizon(inst: &Instance, budget: u64, kappa: f64) -> u64 {
    let reach = (kappa * budget as f64).floor() as u64;
    inst.min_wake() + (2 * budget).max(reach) + 1
}

fn check_instance<S: Schedule + ?Sized>(
    index: usize,
    inst: &Instance,
    schedule: &S,
    mode: Mode,
    params: &ScheduleParams,
    kappa: f64,
) -> VerifyRow {
    let budget = inst.budget(params, mode).value;
    let res = run_mac(inst, schedule, verify_horizon(inst, budget, kappa), false);
    VerifyRow {
        index,
        k: inst.k(),
        r: inst.r(),
        min_wake: inst.min_wake(),
        hit_step: res.hit_step,
        budget,
        pass: res.within(inst.min_wake(), budget, kappa),
    }
}

/// Runs `schedule` on every corpus instance. Rows follow corpus order.
pub fn verify_corpus<S: Schedule + ?Sized>(
    corpus: &InstanceCorpus,
    schedule: &S,
    mode: Mode,
    params: &ScheduleParams,
    kappa: f64,
) -> VerifyReport {
    let rows: Vec<VerifyRow> = corpus
        .instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| check_instance(i, inst, schedule, mode, params, kappa))
        .collect();
    let failures: Vec<usize> = rows.iter().filter(|r| !r.pass).map(|r| r.index).collect();
    let max_ratio = rows
        .iter()
        .filter_map(|r| {
            r.hit_step
                .map(|h| (h - r.min_wake) as f64 / r.budget as f64)
        })
        .fold(None, |acc: Option<f64>, x| {
            Some(acc.map_or(x, |a| a.max(x)))
        });
    VerifyReport {
        provenance: corpus.provenance.clone(),
        mode,
        key: None,
        params: *params,
        kappa,
        aggregate: VerifyAggregate {
            checked: rows.len(),
            passed: rows.len() - failures.len(),
            max_ratio,
            failures,
        },
        rows,
    }
}

/// Verifies the seed on the exhaustive corpus `(r_max, wake_max)`.
pub fn exhaustive_verify(
    seed: &ScheduleSeed,
    mode: Mode,
    r_max: u64,
    wake_max: u64,
    kappa: f64,
) -> Result<VerifyReport> {
    let corpus = enumerate_instances(r_max, wake_max, mode, &seed.params, DEFAULT_MAX_CORPUS)?;
    Ok(verify_seed(&corpus, seed, mode, kappa))
}

pub fn verify_seed(
    corpus: &InstanceCorpus,
    seed: &ScheduleSeed,
    mode: Mode,
    kappa: f64,
) -> VerifyReport {
    let mut report = verify_corpus(corpus, &seed.schedule(mode), mode, &seed.params, kappa);
    report.key = Some(seed.key.to_hex());
    report
}

/// Candidate key `i` of a search.
pub fn candidate_key(search_seed: &MasterKey, i: u64) -> MasterKey {
    search_seed.derive(i)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub best_index: usize,
    #[serde(serialize_with = "ser_key")]
    pub best_key: MasterKey,
    /// True when the best key passed every instance.
    pub all_pass: bool,
    /// Passes per candidate, in candidate order.
    pub pass_counts: Vec<usize>,
    pub corpus_size: usize,
}

fn ser_key<S: serde::Serializer>(k: &MasterKey, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&k.to_hex())
}

/// Counts passes for each of `candidate_count` keys derived from
/// `search_seed`; the best key is the first to pass everything, else the
/// first with the most passes.
pub fn seed_search(
    corpus: &InstanceCorpus,
    mode: Mode,
    params: &ScheduleParams,
    candidate_count: usize,
    kappa: f64,
    search_seed: &MasterKey,
) -> Result<SearchOutcome> {
    if candidate_count == 0 {
        return Err(Error::InvalidParameter(
            "candidate_count must be at least 1".into(),
        ));
    }
    let pass_counts: Vec<usize> = (0..candidate_count)
        .map(|i| {
            let seed = ScheduleSeed::new(candidate_key(search_seed, i as u64), *params);
            let schedule = seed.schedule(mode);
            corpus
                .instances
                .par_iter()
                .enumerate()
                .filter(|(idx, inst)| {
                    check_instance(*idx, inst, &schedule, mode, params, kappa).pass
                })
                .count()
        })
        .collect();
    let best_index = pass_counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("at least one candidate");
    Ok(SearchOutcome {
        best_index,
        best_key: candidate_key(search_seed, best_index as u64),
        all_pass: pass_counts[best_index] == corpus.len(),
        pass_counts,
        corpus_size: corpus.len(),
    })
}

/// Exact `P[sum x_i = 1]` for independent Bernoulli variables.
pub fn exactly_one_probability(probs: &[f64]) -> Result<f64> {
    let mut none = 1.0;
    let mut one = 0.0;
    for &p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        one = one * (1.0 - p) + none * p;
        none *= 1.0 - p;
    }
    Ok(one)
}

/// `f 4^-f` with `f = sum p_i`; each `p_i` must lie in `[0, 1/2]`.
pub fn colhit_bound(probs: &[f64]) -> Result<f64> {
    if let Some(&p) = probs.iter().find(|&&p| !(0.0..=0.5).contains(&p)) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    let f: f64 = probs.iter().sum();
    Ok(f * 4f64.powf(-f))
}

/// Whether the broadcast transcript over the `x` steps after `w(K)` is
/// unchanged when every wake and the clock move by `m * z(x)`.
pub fn shift_invariance_check(seed: &ScheduleSeed, inst: &Instance, x: u64, m: u64) -> bool {
    shift_check_by(seed, inst, x, m * z_phase(x))
}

/// Same comparison for an arbitrary shift.
pub fn shift_check_by(seed: &ScheduleSeed, inst: &Instance, x: u64, delta: u64) -> bool {
    let schedule = seed.schedule(Mode::Broadcast);
    let start = inst.min_wake();
    let before = transmitter_trace(inst, &schedule, start, x);
    let after = transmitter_trace(&inst.shifted(delta), &schedule, start + delta, x);
    before == after
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::NodeId;

    struct Silent;

    impl Schedule for Silent {
        fn transmits(&self, _v: NodeId, _wake: u64, _j: u64) -> bool {
            false
        }
    }

    /// Brute force over all outcome vectors.
    fn exactly_one_by_enumeration(probs: &[f64]) -> f64 {
        let n = probs.len();
        (0u32..1 << n)
            .filter(|mask| mask.count_ones() == 1)
            .map(|mask| {
                probs
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| if mask >> i & 1 == 1 { p } else { 1.0 - p })
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn colhit_examples() {
        assert_eq!(exactly_one_probability(&[0.5]).unwrap(), 0.5);
        assert!((colhit_bound(&[0.5]).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(exactly_one_probability(&[0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(colhit_bound(&[0.5, 0.5]).unwrap(), 0.25);
        assert_eq!(exactly_one_probability(&[]).unwrap(), 0.0);
        assert_eq!(colhit_bound(&[]).unwrap(), 0.0);
        assert!(colhit_bound(&[0.6]).is_err());
        assert!(exactly_one_probability(&[0.6]).is_ok());
        assert!(exactly_one_probability(&[1.5]).is_err());
    }

    #[test]
    fn exact_probability_matches_enumeration() {
        let cases: [&[f64]; 4] = [
            &[0.1, 0.2, 0.3],
            &[0.9, 0.05],
            &[0.5; 6],
            &[0.0, 1.0, 0.25, 0.75],
        ];
        for probs in cases {
            let a = exactly_one_probability(probs).unwrap();
            let b = exactly_one_by_enumeration(probs);
            assert!((a - b).abs() < 1e-14, "{probs:?}: {a} vs {b}");
        }
    }

    #[test]
    fn singletons_pass_with_any_seed() {
        for i in 0..8u64 {
            let seed = ScheduleSeed::new(MasterKey::default().derive(i), ScheduleParams::default());
            let report = exhaustive_verify(&seed, Mode::Wakeup, 1, 0, 1.0).unwrap();
            assert_eq!(report.aggregate.checked, 2);
            assert!(report.all_pass());
        }
    }

    #[test]
    fn silent_schedule_fails_everything() {
        let params = ScheduleParams::default();
        let corpus = enumerate_instances(2, 1, Mode::Wakeup, &params, DEFAULT_MAX_CORPUS).unwrap();
        let report = verify_corpus(&corpus, &Silent, Mode::Wakeup, &params, 1.0);
        assert_eq!(report.aggregate.passed, 0);
        assert!(report.rows.iter().all(|r| r.hit_step.is_none()));
        assert_eq!(report.aggregate.max_ratio, None);
    }

    #[test]
    fn report_is_reproducible() {
        let seed = ScheduleSeed::default();
        let a = exhaustive_verify(&seed, Mode::Wakeup, 3, 2, 1.0).unwrap();
        let b = exhaustive_verify(&seed, Mode::Wakeup, 3, 2, 1.0).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn search_with_one_candidate_matches_verify() {
        let params = ScheduleParams::default();
        let corpus = enumerate_instances(3, 2, Mode::Wakeup, &params, DEFAULT_MAX_CORPUS).unwrap();
        let search_seed = MasterKey::default();
        let out = seed_search(&corpus, Mode::Wakeup, &params, 1, 0.05, &search_seed).unwrap();
        let seed = ScheduleSeed::new(candidate_key(&search_seed, 0), params);
        let report = verify_seed(&corpus, &seed, Mode::Wakeup, 0.05);
        assert_eq!(out.pass_counts, vec![report.aggregate.passed]);
        assert_eq!(out.best_key, seed.key);
        assert!(seed_search(&corpus, Mode::Wakeup, &params, 0, 1.0, &search_seed).is_err());
    }

    #[test]
    fn singleton_corpus_first_candidate_passes() {
        let params = ScheduleParams::default();
        let corpus = enumerate_instances(1, 0, Mode::Wakeup, &params, DEFAULT_MAX_CORPUS).unwrap();
        let out = seed_search(
            &corpus,
            Mode::Wakeup,
            &params,
            4,
            1.0,
            &MasterKey::default(),
        )
        .unwrap();
        assert_eq!(out.best_index, 0);
        assert!(out.all_pass);
    }

    #[test]
    fn pass_counts_shrink_with_kappa() {
        let params = ScheduleParams::default();
        let corpus = enumerate_instances(3, 3, Mode::Wakeup, &params, DEFAULT_MAX_CORPUS).unwrap();
        let key = MasterKey::default();
        let mut prev: Option<Vec<usize>> = None;
        for kappa in [1.0, 0.2, 0.05, 0.01, 0.001] {
            let out = seed_search(&corpus, Mode::Wakeup, &params, 4, kappa, &key).unwrap();
            if let Some(p) = &prev {
                assert!(out
                    .pass_counts
                    .iter()
                    .zip(p)
                    .all(|(now, before)| now <= before));
            }
            prev = Some(out.pass_counts);
        }
    }

    #[test]
    fn shift_by_phase_multiples() {
        let seed = ScheduleSeed::default();
        let inst = Instance::new([(3, 0), (5, 2), (12, 7)]).unwrap();
        for x in [1, 4, 5, 16, 17, 300] {
            for m in 1..=3 {
                assert!(shift_invariance_check(&seed, &inst, x, m), "x={x} m={m}");
            }
        }
    }
}
