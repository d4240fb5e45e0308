//! Grid sweeps: one simulated trial per row, written as CSV.
//!
//! Each trial's instance seed (and, unless the key is fixed, its master key)
//! is derived from the sweep master key and the trial index, so the rows do
//! not depend on how many threads ran them.

use std::io::Write;
use std::time::Instant;

use anyhow::{Context, Result};
use blindcast_core::{
    channel::run_mac, delay_budget, prf_uniform, random_instance, MasterKey, Mode, PrimeSchedule,
    PrimeTable, Schedule, ScheduleParams, ScheduleSeed, StreamTag, WakePattern,
};
use rayon::prelude::*;
use serde::Serialize;

pub const CSV_HEADER: &str = "mode,key,k,L,r,inst_seed,hit_step,budget,within_budget,wall_ms";

/// Which schedule the nodes run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    Seeded(Mode),
    /// Prime-period baseline, judged against the wake-up budget.
    Prime,
}

impl Protocol {
    fn label(self) -> &'static str {
        match self {
            Protocol::Seeded(m) => m.as_str(),
            Protocol::Prime => "prime",
        }
    }

    fn budget_mode(self) -> Mode {
        match self {
            Protocol::Seeded(m) => m,
            Protocol::Prime => Mode::Wakeup,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub protocol: Protocol,
    pub ks: Vec<u64>,
    pub ls: Vec<u64>,
    pub patterns: Vec<WakePattern>,
    pub trials: u64,
    pub master: MasterKey,
    pub params: ScheduleParams,
    pub kappa: f64,
    /// Run every trial with `master` itself instead of a per-trial key.
    pub fixed_key: bool,
    pub horizon_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub mode: String,
    pub key: String,
    pub k: u64,
    #[serde(rename = "L")]
    pub l: u64,
    pub r: u64,
    pub inst_seed: u64,
    pub hit_step: i64,
    pub budget: u64,
    pub within_budget: bool,
    pub wall_ms: String,
}

struct Trial {
    index: u64,
    k: u64,
    l: u64,
    pattern: WakePattern,
}

impl SweepSpec {
    fn trials(&self) -> Vec<Trial> {
        let mut out = Vec::new();
        for &k in &self.ks {
            for &l in &self.ls {
                for &pattern in &self.patterns {
                    for _ in 0..self.trials {
                        out.push(Trial {
                            index: out.len() as u64,
                            k,
                            l,
                            pattern,
                        });
                    }
                }
            }
        }
        out
    }

    fn run_trial(&self, t: &Trial) -> Result<SweepRecord> {
        let started = Instant::now();
        let inst_seed = prf_uniform(&self.master, StreamTag::Instance, t.index, 0);
        let key = if self.fixed_key {
            self.master
        } else {
            self.master.derive(t.index)
        };
        let inst = random_instance(t.k, t.l, t.pattern, inst_seed)?;
        let budget = delay_budget(
            &self.params,
            self.protocol.budget_mode(),
            inst.r(),
            inst.k(),
        )
        .value;
        let horizon = inst.min_wake() + (self.horizon_factor * budget as f64).ceil() as u64;
        let res = match self.protocol {
            Protocol::Seeded(mode) => run_mac(
                &inst,
                &ScheduleSeed::new(key, self.params).schedule(mode),
                horizon,
                false,
            ),
            Protocol::Prime => {
                let schedule = PrimeSchedule::new(PrimeTable::global(), inst.max_id())?;
                run_mac(&inst, &schedule as &dyn Schedule, horizon, false)
            }
        };
        let within = res.within(inst.min_wake(), budget, self.kappa);
        Ok(SweepRecord {
            mode: self.protocol.label().to_string(),
            key: key.fingerprint(),
            k: inst.k(),
            l: t.l,
            r: inst.r(),
            inst_seed,
            hit_step: res.hit_step.map_or(-1, |h| h as i64),
            budget,
            within_budget: within,
            wall_ms: format!("{:.3}", started.elapsed().as_secs_f64() * 1e3),
        })
    }
}

/// Runs every trial on a pool of `jobs` threads; rows come back in trial
/// order.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building thread pool")?;
    let trials = spec.trials();
    pool.install(|| trials.par_iter().map(|t| spec.run_trial(t)).collect())
}

pub fn write_csv<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SweepSpec {
        SweepSpec {
            protocol: Protocol::Seeded(Mode::Wakeup),
            ks: vec![2, 4],
            ls: vec![64],
            patterns: vec![WakePattern::Simultaneous, WakePattern::UniformStagger(5)],
            trials: 3,
            master: MasterKey::default(),
            params: ScheduleParams::default(),
            kappa: 1.0,
            fixed_key: false,
            horizon_factor: 2.0,
        }
    }

    #[test]
    fn header_and_row_count() {
        let recs = run_sweep(&spec(), 1).unwrap();
        assert_eq!(recs.len(), 12);
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), 13);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn within_budget_matches_columns() {
        for rec in run_sweep(&spec(), 2).unwrap() {
            assert_eq!(
                rec.within_budget,
                rec.hit_step >= 0 && rec.hit_step as u64 <= rec.budget + 5
            );
        }
    }

    #[test]
    fn per_trial_keys_unless_fixed() {
        let recs = run_sweep(&spec(), 1).unwrap();
        assert_ne!(recs[0].key, recs[1].key);
        let fixed = SweepSpec {
            fixed_key: true,
            ..spec()
        };
        let recs = run_sweep(&fixed, 1).unwrap();
        assert!(recs
            .iter()
            .all(|r| r.key == MasterKey::default().fingerprint()));
    }

    #[test]
    fn prime_rows() {
        let prime = SweepSpec {
            protocol: Protocol::Prime,
            ..spec()
        };
        let recs = run_sweep(&prime, 1).unwrap();
        assert!(recs.iter().all(|r| r.mode == "prime"));
    }
}
