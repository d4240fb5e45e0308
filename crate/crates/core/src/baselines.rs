//! Reference protocols: periodic transmission with the `v`-th prime as the
//! period, and a node that transmits on every step.

use std::sync::{OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::schedule::{NodeId, Schedule};

pub const DEFAULT_PRIME_CAP: u64 = 10_000_000;

/// Lazily extended table of the first primes.
pub struct PrimeTable {
    primes: RwLock<Vec<u64>>,
    cap: u64,
}

impl PrimeTable {
    pub fn new(cap: u64) -> Self {
        Self {
            primes: RwLock::new(Vec::new()),
            cap,
        }
    }

    /// Process-wide table with the default cap.
    pub fn global() -> &'static PrimeTable {
        static TABLE: OnceLock<PrimeTable> = OnceLock::new();
        TABLE.get_or_init(|| PrimeTable::new(DEFAULT_PRIME_CAP))
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// The `i`-th smallest prime, 1-based.
    pub fn nth(&self, i: u64) -> Result<u64> {
        if i == 0 {
            return Err(Error::InvalidParameter("prime index starts at 1".into()));
        }
        if i > self.cap {
            return Err(Error::LimitExceeded {
                what: "prime index",
                requested: i.into(),
                limit: self.cap.into(),
            });
        }
        let idx = (i - 1) as usize;
        if let Some(&p) = self.primes.read().expect("prime table lock").get(idx) {
            return Ok(p);
        }
        let mut primes = self.primes.write().expect("prime table lock");
        if primes.len() <= idx {
            *primes = sieve(upper_bound_nth_prime(i));
        }
        Ok(primes[idx])
    }

    /// Number of cached primes.
    pub fn len(&self) -> usize {
        self.primes.read().expect("prime table lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `n (ln n + ln ln n)` is an upper bound on the n-th prime for n >= 6.
fn upper_bound_nth_prime(n: u64) -> u64 {
    if n < 6 {
        return 13;
    }
    let nf = n as f64;
    (nf * (nf.ln() + nf.ln().ln())).ceil() as u64 + 1
}

/// All primes `<= limit`, odd-only sieve of Eratosthenes.
fn sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    // index i stands for 2i + 1
    let half = (limit as usize - 1) / 2 + 1;
    let mut composite = vec![false; half];
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) <= limit as usize {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut m = p * p / 2;
            while m < half {
                composite[m] = true;
                m += p;
            }
        }
        i += 1;
    }
    let mut primes = vec![2];
    primes.extend(
        (1..half)
            .filter(|&i| !composite[i])
            .map(|i| 2 * i as u64 + 1),
    );
    primes
}

/// `v`'s periodic bit: 1 iff `rel > 0` and `p_v` divides `rel`.
pub fn prime_bit(table: &PrimeTable, v: NodeId, rel: u64) -> Result<bool> {
    let p = table.nth(v.get())?;
    Ok(rel > 0 && rel.is_multiple_of(p))
}

/// Periodic baseline, running on each node's local clock.
pub struct PrimeSchedule<'a> {
    table: &'a PrimeTable,
}

impl<'a> PrimeSchedule<'a> {
    /// Fills the table up to `max_id` so that every lookup succeeds.
    pub fn new(table: &'a PrimeTable, max_id: NodeId) -> Result<Self> {
        table.nth(max_id.get())?;
        Ok(Self { table })
    }
}

impl Schedule for PrimeSchedule<'_> {
    fn transmits(&self, v: NodeId, wake: u64, global_j: u64) -> bool {
        global_j >= wake
            && prime_bit(self.table, v, global_j - wake).expect("table filled to the max id")
    }

    fn silent_until(&self, v: NodeId, wake: u64, from: u64) -> u64 {
        let p = self.table.nth(v.get()).expect("table filled to the max id");
        let rel = from.saturating_sub(wake).max(1);
        wake + rel.div_ceil(p) * p
    }
}

/// Transmits on every step after waking.
#[derive(Clone, Copy, Debug, Default)]
pub struct AlwaysTransmit;

impl Schedule for AlwaysTransmit {
    fn transmits(&self, _v: NodeId, wake: u64, global_j: u64) -> bool {
        global_j >= wake
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skipping_matches_stepping() {
        use crate::channel::run_mac;
        use crate::instance::Instance;
        let t = PrimeTable::new(DEFAULT_PRIME_CAP);
        for pairs in [
            vec![(3, 0), (4, 2)],
            vec![(10, 5), (2, 100), (7, 7)],
            vec![(1, 9)],
        ] {
            let inst = Instance::new(pairs).unwrap();
            let s = PrimeSchedule::new(&t, inst.max_id()).unwrap();
            let fast = run_mac(&inst, &s, 10_000, false);
            let slow = run_mac(&inst, &s, 10_000, true);
            assert_eq!(fast.hit_step, slow.hit_step);
        }
        let s = PrimeSchedule::new(&t, NodeId(4)).unwrap();
        assert_eq!(s.silent_until(NodeId(4), 10, 10), 17);
        assert_eq!(s.silent_until(NodeId(4), 10, 17), 17);
        assert_eq!(s.silent_until(NodeId(4), 10, 18), 24);
    }

    #[test]
    fn nth_prime_examples() {
        let t = PrimeTable::new(DEFAULT_PRIME_CAP);
        assert_eq!(t.nth(1).unwrap(), 2);
        assert_eq!(t.nth(5).unwrap(), 11);
        assert_eq!(t.nth(100).unwrap(), 541);
        assert_eq!(t.nth(1000).unwrap(), 7919);
        assert!(t.nth(0).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let t = PrimeTable::new(10);
        assert_eq!(t.nth(10).unwrap(), 29);
        assert!(t.nth(11).unwrap_err().is_limit());
    }

    #[test]
    fn table_grows_on_demand() {
        let t = PrimeTable::new(DEFAULT_PRIME_CAP);
        assert!(t.is_empty());
        t.nth(3).unwrap();
        let small = t.len();
        t.nth(5000).unwrap();
        assert!(t.len() > small);
        assert_eq!(t.nth(2).unwrap(), 3);
    }

    #[test]
    fn prime_bits() {
        let t = PrimeTable::global();
        let one = NodeId::new(1).unwrap();
        assert!(prime_bit(t, one, 2).unwrap());
        assert!(!prime_bit(t, one, 1).unwrap());
        assert!(!prime_bit(t, one, 0).unwrap());
        assert!(prime_bit(t, one, 4).unwrap());
    }

    #[test]
    fn sieve_small() {
        assert_eq!(sieve(1), Vec::<u64>::new());
        assert_eq!(sieve(2), vec![2]);
        assert_eq!(sieve(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }
}
