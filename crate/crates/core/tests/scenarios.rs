use blindcast_core::network::simulate_network_seeded;
use blindcast_core::{
    empirical_load, enumerate_instances, exhaustive_verify, run_mac, simulate_mac,
    simulate_network, sync_bit, ts_bit, Instance, MasterKey, Mode, Network, NodeId, PrimeSchedule,
    PrimeTable, Schedule, ScheduleParams, ScheduleSeed, StepOutcome,
};

fn id(v: u64) -> NodeId {
    NodeId::new(v).unwrap()
}

fn first_one(seed: &ScheduleSeed, mode: Mode, v: NodeId, wake: u64, from: u64) -> u64 {
    let s = seed.schedule(mode);
    (from..).find(|&j| s.transmits(v, wake, j)).unwrap()
}

#[test]
fn three_node_path_by_hand() {
    // a -> b -> c, closed by c -> a
    let (a, b, c) = (id(5), id(9), id(2));
    let net = Network::new(vec![a, b, c], vec![(a, b), (b, c), (c, a)]).unwrap();
    for i in 0..20 {
        let seed = ScheduleSeed::new(MasterKey::default().derive(i), ScheduleParams::default());
        for mode in Mode::ALL {
            let res = simulate_network_seeded(&net, &[(a, 0)], &seed, mode, 1 << 20).unwrap();
            let wb = first_one(&seed, mode, a, 0, 0) + 1;
            let wc = first_one(&seed, mode, b, wb, wb) + 1;
            assert_eq!(res.wake_of(b), Some(wb));
            assert_eq!(res.wake_of(c), Some(wc));
            assert_eq!(res.completion_step, Some(wc));
        }
    }
}

#[test]
fn clique_matches_the_channel() {
    for i in 0..40u64 {
        let mode = Mode::ALL[(i % 2) as usize];
        let seed = ScheduleSeed::new(
            MasterKey::default().derive(1000 + i),
            ScheduleParams::default(),
        );
        let inst = Instance::new([(3, 0), (8, i % 5), (21, 2 * (i % 3)), (40, 7)]).unwrap();
        let horizon = 2 * inst.budget(&seed.params, mode).value;
        let hit = simulate_mac(&inst, &seed, mode, horizon, false)
            .hit_step
            .unwrap();
        let mut ids: Vec<NodeId> = inst.nodes().iter().map(|n| n.id).collect();
        ids.push(id(99));
        let net = Network::complete(ids).unwrap();
        let res = simulate_network(&net, &inst.pairs(), &seed.schedule(mode), horizon + 1).unwrap();
        assert_eq!(res.completion_step, Some(hit + 1));
    }
}

#[test]
fn transcript_and_hit_agree() {
    let seed = ScheduleSeed::default();
    let inst = Instance::new([(1, 0), (2, 0), (6, 4)]).unwrap();
    for mode in Mode::ALL {
        let full = simulate_mac(&inst, &seed, mode, 300, true);
        let fast = simulate_mac(&inst, &seed, mode, 300, false);
        assert_eq!(full.hit_step, fast.hit_step);
        let t = full.transcript.unwrap();
        assert_eq!(t.len(), 300);
        let first = t.iter().position(|o| matches!(o, StepOutcome::Success(_)));
        assert_eq!(first.map(|j| j as u64), fast.hit_step);
    }
}

#[test]
fn primes_one_and_two() {
    let table = PrimeTable::new(1000);
    let inst = Instance::new([(1, 0), (2, 0)]).unwrap();
    let s = PrimeSchedule::new(&table, id(2)).unwrap();
    let res = run_mac(&inst, &s, 100, true);
    assert_eq!(res.hit_step, Some(2));
    assert_eq!(res.transcript.unwrap()[2], StepOutcome::Success(id(1)));
}

#[test]
fn bits_follow_their_probabilities() {
    let params = ScheduleParams::default();
    let keys: Vec<ScheduleSeed> = (0..10_000)
        .map(|i| ScheduleSeed::new(MasterKey::default().derive(i), params))
        .collect();
    let cases = [
        (1u64, 0u64, 0u64),
        (3, 0, 18),
        (100, 5, 60),
        (7, 2, 1000),
        (1 << 20, 0, 3),
    ];
    for &(v, wake, j) in &cases {
        for mode in Mode::ALL {
            let p = blindcast_core::schedule::transmit_probability(&params, mode, id(v), wake, j);
            let hits = keys
                .iter()
                .filter(|s| match mode {
                    Mode::Wakeup => sync_bit(s, id(v), j - wake),
                    Mode::Broadcast => ts_bit(s, id(v), wake, j),
                })
                .count() as f64;
            let se = (p * (1.0 - p) / 1e4).sqrt();
            assert!(
                (hits / 1e4 - p).abs() <= 5.0 * se + 1e-9,
                "v={v} j={j} {mode}: {} vs {p}",
                hits / 1e4
            );
        }
    }
}

#[test]
fn empirical_load_of_a_singleton() {
    let inst = Instance::new([(1, 0)]).unwrap();
    let e = empirical_load(
        &inst,
        &ScheduleParams::default(),
        Mode::Wakeup,
        0,
        10_000,
        &MasterKey::default(),
    );
    assert!((e.mean - 0.5).abs() <= 5.0 * e.std_error);
}

#[test]
fn smallest_exhaustive_run() {
    let report = exhaustive_verify(&ScheduleSeed::default(), Mode::Wakeup, 1, 0, 1.0).unwrap();
    assert_eq!(report.aggregate.checked, 2);
    assert!(report.all_pass());
}

#[test]
fn corpora_are_deterministic() {
    let p = ScheduleParams::default();
    let a = enumerate_instances(4, 3, Mode::Wakeup, &p, 1 << 20).unwrap();
    let b = enumerate_instances(4, 3, Mode::Wakeup, &p, 1 << 20).unwrap();
    assert_eq!(a, b);
    assert!(a.instances.iter().all(|i| i.min_wake() == 0 && i.r() <= 4));
}
