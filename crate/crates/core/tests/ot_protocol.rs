use std::collections::HashSet;
use std::thread;

use qot::channel::ChannelModel;
use qot::commit::ere::sample_subset;
use qot::ot::*;
use qot::stats::Frequency;
use qot::{BitString, Seed};

fn noiseless() -> ChannelModel {
    ChannelModel::noiseless(Seed::from_u64(0))
}

fn random_pair(seed: Seed, len: usize) -> [BitString; 2] {
    let mut rng = seed.rng();
    [BitString::random(len, &mut rng), BitString::random(len, &mut rng)]
}

#[test]
fn all_bit_pattern_combinations_deliver() {
    let params = OtParams::toy(128, 0.0);
    let patterns = [BitString::zeros(256), (0..256).map(|_| true).collect::<BitString>()];
    let mut case = 0;
    for b in [false, true] {
        for m0 in &patterns {
            for m1 in &patterns {
                let r = run_ot(
                    vec![[m0.clone(), m1.clone()]],
                    Choice::Single(b),
                    &params,
                    &noiseless(),
                    RunSeeds::from_master(Seed::from_u64(case)),
                    Carrier::Loopback,
                )
                .unwrap();
                assert!(r.delivered(), "case {case}");
                assert_eq!(r.bob.unwrap().single().message, if b { m1.clone() } else { m0.clone() });
                case += 1;
            }
        }
    }
    assert_eq!(case, 8);
}

#[test]
fn ten_thousand_random_pairs_through_multi_ot() {
    let params = OtParams::toy(16_384, 0.0);
    let (v, mut delivered, mut session) = (8, 0usize, 0u64);
    while delivered < 10_000 {
        let master = Seed::from_u64(1_000 + session);
        let mut rng = master.rng_for("inputs");
        let blocks = params.lambda_ot / v;
        let choices: Vec<bool> = (0..blocks).map(|_| rand::Rng::gen(&mut rng)).collect();
        let messages: Vec<[BitString; 2]> = (0..blocks).map(|i| random_pair(master.derive_indexed("m", i as u64), 256)).collect();
        let r = run_ot(messages, Choice::Multi { v, choices: choices.clone() }, &params, &noiseless(), RunSeeds::from_master(master), Carrier::Loopback).unwrap();
        assert!(r.delivered());
        let (alice, bob) = (r.alice.unwrap(), r.bob.unwrap());
        for (t, d) in bob.deliveries.iter().enumerate() {
            assert_eq!(d.b, choices[alice.assignment[t]]);
            assert!(d.decoded);
        }
        delivered += bob.deliveries.len();
        session += 1;
    }
    assert!(session <= 6, "{session} sessions");
}

#[test]
fn alice_view_ignores_choice_bit() {
    let params = OtParams::toy(256, 0.0);
    let m = random_pair(Seed::from_u64(3), 256);
    let run = |b| run_ot(vec![m.clone()], Choice::Single(b), &params, &noiseless(), RunSeeds::from_master(Seed::from_u64(77)), Carrier::Loopback).unwrap();
    let (r0, r1) = (run(false), run(true));
    let (a0, a1) = (r0.alice.unwrap(), r1.alice.unwrap());
    assert_eq!(a0.digest_before_partition, a1.digest_before_partition);
    assert_eq!(a0.partitions[0], a1.partitions[0].swapped());
    assert_eq!(r0.bob.unwrap().single().message, m[0]);
    assert_eq!(r1.bob.unwrap().single().message, m[1]);
}

#[test]
fn matched_set_size_concentrates() {
    let lot = 1024;
    let params = OtParams::toy(lot, 0.0);
    let bound = (lot as f64 * (2.0f64 / 1e-6).ln() / 2.0).sqrt();
    for s in 0..8 {
        let r = run_ot(vec![random_pair(Seed::from_u64(s), 256)], Choice::Single(s % 2 == 0), &params, &noiseless(), RunSeeds::from_master(Seed::from_u64(500 + s)), Carrier::Loopback).unwrap();
        let a = r.alice.unwrap();
        let b = s % 2 == 0;
        let matched = a.partitions[0].get(b).len() as f64;
        assert!((matched - lot as f64 / 2.0).abs() <= bound, "{matched}");
        assert_eq!(a.partitions[0].i0.len() + a.partitions[0].i1.len(), lot);
    }
}

#[test]
fn failed_correction_yields_fresh_junk() {
    let params = OtParams::toy(512, 0.0);
    let model = ChannelModel::new(0.05, 0.0, 0.0, Seed::from_u64(4)).unwrap();
    let zero = BitString::zeros(256);
    let mut ones = 0u64;
    let mut seen = HashSet::new();
    let runs = 12;
    for s in 0..runs {
        let r = run_ot(vec![[zero.clone(), zero.clone()]], Choice::Single(false), &params, &ChannelModel { rng_seed: Seed::from_u64(40 + s), ..model }, RunSeeds::from_master(Seed::from_u64(900 + s)), Carrier::Loopback).unwrap();
        let d = r.bob.unwrap().single().clone();
        assert!(!d.decoded);
        ones += d.message.count_ones() as u64;
        assert!(seen.insert(d.message.to_bytes()));
    }
    let f = Frequency::new(ones, runs * 256);
    assert!(f.within(0.5, 3.0), "{f:?}");
}

#[test]
fn challenge_sets_are_uniform() {
    let mut rng = Seed::from_u64(8).rng();
    let mut counts = [0u64; 20];
    let draws = 100_000;
    for _ in 0..draws {
        let t = sample_subset(20, 10, &mut rng);
        assert_eq!(t.len(), 10);
        t.iter().for_each(|&i| counts[i] += 1);
    }
    // 3.5σ per index keeps the family-wise rate over 20 indices near 1%.
    for c in counts {
        assert!(Frequency::new(c, draws).within(0.5, 3.5), "{c}");
    }
    assert_eq!(sample_subset(7, 7, &mut rng), (0..7).collect::<Vec<_>>());
    assert_eq!(sample_subset(50, 5, &mut Seed::from_u64(1).rng()), sample_subset(50, 5, &mut Seed::from_u64(1).rng()));
}

#[test]
fn socket_and_loopback_transcripts_agree() {
    let params = OtParams::toy(256, 0.006);
    let model = ChannelModel::new(0.006, 0.05, 0.001, Seed::from_u64(2)).unwrap();
    let m = random_pair(Seed::from_u64(6), 256);
    let run = |c| run_ot(vec![m.clone()], Choice::Single(true), &params, &model, RunSeeds::from_master(Seed::from_u64(61)), c).unwrap();
    let (l, t) = (run(Carrier::Loopback), run(Carrier::Tcp));
    assert!(l.transcript().is_some());
    assert_eq!(l.transcript(), t.transcript());
    assert_eq!(l.bob.unwrap().transcript, t.bob.unwrap().transcript);
}

#[test]
fn sixteen_concurrent_sessions_complete_independently() {
    let params = OtParams::toy(64, 0.0);
    let handles: Vec<_> = (0..16u64)
        .map(|s| {
            thread::spawn(move || {
                let m = random_pair(Seed::from_u64(s), 256);
                let r = run_ot(vec![m.clone()], Choice::Single(s % 2 == 1), &params, &noiseless(), RunSeeds::from_master(Seed::from_u64(s)), Carrier::Loopback).unwrap();
                assert_eq!(r.bob.as_ref().unwrap().single().message, m[(s % 2) as usize]);
                r.transcript().unwrap()
            })
        })
        .collect();
    let digests: HashSet<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(digests.len(), 16);
}

#[test]
fn large_multi_ot_session() {
    let params = OtParams::toy(1 << 16, 0.0);
    let v = 1 << 12;
    let choices: Vec<bool> = (0..16).map(|i| i % 3 == 0).collect();
    let messages: Vec<_> = (0..16).map(|i| random_pair(Seed::from_u64(i), 256)).collect();
    let r = run_ot(messages, Choice::Multi { v, choices }, &params, &noiseless(), RunSeeds::from_master(Seed::from_u64(12)), Carrier::Loopback).unwrap();
    assert!(r.delivered());
    let bob = r.bob.unwrap();
    assert!(bob.deliveries.len() >= 15, "{}", bob.deliveries.len());
    assert!(bob.partitions.iter().all(|p| p.i0.len() == v / 2 && p.i1.len() == v / 2));
}

#[test]
fn oversized_blocks_report_insufficient_indices() {
    let params = OtParams::toy(64, 0.0);
    let r = run_ot(vec![random_pair(Seed::from_u64(1), 256)], Choice::Multi { v: 128, choices: vec![true] }, &params, &noiseless(), RunSeeds::from_master(Seed::from_u64(2)), Carrier::Loopback).unwrap();
    assert!(matches!(r.bob, Err(qot::Error::InsufficientIndices { .. })));
    assert!(r.alice.is_err());
}
