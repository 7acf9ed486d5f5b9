//! The iterative decoder against brute-force minimum-weight coset decoding.

use qot::ecc::{build_code_with_weight, decode_with, syndrome, DecodeOutcome, Decoder, LinearCode};
use qot::{BitString, Seed};

fn mask_to_bits(n: usize, v: u32) -> BitString {
    (0..n).map(|j| v >> j & 1 == 1).collect()
}

struct Oracle {
    /// Lightest pattern per syndrome and how many patterns share that weight.
    leader: Vec<(u32, u32)>,
    min_distance: u32,
}

/// Walks all 2^n patterns in Gray-code order, tracking their syndromes.
fn oracle(code: &LinearCode) -> Oracle {
    let n = code.n();
    let cols: Vec<u32> = (0..n)
        .map(|j| code.column(j).iter().fold(0, |acc, &r| acc | 1 << r))
        .collect();
    let mut leader = vec![(u32::MAX, 0u32); 1 << code.q()];
    leader[0] = (0, 1);
    let mut min_distance = u32::MAX;
    let mut s = 0u32;
    for g in 1u32..1 << n {
        s ^= cols[g.trailing_zeros() as usize];
        let e = g ^ (g >> 1);
        let w = e.count_ones();
        if s == 0 {
            min_distance = min_distance.min(w);
        }
        let slot = &mut leader[s as usize];
        if slot.0 == u32::MAX || w < slot.0.count_ones() {
            *slot = (e, 1);
        } else if w == slot.0.count_ones() {
            slot.1 += 1;
        }
    }
    Oracle {
        leader,
        min_distance,
    }
}

#[test]
fn matches_brute_force_on_correctable_patterns() {
    for (n, q, weight, seed) in [
        (16, 10, 4, 12),
        (16, 12, 3, 1),
        (16, 14, 3, 1),
        (20, 14, 5, 0),
        (24, 14, 5, 2),
    ] {
        let code = build_code_with_weight(n, q, weight, Seed::from_u64(seed)).unwrap();
        let oracle = oracle(&code);
        let t_design = ((oracle.min_distance - 1) / 2) as usize;
        assert!(t_design >= 2, "n={n} q={q}: d={}", oracle.min_distance);
        let mut rng = Seed::from_u64(seed).rng();
        let mut checked = 0;
        for (s, &(e, ties)) in oracle.leader.iter().enumerate() {
            if e == u32::MAX || e.count_ones() as usize > t_design {
                continue;
            }
            assert_eq!(ties, 1);
            let x = BitString::random(n, &mut rng);
            let target = syndrome(&code, &x).unwrap();
            let y = x.xor(&mask_to_bits(n, e));
            assert_eq!(syndrome(&code, &mask_to_bits(n, e)).unwrap(), mask_to_bits(q, s as u32));
            let out = decode_with(&code, &y, &target, t_design, Decoder::Auto, 0.05).unwrap();
            assert_eq!(out, DecodeOutcome::Corrected(x), "n={n} q={q} e={e:#x}");
            checked += 1;
        }
        let expected: usize = (0..=t_design).map(|w| binomial(n, w)).sum();
        assert_eq!(checked, expected);
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn heavier_than_budget_is_failure() {
    let code = build_code_with_weight(16, 12, 3, Seed::from_u64(1)).unwrap();
    let x = BitString::zeros(16);
    let target = syndrome(&code, &x).unwrap();
    let y = mask_to_bits(16, 0b1011_0000_0110_1001);
    let out = decode_with(&code, &y, &target, 2, Decoder::Auto, 0.05).unwrap();
    if let DecodeOutcome::Corrected(z) = out {
        assert!(z.hamming_distance(&y) <= 2);
        assert_eq!(syndrome(&code, &z).unwrap(), target);
    }
}
