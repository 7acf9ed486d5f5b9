//! Oblivious transfer from BB84 states.
//!
//! Alice sends `2λ_OT` states, Bob commits to his outcomes and bases through
//! the ERE layer, half the positions are opened and tested, and the rest are
//! split by basis agreement. Bob's matched set keys the message he wants;
//! syndromes let him correct channel noise and a Toeplitz hash plus PRG turns
//! each key string into a pad.
//!
//! The multi-OT variant cuts the untested positions into `n_ot` disjoint
//! blocks of `v/2` matched and `v/2` mismatched positions, one transfer each.

use std::net::{TcpListener, TcpStream};
use std::thread;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bb84::{matched_errors, receive_states, send_states, within_error_rate, Honest, MeasurePolicy};
use crate::bits::BitString;
use crate::channel::{Basis, ChannelModel};
use crate::commit::ere::{ere_commit_committer, ere_commit_receiver, sample_subset, validate_subset, EreCheat, EreParams};
use crate::commit::eq::{expect_count, malformed};
use crate::ecc::{build_code, decode_with, default_syndrome_len, max_flips_for, syndrome, DecodeOutcome, Decoder};
use crate::error::{Abort, Error, Stage};
use crate::primitives::{prg_expand, universal_hash, ToeplitzSeed, DEFAULT_LAMBDA_PQS};
use crate::rng::{Rng, Seed};
use crate::transport::{Reader, Side, Tag, TcpLink, Wire, Writer};

/// Failure probability allotted to each matched-basis test when the slack is
/// sized by Hoeffding's inequality.
pub const TOY_TEST_FAILURE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtParams {
    pub lambda_ot: usize,
    /// Message length `ℓ` in bits.
    pub message_len: usize,
    /// Output length of the privacy-amplification hash.
    pub lambda_pqs: usize,
    pub alpha: f64,
    /// Slack on Alice's test of the challenged positions.
    pub delta: f64,
    pub ere: EreParams,
}

/// One-sided Hoeffding slack: `P[rate - alpha > delta] <= failure` over
/// `n` samples.
pub fn hoeffding_slack(n: usize, failure: f64) -> f64 {
    ((1.0 / failure).ln() / (2.0 * n.max(1) as f64)).sqrt()
}

impl OtParams {
    /// Small insecure sizes for simulation: `m = 128`, `λ_EX = 1024` and
    /// `w` just large enough for Bob's `4λ_OT` committed bits. Each test
    /// slack is Hoeffding-sized from 90% of its expected sample count.
    pub fn toy(lambda_ot: usize, alpha: f64) -> Self {
        let (lambda_ex, m) = (1024, 128);
        let k = lambda_ex / m;
        let slack = |expected: f64| hoeffding_slack((0.9 * expected) as usize, TOY_TEST_FAILURE);
        OtParams {
            lambda_ot,
            message_len: DEFAULT_LAMBDA_PQS,
            lambda_pqs: DEFAULT_LAMBDA_PQS,
            alpha,
            delta: slack(lambda_ot as f64 / 2.0),
            ere: EreParams {
                lambda_ex,
                m,
                w: (4 * lambda_ot).div_ceil(k),
                lambda_pqs: DEFAULT_LAMBDA_PQS,
                alpha,
                delta: slack(lambda_ex as f64),
                delta_pair: slack(m as f64 / 2.0),
            },
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.ere.validate()?;
        if self.lambda_ot < 2 || self.message_len == 0 || self.lambda_pqs == 0 {
            return Err(Error::Domain(format!("degenerate OT parameters {self:?}")));
        }
        if self.ere.slots() < 4 * self.lambda_ot {
            return Err(Error::Domain(format!(
                "ERE layer has {} slots, Bob needs {}",
                self.ere.slots(),
                4 * self.lambda_ot
            )));
        }
        if self.alpha + self.delta > 0.5 {
            return Err(Error::Domain("alpha + delta must stay at most 1/2".into()));
        }
        Ok(())
    }

    /// Digest both parties compare before any traffic.
    pub fn digest(&self, model: &ChannelModel) -> [u8; 32] {
        let json = serde_json::to_vec(&(self, model)).expect("parameters serialize");
        Sha256::digest(json).into()
    }
}

/// Positions into the reordered untested list: `i0` keys `m0`, `i1` keys `m1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexPartition {
    pub i0: Vec<usize>,
    pub i1: Vec<usize>,
}

impl IndexPartition {
    pub fn get(&self, b: bool) -> &[usize] {
        if b {
            &self.i1
        } else {
            &self.i0
        }
    }

    pub fn swapped(&self) -> Self {
        IndexPartition {
            i0: self.i1.clone(),
            i1: self.i0.clone(),
        }
    }
}

/// Step-7 split: matched bases go to `I_b`, the rest to `I_b̄`.
pub fn partition(theta: &[Basis], theta_hat: &[Basis], b: bool) -> IndexPartition {
    let (matched, mismatched): (Vec<usize>, Vec<usize>) = (0..theta.len()).partition(|&i| theta[i] == theta_hat[i]);
    label(matched, mismatched, b)
}

fn label(matched: Vec<usize>, mismatched: Vec<usize>, b: bool) -> IndexPartition {
    if b {
        IndexPartition { i0: mismatched, i1: matched }
    } else {
        IndexPartition { i0: matched, i1: mismatched }
    }
}

/// `n_ot` pairwise-disjoint partitions, block `j` taking the next `v/2`
/// matched and `v/2` mismatched positions and labelled by `choices[j]`.
pub fn partition_for_multi_ot(
    theta: &[Basis],
    theta_hat: &[Basis],
    n_ot: usize,
    v: usize,
    choices: &[bool],
) -> Result<Vec<IndexPartition>, Error> {
    let half = v / 2;
    let (matched, mismatched): (Vec<usize>, Vec<usize>) = (0..theta.len()).partition(|&i| theta[i] == theta_hat[i]);
    if half == 0 || choices.len() < n_ot || matched.len() < n_ot * half || mismatched.len() < n_ot * half {
        return Err(Error::InsufficientIndices {
            n_ot,
            block: v,
            matched: matched.len(),
            mismatched: mismatched.len(),
        });
    }
    Ok((0..n_ot)
        .map(|j| {
            let blk = j * half..(j + 1) * half;
            label(matched[blk.clone()].to_vec(), mismatched[blk].to_vec(), choices[j])
        })
        .collect())
}

/// Keystream `PRG(h(s, x))` stretched to `len` bits.
pub fn keystream(seed: &ToeplitzSeed, x: &BitString, len: usize) -> Result<BitString, Error> {
    prg_expand(&universal_hash(seed, x)?, len)
}

/// `c_b = PRG(h(s_b, x_b)) XOR m_b` for both messages.
pub fn encrypt_messages(
    x: [&BitString; 2],
    s: [&ToeplitzSeed; 2],
    m: [&BitString; 2],
) -> Result<[BitString; 2], Error> {
    if m[0].len() != m[1].len() {
        return Err(Error::Length {
            expected: m[0].len(),
            actual: m[1].len(),
        });
    }
    let c = |b: usize| -> Result<BitString, Error> { Ok(keystream(s[b], x[b], m[b].len())?.xor(m[b])) };
    Ok([c(0)?, c(1)?])
}

pub fn decrypt(seed: &ToeplitzSeed, x: &BitString, ciphertext: &BitString) -> Result<BitString, Error> {
    Ok(keystream(seed, x, ciphertext.len())?.xor(ciphertext))
}

/// What Bob asks for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Choice {
    Single(bool),
    /// One choice bit per block of `v` positions.
    Multi { v: usize, choices: Vec<bool> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AliceOutcome {
    pub messages: Vec<[BitString; 2]>,
    /// Message pair `t` went out on partition `assignment[t]`.
    pub assignment: Vec<usize>,
    pub partitions: Vec<IndexPartition>,
    /// Transcript digest at the moment Bob's partition arrived.
    pub digest_before_partition: [u8; 32],
    pub transcript: [u8; 32],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delivery {
    /// The choice bit that applied to this message pair.
    pub b: bool,
    pub message: BitString,
    /// False when error correction failed and a random key was used.
    pub decoded: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BobOutcome {
    pub deliveries: Vec<Delivery>,
    pub partitions: Vec<IndexPartition>,
    pub transcript: [u8; 32],
}

impl BobOutcome {
    pub fn single(&self) -> &Delivery {
        &self.deliveries[0]
    }
}

#[derive(Debug)]
pub struct OtSessionResult {
    pub alice: Result<AliceOutcome, Error>,
    pub bob: Result<BobOutcome, Error>,
}

impl OtSessionResult {
    /// Both parties finished and every delivered message is the chosen one.
    pub fn delivered(&self) -> bool {
        match (&self.alice, &self.bob) {
            (Ok(a), Ok(b)) => {
                !b.deliveries.is_empty()
                    && b.deliveries
                        .iter()
                        .zip(&a.messages)
                        .all(|(d, m)| d.message == m[d.b as usize])
            }
            _ => false,
        }
    }

    pub fn abort_stage(&self) -> Option<Stage> {
        let a = self.alice.as_ref().err().and_then(Error::abort_stage);
        a.or_else(|| self.bob.as_ref().err().and_then(Error::abort_stage))
    }

    pub fn transcript(&self) -> Option<[u8; 32]> {
        self.alice.as_ref().ok().map(|a| a.transcript)
    }
}

fn write_partitions(parts: &[IndexPartition]) -> Vec<u8> {
    let mut w = Writer::new();
    w.len(parts.len());
    for p in parts {
        w.indices(&p.i0).indices(&p.i1);
    }
    w.finish()
}

fn read_partitions(payload: &[u8], universe: usize, single: bool) -> Result<Vec<IndexPartition>, Error> {
    let mut r = Reader::new(payload);
    let n = r.len()?;
    if n == 0 || n > universe || single && n != 1 {
        return Err(malformed(format!("{n} partitions")));
    }
    let mut seen = vec![false; universe];
    let mut parts = Vec::with_capacity(n);
    for _ in 0..n {
        let p = IndexPartition {
            i0: r.indices()?,
            i1: r.indices()?,
        };
        for &i in p.i0.iter().chain(&p.i1) {
            if i >= universe || std::mem::replace(&mut seen[i], true) {
                return Err(malformed(format!("partition index {i} repeated or out of range")));
            }
        }
        if p.i0.is_empty() || p.i1.is_empty() {
            return Err(malformed("empty partition half".into()));
        }
        parts.push(p);
    }
    r.finish()?;
    if single && seen.iter().any(|s| !s) {
        return Err(malformed("partition does not cover the untested positions".into()));
    }
    Ok(parts)
}

fn code_for(n: usize, seed: Seed) -> Result<crate::ecc::LinearCode, Error> {
    build_code(n, default_syndrome_len(n), seed)
}

/// Alice's side of a run. `messages` holds one pair for a single OT or one
/// per block for multi-OT; extra pairs beyond what Bob's partition supports
/// are not sent.
pub fn alice(
    wire: &mut Wire,
    params: &OtParams,
    model: &ChannelModel,
    messages: &[[BitString; 2]],
    rng: &mut Rng,
) -> Result<AliceOutcome, Error> {
    params.validate()?;
    if messages.is_empty() || messages.iter().any(|m| m[0].len() != params.message_len || m[1].len() != params.message_len) {
        return Err(Error::Domain(format!("messages must be nonempty pairs of {} bits", params.message_len)));
    }
    let lot = params.lambda_ot;
    wire.handshake(params.digest(model))?;

    let prepared = send_states(wire, Tag::OtBb84Batch, 2 * lot, model, "ot", rng)?;
    let (x, theta) = (prepared.bits(), prepared.bases());

    let mut ere = ere_commit_receiver(wire, &params.ere, model, rng)?;

    let tested = sample_subset(2 * lot, lot, rng);
    wire.send(Tag::OtChallengeSet, Writer::new().indices(&tested).finish())?;
    let slots: Vec<usize> = tested.iter().flat_map(|&i| [2 * i, 2 * i + 1]).collect();
    let opened = ere.open(wire, &slots)?;
    let mut hat_x = BitString::zeros(2 * lot);
    let mut hat_theta = vec![Basis::Rectilinear; 2 * lot];
    for (&i, pair) in tested.iter().zip(opened.chunks(2)) {
        hat_x.set(i, pair[0]);
        hat_theta[i] = Basis::from_bit(pair[1]);
    }
    let (errors, n) = matched_errors(&tested, &x, &theta, &hat_x, &hat_theta);
    if !within_error_rate(errors, n, params.alpha, params.delta) {
        return Err(wire.abort(Abort::at(Stage::OtCheck)));
    }

    let rest: Vec<usize> = {
        let mut mark = vec![true; 2 * lot];
        tested.iter().for_each(|&i| mark[i] = false);
        (0..2 * lot).filter(|&i| mark[i]).collect()
    };
    let rest_theta: BitString = rest.iter().map(|&i| theta[i].bit()).collect();
    wire.send(Tag::OtBases, Writer::new().bits(&rest_theta).finish())?;

    let digest_before_partition = wire.transcript_digest();
    let single = messages.len() == 1;
    let partitions = read_partitions(&wire.recv(Tag::OtPartition)?, rest.len(), single)?;
    let count = partitions.len().min(messages.len());
    let mut assignment: Vec<usize> = (0..partitions.len()).collect();
    if !single {
        assignment.shuffle(rng);
        assignment.truncate(count);
        wire.send(Tag::OtAssignment, Writer::new().indices(&assignment).finish())?;
    }

    let key = |idx: &[usize]| -> BitString { idx.iter().map(|&p| x.get(rest[p])).collect() };
    let code_seed = Seed(rand::Rng::gen(rng));
    let mut synd = Writer::new();
    synd.seed(&code_seed).len(count);
    let mut cts = Writer::new();
    cts.len(count);
    for (t, &j) in assignment.iter().enumerate() {
        let p = &partitions[j];
        let xs = [key(&p.i0), key(&p.i1)];
        for xb in &xs {
            synd.bits(&syndrome(&code_for(xb.len(), code_seed)?, xb)?);
        }
        let seeds = [
            ToeplitzSeed::random(xs[0].len(), params.lambda_pqs, rng),
            ToeplitzSeed::random(xs[1].len(), params.lambda_pqs, rng),
        ];
        let c = encrypt_messages([&xs[0], &xs[1]], [&seeds[0], &seeds[1]], [&messages[t][0], &messages[t][1]])?;
        cts.bits(seeds[0].bits()).bits(&c[0]).bits(seeds[1].bits()).bits(&c[1]);
    }
    wire.send(Tag::OtSyndromes, synd.finish())?;
    wire.send(Tag::OtCiphertexts, cts.finish())?;

    Ok(AliceOutcome {
        messages: messages[..count].to_vec(),
        assignment,
        partitions,
        digest_before_partition,
        transcript: wire.transcript_digest(),
    })
}

/// Bob's side with an honest measurement.
pub fn bob(wire: &mut Wire, params: &OtParams, model: &ChannelModel, choice: &Choice, rng: &mut Rng) -> Result<BobOutcome, Error> {
    bob_with(wire, params, model, choice, &mut Honest, rng)
}

pub fn bob_with(
    wire: &mut Wire,
    params: &OtParams,
    model: &ChannelModel,
    choice: &Choice,
    policy: &mut dyn MeasurePolicy,
    rng: &mut Rng,
) -> Result<BobOutcome, Error> {
    params.validate()?;
    let lot = params.lambda_ot;
    wire.handshake(params.digest(model))?;

    let measured = receive_states(wire, Tag::OtBb84Batch, 2 * lot, model, "ot", policy, rng)?;
    let committed: Vec<bool> = (0..2 * lot)
        .flat_map(|i| [measured.bits.get(i), measured.bases[i].bit()])
        .collect();
    let ere = ere_commit_committer(wire, &params.ere, model, &committed, &EreCheat::default(), rng)?;

    let tested = {
        let payload = wire.recv(Tag::OtChallengeSet)?;
        let mut r = Reader::new(&payload);
        let t = r.indices()?;
        r.finish()?;
        t
    };
    validate_subset(&tested, 2 * lot, lot)?;
    let slots: Vec<usize> = tested.iter().flat_map(|&i| [2 * i, 2 * i + 1]).collect();
    ere.open(wire, &slots, rng)?;

    let rest: Vec<usize> = {
        let mut mark = vec![true; 2 * lot];
        tested.iter().for_each(|&i| mark[i] = false);
        (0..2 * lot).filter(|&i| mark[i]).collect()
    };
    let theta: Vec<Basis> = {
        let payload = wire.recv(Tag::OtBases)?;
        let mut r = Reader::new(&payload);
        let t = r.bits_of(rest.len())?;
        r.finish()?;
        t.iter().map(Basis::from_bit).collect()
    };
    let theta_hat: Vec<Basis> = rest.iter().map(|&i| measured.bases[i]).collect();
    let hat_x: BitString = rest.iter().map(|&i| measured.bits.get(i)).collect();

    let (partitions, bits): (Vec<IndexPartition>, Vec<bool>) = match choice {
        Choice::Single(b) => (vec![partition(&theta, &theta_hat, *b)], vec![*b]),
        Choice::Multi { v, choices } => {
            let half = (*v / 2).max(1);
            let matched = theta.iter().zip(&theta_hat).filter(|(a, b)| a == b).count();
            let n_ot = (lot / v.max(&1)).min(matched / half).min((rest.len() - matched) / half).min(choices.len());
            if n_ot == 0 {
                return Err(Error::InsufficientIndices {
                    n_ot: choices.len(),
                    block: *v,
                    matched,
                    mismatched: rest.len() - matched,
                });
            }
            (partition_for_multi_ot(&theta, &theta_hat, n_ot, *v, choices)?, choices.clone())
        }
    };
    wire.send(Tag::OtPartition, write_partitions(&partitions))?;
    let assignment: Vec<usize> = match choice {
        Choice::Single(_) => vec![0],
        Choice::Multi { .. } => {
            let payload = wire.recv(Tag::OtAssignment)?;
            let mut r = Reader::new(&payload);
            let a = r.indices()?;
            r.finish()?;
            let mut seen = vec![false; partitions.len()];
            if a.iter().any(|&j| j >= partitions.len() || std::mem::replace(&mut seen[j], true)) {
                return Err(malformed("assignment is not injective".into()));
            }
            a
        }
    };

    let synd_payload = wire.recv(Tag::OtSyndromes)?;
    let mut sr = Reader::new(&synd_payload);
    let code_seed = sr.seed()?;
    expect_count(sr.len()?, assignment.len())?;
    let ct_payload = wire.recv(Tag::OtCiphertexts)?;
    let mut cr = Reader::new(&ct_payload);
    expect_count(cr.len()?, assignment.len())?;

    let mut deliveries = Vec::with_capacity(assignment.len());
    for &j in &assignment {
        let p = &partitions[j];
        let b = bits[j];
        let mut synd_b = None;
        for side in [false, true] {
            let n = p.get(side).len();
            let s = sr.bits_of(default_syndrome_len(n))?;
            if side == b {
                synd_b = Some(s);
            }
        }
        let mut seed_b = None;
        let mut ct_b = None;
        for side in [false, true] {
            let n = p.get(side).len();
            let seed = ToeplitzSeed::new(cr.bits_of(n + params.lambda_pqs - 1)?, n, params.lambda_pqs)?;
            let ct = cr.bits_of(params.message_len)?;
            if side == b {
                seed_b = Some(seed);
                ct_b = Some(ct);
            }
        }
        let idx = p.get(b);
        let y = hat_x.select(idx);
        let code = code_for(idx.len(), code_seed)?;
        let max_flips = max_flips_for(idx.len(), params.alpha);
        let (key, decoded) = match decode_with(&code, &y, &synd_b.unwrap(), max_flips, Decoder::Auto, params.alpha)? {
            DecodeOutcome::Corrected(x) => (x, true),
            DecodeOutcome::Failure => (BitString::random(idx.len(), rng), false),
        };
        deliveries.push(Delivery {
            b,
            message: decrypt(&seed_b.unwrap(), &key, &ct_b.unwrap())?,
            decoded,
        });
    }
    sr.finish()?;
    cr.finish()?;

    Ok(BobOutcome {
        deliveries,
        partitions,
        transcript: wire.transcript_digest(),
    })
}

/// Seeds for one simulated run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSeeds {
    pub alice: Seed,
    pub bob: Seed,
    pub channel: Seed,
}

impl RunSeeds {
    pub fn from_master(master: Seed) -> Self {
        RunSeeds {
            alice: master.derive("alice"),
            bob: master.derive("bob"),
            channel: master.derive("channel"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Carrier {
    Loopback,
    /// Both parties in this process, connected through a localhost socket.
    Tcp,
}

/// Runs both parties on their own threads.
pub fn run_ot(
    messages: Vec<[BitString; 2]>,
    choice: Choice,
    params: &OtParams,
    model: &ChannelModel,
    seeds: RunSeeds,
    carrier: Carrier,
) -> Result<OtSessionResult, Error> {
    run_ot_with(messages, choice, params, model, seeds, carrier, Box::new(Honest))
}

pub fn run_ot_with(
    messages: Vec<[BitString; 2]>,
    choice: Choice,
    params: &OtParams,
    model: &ChannelModel,
    seeds: RunSeeds,
    carrier: Carrier,
    mut policy: Box<dyn MeasurePolicy + Send>,
) -> Result<OtSessionResult, Error> {
    let (mut wa, mut wb) = match carrier {
        Carrier::Loopback => Wire::loopback_pair(),
        Carrier::Tcp => {
            let listener = TcpListener::bind("127.0.0.1:0").map_err(crate::TransportError::from)?;
            let addr = listener.local_addr().map_err(crate::TransportError::from)?;
            let client = TcpStream::connect(addr).map_err(crate::TransportError::from)?;
            let (server, _) = listener.accept().map_err(crate::TransportError::from)?;
            (
                Wire::new(Box::new(TcpLink::new(client)?), Side::Initiator),
                Wire::new(Box::new(TcpLink::new(server)?), Side::Responder),
            )
        }
    };
    let model = ChannelModel {
        rng_seed: seeds.channel,
        ..*model
    };
    let (pa, pb) = (*params, *params);
    let handle = thread::spawn(move || bob_with(&mut wb, &pb, &model, &choice, policy.as_mut(), &mut seeds.bob.rng()));
    let alice_result = alice(&mut wa, &pa, &model, &messages, &mut seeds.alice.rng());
    drop(wa);
    let bob_result = handle.join().expect("Bob's thread panicked");
    Ok(OtSessionResult {
        alice: alice_result,
        bob: bob_result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn msgs(seed: u64, len: usize) -> [BitString; 2] {
        let mut rng = Seed::from_u64(seed).rng();
        [BitString::random(len, &mut rng), BitString::random(len, &mut rng)]
    }

    #[test]
    fn toy_params_are_consistent() {
        for lot in [64, 512, 4096] {
            let p = OtParams::toy(lot, 0.006);
            p.validate().unwrap();
            assert!(p.ere.slots() >= 4 * lot);
            assert_eq!(p.ere.k(), 8);
        }
        assert!(OtParams { lambda_ot: 10_000, ..OtParams::toy(64, 0.0) }.validate().is_err());
    }

    #[test]
    fn zero_message_gives_keystream() {
        let mut rng = Seed::from_u64(1).rng();
        let x = [BitString::random(50, &mut rng), BitString::random(70, &mut rng)];
        let s = [ToeplitzSeed::random(50, 256, &mut rng), ToeplitzSeed::random(70, 256, &mut rng)];
        let zero = BitString::zeros(300);
        let c = encrypt_messages([&x[0], &x[1]], [&s[0], &s[1]], [&zero, &zero]).unwrap();
        assert_eq!(c[0], keystream(&s[0], &x[0], 300).unwrap());
        assert_eq!(decrypt(&s[1], &x[1], &c[1]).unwrap(), zero);
    }

    #[test]
    fn key_length_mismatch_rejected() {
        let mut rng = Seed::from_u64(2).rng();
        let s = ToeplitzSeed::random(10, 256, &mut rng);
        assert!(keystream(&s, &BitString::zeros(11), 8).is_err());
    }

    #[test]
    fn multi_partitions_are_disjoint_and_labelled() {
        let mut rng = Seed::from_u64(3).rng();
        let theta: Vec<Basis> = (0..400).map(|_| Basis::random(&mut rng)).collect();
        let hat: Vec<Basis> = (0..400).map(|_| Basis::random(&mut rng)).collect();
        let choices = [true, false, true, true];
        let parts = partition_for_multi_ot(&theta, &hat, 4, 40, &choices).unwrap();
        let mut seen = std::collections::HashSet::new();
        for (p, &b) in parts.iter().zip(&choices) {
            assert_eq!((p.i0.len(), p.i1.len()), (20, 20));
            assert!(p.get(b).iter().all(|&i| theta[i] == hat[i]));
            assert!(p.get(!b).iter().all(|&i| theta[i] != hat[i]));
            assert!(p.i0.iter().chain(&p.i1).all(|&i| seen.insert(i)));
        }
        assert!(matches!(
            partition_for_multi_ot(&theta, &hat, 20, 40, &[true; 20]),
            Err(Error::InsufficientIndices { .. })
        ));
    }

    #[test]
    fn single_block_matches_step_seven_split() {
        let mut rng = Seed::from_u64(4).rng();
        let theta: Vec<Basis> = (0..100).map(|_| Basis::random(&mut rng)).collect();
        let hat: Vec<Basis> = (0..100).map(|_| Basis::random(&mut rng)).collect();
        let full = partition(&theta, &hat, true);
        let v = 2 * full.i0.len().min(full.i1.len());
        let one = &partition_for_multi_ot(&theta, &hat, 1, v, &[true]).unwrap()[0];
        assert!(full.i1.starts_with(&one.i1) && full.i0.starts_with(&one.i0));
    }

    #[test]
    fn noiseless_run_delivers_chosen_message() {
        let params = OtParams::toy(128, 0.0);
        let model = ChannelModel::noiseless(Seed::from_u64(0));
        for b in [false, true] {
            let m = msgs(5, 256);
            let r = run_ot(vec![m.clone()], Choice::Single(b), &params, &model, RunSeeds::from_master(Seed::from_u64(9)), Carrier::Loopback).unwrap();
            assert!(r.delivered(), "{r:?}");
            assert_eq!(r.bob.as_ref().unwrap().single().message, m[b as usize]);
            assert_eq!(r.transcript(), Some(r.bob.as_ref().unwrap().transcript));
        }
    }

    #[test]
    fn mismatched_params_abort_before_states() {
        let params = OtParams::toy(64, 0.0);
        let model = ChannelModel::noiseless(Seed::from_u64(0));
        let (mut wa, mut wb) = Wire::loopback_pair();
        let other = OtParams { message_len: 128, ..params };
        let h = thread::spawn(move || bob(&mut wb, &other, &model, &Choice::Single(false), &mut Seed::from_u64(1).rng()).map(|_| wb.frames()));
        let ra = alice(&mut wa, &params, &model, &[msgs(1, 256)], &mut Seed::from_u64(2).rng());
        assert_eq!(ra.unwrap_err().abort_stage(), Some(Stage::ParamsMismatch));
        assert_eq!(h.join().unwrap().unwrap_err().abort_stage(), Some(Stage::ParamsMismatch));
        assert!(wa.frames() <= 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn decrypt_inverts_encrypt(s in any::<u64>(), n0 in 1usize..200, n1 in 1usize..200, len in 1usize..600) {
            let mut rng = Seed::from_u64(s).rng();
            let x = [BitString::random(n0, &mut rng), BitString::random(n1, &mut rng)];
            let seeds = [ToeplitzSeed::random(n0, 256, &mut rng), ToeplitzSeed::random(n1, 256, &mut rng)];
            let m = [BitString::random(len, &mut rng), BitString::random(len, &mut rng)];
            let c = encrypt_messages([&x[0], &x[1]], [&seeds[0], &seeds[1]], [&m[0], &m[1]]).unwrap();
            prop_assert_eq!(decrypt(&seeds[0], &x[0], &c[0]).unwrap(), m[0].clone());
            prop_assert_eq!(decrypt(&seeds[1], &x[1], &c[1]).unwrap(), m[1].clone());
        }
    }
}
