//! EqCommitment: two pairs of Naor commitments, one pair opened on challenge,
//! the other carrying the masked bit.

use rand::Rng as _;

use crate::bits::BitString;
use crate::error::{Abort, Error, Stage};
use crate::primitives::{naor_commit, naor_open, PrgSeed};
use crate::rng::Rng;
use crate::transport::{Reader, Tag, Wire, Writer};

/// Seeds `p[γ][δ]` for the four base commitments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqSeedQuad {
    pub p: [[PrgSeed; 2]; 2],
}

impl EqSeedQuad {
    pub fn new(p00: PrgSeed, p01: PrgSeed, p10: PrgSeed, p11: PrgSeed) -> Self {
        EqSeedQuad {
            p: [[p00, p01], [p10, p11]],
        }
    }

    pub fn random(lambda_pqs: usize, rng: &mut Rng) -> Self {
        let mut s = || PrgSeed::random(lambda_pqs, rng);
        EqSeedQuad::new(s(), s(), s(), s())
    }

    pub fn lambda_pqs(&self) -> usize {
        self.p[0][0].len()
    }
}

/// Committer-side state of one instance. `u[γ][δ]` is the value committed
/// under seed `p[γ][δ]`; an honest committer has `u[γ][0] == u[γ][1]`.
#[derive(Clone, Debug)]
pub struct EqCommitter {
    pub bit: bool,
    pub u: [[bool; 2]; 2],
    pub seeds: EqSeedQuad,
    pub gamma: Option<bool>,
    pub e: Option<bool>,
}

impl EqCommitter {
    pub fn honest(bit: bool, seeds: EqSeedQuad, rng: &mut Rng) -> Self {
        let (u0, u1): (bool, bool) = (rng.gen(), rng.gen());
        EqCommitter {
            bit,
            u: [[u0, u0], [u1, u1]],
            seeds,
            gamma: None,
            e: None,
        }
    }

    /// Commits `(u, 1 - u)` in pair `guess` and a consistent pair elsewhere.
    /// The check passes exactly when the challenge opens the other pair, and
    /// then either bit can be opened later.
    pub fn equivocating(guess: bool, seeds: EqSeedQuad, rng: &mut Rng) -> Self {
        let (u, v): (bool, bool) = (rng.gen(), rng.gen());
        let mut pairs = [[v, v], [v, v]];
        pairs[guess as usize] = [u, !u];
        EqCommitter {
            bit: false,
            u: pairs,
            seeds,
            gamma: None,
            e: None,
        }
    }

    pub fn is_equivocal(&self) -> bool {
        self.u[0][0] != self.u[0][1] || self.u[1][0] != self.u[1][1]
    }

    pub fn payloads(&self, key: &BitString) -> Result<[[BitString; 2]; 2], Error> {
        let c = |g: usize, d: usize| naor_commit(key, self.u[g][d], self.seeds.p[g][d].bits());
        Ok([[c(0, 0)?, c(0, 1)?], [c(1, 0)?, c(1, 1)?]])
    }

    /// Records the challenge and returns `e = b XOR u^{γ̄}`.
    pub fn mask(&mut self, gamma: bool) -> bool {
        self.gamma = Some(gamma);
        let e = self.bit ^ self.u[!gamma as usize][0];
        self.e = Some(e);
        e
    }

    /// A `δ` under which the unopened pair decommits to `bit`, if any.
    pub fn delta_for(&self, bit: bool) -> Option<bool> {
        let gbar = !self.gamma? as usize;
        let e = self.e?;
        [false, true]
            .into_iter()
            .find(|&d| self.u[gbar][d as usize] == bit ^ e)
    }

    /// The opening of `bit` with a chosen `δ`, or `None` if this instance
    /// cannot open to `bit`.
    pub fn opening(&self, index: usize, bit: bool, delta: bool) -> Option<EqOpening> {
        let gbar = !self.gamma? as usize;
        (self.u[gbar][delta as usize] == bit ^ self.e?).then(|| EqOpening {
            index,
            bit,
            delta,
            seed: self.seeds.p[gbar][delta as usize].clone(),
        })
    }
}

/// Receiver-side record of one instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqCommitTranscript {
    pub key: BitString,
    pub c: [[BitString; 2]; 2],
    pub gamma: bool,
    /// The common value `u^γ` of the opened pair.
    pub opened_pair: Option<bool>,
    pub e: Option<bool>,
    pub delta: Option<bool>,
    pub opened_bit: Option<bool>,
}

impl EqCommitTranscript {
    pub fn new(key: BitString, c: [[BitString; 2]; 2], gamma: bool) -> Self {
        EqCommitTranscript {
            key,
            c,
            gamma,
            opened_pair: None,
            e: None,
            delta: None,
            opened_bit: None,
        }
    }

    /// Opens the challenged pair: `Decommit` on a bad opening, `disagree` when
    /// the two values differ.
    pub fn open_pair(&mut self, s0: &BitString, s1: &BitString, disagree: Stage) -> Result<bool, Stage> {
        let g = self.gamma as usize;
        let a = naor_open(&self.key, &self.c[g][0], s0).ok_or(Stage::Decommit)?;
        let b = naor_open(&self.key, &self.c[g][1], s1).ok_or(Stage::Decommit)?;
        if a != b {
            return Err(disagree);
        }
        self.opened_pair = Some(a);
        Ok(a)
    }

    /// Accepts iff `c^{γ̄}_δ` opens under `seed` to `bit XOR e`.
    pub fn verify_opening(&mut self, bit: bool, delta: bool, seed: &BitString) -> Result<(), Stage> {
        let e = self.e.ok_or(Stage::Decommit)?;
        let gbar = !self.gamma as usize;
        let u = naor_open(&self.key, &self.c[gbar][delta as usize], seed).ok_or(Stage::Decommit)?;
        if u != bit ^ e {
            return Err(Stage::MaskCheck);
        }
        self.delta = Some(delta);
        self.opened_bit = Some(bit);
        Ok(())
    }
}

/// One decommitment: the bit, the selector `δ` and the seed of `c^{γ̄}_δ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqOpening {
    pub index: usize,
    pub bit: bool,
    pub delta: bool,
    pub seed: PrgSeed,
}

pub(crate) fn write_keys(keys: &[BitString]) -> Vec<u8> {
    let mut w = Writer::new();
    w.len(keys.len());
    for k in keys {
        w.bits(k);
    }
    w.finish()
}

pub(crate) fn read_keys(payload: &[u8], count: usize, key_len: usize) -> Result<Vec<BitString>, Error> {
    let mut r = Reader::new(payload);
    expect_count(r.len()?, count)?;
    let keys = (0..count).map(|_| r.bits_of(key_len)).collect::<Result<_, _>>()?;
    r.finish()?;
    Ok(keys)
}

pub(crate) fn write_payloads(payloads: &[[[BitString; 2]; 2]]) -> Vec<u8> {
    let mut w = Writer::new();
    w.len(payloads.len());
    for c in payloads {
        for pair in c {
            for p in pair {
                w.bits(p);
            }
        }
    }
    w.finish()
}

pub(crate) fn read_payloads(
    payload: &[u8],
    count: usize,
    key_len: usize,
) -> Result<Vec<[[BitString; 2]; 2]>, Error> {
    let mut r = Reader::new(payload);
    expect_count(r.len()?, count)?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut next = || r.bits_of(key_len);
        out.push([[next()?, next()?], [next()?, next()?]]);
    }
    r.finish()?;
    Ok(out)
}

pub(crate) fn write_openings(openings: &[EqOpening]) -> Vec<u8> {
    let mut w = Writer::new();
    w.len(openings.len());
    for o in openings {
        w.len(o.index).bool(o.bit).bool(o.delta).bits(o.seed.bits());
    }
    w.finish()
}

pub(crate) fn read_openings(payload: &[u8], expected: &[usize], lambda_pqs: usize) -> Result<Vec<EqOpening>, Error> {
    let mut r = Reader::new(payload);
    expect_count(r.len()?, expected.len())?;
    let mut out = Vec::with_capacity(expected.len());
    for &want in expected {
        let index = r.len()?;
        if index != want {
            return Err(malformed(format!("opening for index {index}, expected {want}")));
        }
        let bit = r.bool()?;
        let delta = r.bool()?;
        let seed = PrgSeed::new(r.bits_of(lambda_pqs)?, lambda_pqs)?;
        out.push(EqOpening {
            index,
            bit,
            delta,
            seed,
        });
    }
    r.finish()?;
    Ok(out)
}

/// A payload holding exactly one bit string of `n` bits.
pub(crate) fn read_bits(payload: &[u8], n: usize) -> Result<BitString, Error> {
    let mut r = Reader::new(payload);
    let v = r.bits_of(n)?;
    r.finish()?;
    Ok(v)
}

pub(crate) fn expect_count(got: usize, want: usize) -> Result<(), Error> {
    if got == want {
        Ok(())
    } else {
        Err(malformed(format!("expected {want} entries, got {got}")))
    }
}

pub(crate) fn malformed(msg: String) -> Error {
    crate::error::TransportError::Malformed(msg).into()
}

/// Committer side of a batch of parallel EqCommitments: keys in, four
/// payloads per instance out, challenges in, challenged seeds out, masks out.
pub fn eq_commit_send(wire: &mut Wire, committers: &mut [EqCommitter]) -> Result<(), Error> {
    let n = committers.len();
    let lambda = committers.first().map_or(0, |c| c.seeds.lambda_pqs());
    let keys = read_keys(&wire.recv(Tag::NaorKey)?, n, 3 * lambda)?;
    let payloads = committers
        .iter()
        .zip(&keys)
        .map(|(c, k)| c.payloads(k))
        .collect::<Result<Vec<_>, _>>()?;
    wire.send(Tag::NaorPayload, write_payloads(&payloads))?;

    let gammas = read_bits(&wire.recv(Tag::EqChallenge)?, n)?;
    let mut w = Writer::new();
    w.len(n);
    for (c, g) in committers.iter().zip(gammas.iter()) {
        let pair = &c.seeds.p[g as usize];
        w.bits(pair[0].bits()).bits(pair[1].bits());
    }
    wire.send(Tag::EqOpen, w.finish())?;

    let masks: BitString = committers
        .iter_mut()
        .zip(gammas.iter())
        .map(|(c, g)| c.mask(g))
        .collect();
    wire.send(Tag::EqMask, Writer::new().bits(&masks).finish())?;
    Ok(())
}

/// Receiver side of [`eq_commit_send`] with a fresh key per instance.
/// Aborts at the first instance whose challenged pair fails to open or
/// disagrees.
pub fn eq_commit_recv(
    wire: &mut Wire,
    n: usize,
    lambda_pqs: usize,
    rng: &mut Rng,
) -> Result<Vec<EqCommitTranscript>, Error> {
    let keys: Vec<BitString> = (0..n).map(|_| BitString::random(3 * lambda_pqs, rng)).collect();
    wire.send(Tag::NaorKey, write_keys(&keys))?;
    let payloads = read_payloads(&wire.recv(Tag::NaorPayload)?, n, 3 * lambda_pqs)?;
    let gammas = BitString::random(n, rng);
    wire.send(Tag::EqChallenge, Writer::new().bits(&gammas).finish())?;
    let mut transcripts: Vec<EqCommitTranscript> = keys
        .into_iter()
        .zip(payloads)
        .zip(gammas.iter())
        .map(|((k, c), g)| EqCommitTranscript::new(k, c, g))
        .collect();

    let open = wire.recv(Tag::EqOpen)?;
    let mut r = Reader::new(&open);
    expect_count(r.len()?, n)?;
    let mut failure = None;
    for (i, t) in transcripts.iter_mut().enumerate() {
        let s0 = r.bits_of(lambda_pqs)?;
        let s1 = r.bits_of(lambda_pqs)?;
        if let Err(stage) = t.open_pair(&s0, &s1, Stage::ChallengeCheck) {
            failure.get_or_insert(Abort::at_index(stage, i));
        }
    }
    r.finish()?;
    if let Some(a) = failure {
        return Err(wire.abort(a));
    }

    let masks = read_bits(&wire.recv(Tag::EqMask)?, n)?;
    for (t, e) in transcripts.iter_mut().zip(masks.iter()) {
        t.e = Some(e);
    }
    Ok(transcripts)
}

pub fn eq_decommit_send(wire: &mut Wire, tag: Tag, openings: &[EqOpening]) -> Result<(), Error> {
    wire.send(tag, write_openings(openings))
}

/// Verifies openings for the `expected` indices, in order, and returns the
/// opened bits.
pub fn eq_decommit_recv(
    wire: &mut Wire,
    tag: Tag,
    transcripts: &mut [EqCommitTranscript],
    expected: &[usize],
    lambda_pqs: usize,
) -> Result<Vec<bool>, Error> {
    let openings = read_openings(&wire.recv(tag)?, expected, lambda_pqs)?;
    let mut bits = Vec::with_capacity(openings.len());
    for o in &openings {
        let t = transcripts
            .get_mut(o.index)
            .ok_or_else(|| malformed(format!("opening index {} out of range", o.index)))?;
        if let Err(stage) = t.verify_opening(o.bit, o.delta, o.seed.bits()) {
            return Err(wire.abort(Abort::at_index(stage, o.index)));
        }
        bits.push(o.bit);
    }
    Ok(bits)
}
