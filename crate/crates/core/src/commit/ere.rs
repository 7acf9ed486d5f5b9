//! ERE-Commitment: BB84-derived seed families feeding `k` sessions of `w`
//! parallel EqCommitments.
//!
//! The committer sends `4λ_EX` states; the receiver measures and commits to
//! every outcome and basis with plain EqCommitments; half of them are opened
//! and tested. The untested positions are cut into `2k` blocks of `m` bits,
//! each hashed and expanded into `2w` seeds. Session `r` draws its four seeds
//! per instance from families `2r` and `2r + 1`, and the receiver's challenge
//! `γ_r` reveals one whole family for checking.

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::bb84::{matched_errors, receive_states, send_states, within_error_rate, Honest, Measured, MeasurePolicy, Prepared};
use crate::bits::BitString;
use crate::channel::{Basis, ChannelModel};
use crate::ecc::{build_code, default_syndrome_len, syndrome};
use crate::error::{Abort, Error, Stage};
use crate::primitives::{prg_expand, split_seeds, universal_hash, PrgSeed, ToeplitzSeed};
use crate::rng::{Rng, Seed};
use crate::transport::{Reader, Tag, Wire, Writer};

use super::eq::{
    eq_commit_recv, eq_commit_send, eq_decommit_recv, eq_decommit_send, expect_count, malformed, read_bits,
    read_keys, read_openings, read_payloads, write_keys, write_openings, write_payloads, EqCommitTranscript,
    EqCommitter, EqOpening, EqSeedQuad,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EreParams {
    pub lambda_ex: usize,
    /// Bits per seed family.
    pub m: usize,
    /// Parallel EqCommitments per session.
    pub w: usize,
    pub lambda_pqs: usize,
    pub alpha: f64,
    /// Slack on the challenged-set test.
    pub delta: f64,
    /// Slack on the per-family test when a family is revealed.
    pub delta_pair: f64,
}

impl EreParams {
    pub fn k(&self) -> usize {
        self.lambda_ex / self.m.max(1)
    }

    pub fn slots(&self) -> usize {
        self.w * self.k()
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.m == 0 || self.w == 0 || self.lambda_pqs == 0 || self.k() == 0 {
            return Err(Error::Domain(format!("degenerate ERE parameters {self:?}")));
        }
        if self.alpha + self.delta > 0.5 || self.alpha + self.delta_pair > 0.5 {
            return Err(Error::Domain("alpha + delta must stay at most 1/2".into()));
        }
        Ok(())
    }
}

/// Family and seed index behind `p[γ][δ]` of instance `q` in session `r`,
/// all zero-based: families `2r`, `2r + 1` and seeds `2q`, `2q + 1`.
pub fn seed_slots(r: usize, q: usize) -> [[(usize, usize); 2]; 2] {
    [
        [(2 * r, 2 * q), (2 * r, 2 * q + 1)],
        [(2 * r + 1, 2 * q), (2 * r + 1, 2 * q + 1)],
    ]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedFamily {
    pub j: usize,
    pub members: Vec<usize>,
    pub r: ToeplitzSeed,
    pub x_tilde: BitString,
    pub s: PrgSeed,
    pub p: Vec<PrgSeed>,
}

impl SeedFamily {
    pub fn derive(j: usize, members: Vec<usize>, r: ToeplitzSeed, x_tilde: BitString, w: usize) -> Result<Self, Error> {
        let lambda = r.output_len();
        let s = PrgSeed::new(universal_hash(&r, &x_tilde)?, lambda)?;
        let p = split_seeds(&s.expand(2 * w * lambda)?, lambda);
        Ok(SeedFamily {
            j,
            members,
            r,
            x_tilde,
            s,
            p,
        })
    }

    pub fn expansion(&self) -> BitString {
        let mut out = BitString::zeros(0);
        for p in &self.p {
            out.extend_from(p.bits());
        }
        out
    }
}

/// Deviations available to a cheating committer.
#[derive(Clone, Debug, Default)]
pub struct EreCheat {
    /// Families whose seeds are drawn at random instead of from the PRG.
    pub fake_families: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct EreCommitterSession {
    pub params: EreParams,
    pub bits: Vec<bool>,
    pub prepared: Prepared,
    pub challenge: Vec<usize>,
    pub opened: Vec<(bool, bool)>,
    pub step3: Vec<EqCommitTranscript>,
    pub families: Vec<SeedFamily>,
    pub gammas: Vec<bool>,
    /// Instance `i = r·w + q`.
    pub committers: Vec<EqCommitter>,
}

#[derive(Clone, Debug)]
pub struct FamilyMeta {
    pub members: Vec<usize>,
    pub r: ToeplitzSeed,
    pub syndrome: BitString,
}

#[derive(Clone, Debug)]
pub struct EreReceiverSession {
    pub params: EreParams,
    pub measured: Measured,
    pub step3: Vec<EqCommitter>,
    pub challenge: Vec<usize>,
    pub theta: Vec<Basis>,
    pub code_seed: Seed,
    pub families: Vec<FamilyMeta>,
    pub gammas: Vec<bool>,
    pub transcripts: Vec<EqCommitTranscript>,
}

fn complement(universe: usize, set: &[usize]) -> Vec<usize> {
    let mut mark = vec![false; universe];
    for &i in set {
        mark[i] = true;
    }
    (0..universe).filter(|&i| !mark[i]).collect()
}

/// Uniform `size`-subset of `0..universe`, ascending.
pub fn sample_subset(universe: usize, size: usize, rng: &mut Rng) -> Vec<usize> {
    let mut v = sample(rng, universe, size).into_vec();
    v.sort_unstable();
    v
}

fn basis_bits(bases: &[Basis]) -> BitString {
    bases.iter().map(|b| b.bit()).collect()
}

fn read_indices_exact(payload: &[u8]) -> Result<Vec<usize>, Error> {
    let mut r = Reader::new(payload);
    let v = r.indices()?;
    r.finish()?;
    Ok(v)
}

/// Checks a challenge set: `size` distinct ascending indices below `universe`.
pub(crate) fn validate_subset(set: &[usize], universe: usize, size: usize) -> Result<(), Error> {
    if set.len() != size || set.windows(2).any(|w| w[0] >= w[1]) || set.last().is_some_and(|&i| i >= universe) {
        return Err(malformed(format!("challenge set is not {size} ascending indices below {universe}")));
    }
    Ok(())
}

/// Committer side. `bits` may be shorter than `w·k`; the remaining slots
/// commit to random bits.
pub fn ere_commit_committer(
    wire: &mut Wire,
    params: &EreParams,
    model: &ChannelModel,
    bits: &[bool],
    cheat: &EreCheat,
    rng: &mut Rng,
) -> Result<EreCommitterSession, Error> {
    params.validate()?;
    let (lex, m, w, k, lambda) = (params.lambda_ex, params.m, params.w, params.k(), params.lambda_pqs);
    if bits.len() > params.slots() {
        return Err(Error::Domain(format!("{} bits exceed {} slots", bits.len(), params.slots())));
    }
    let mut all_bits = bits.to_vec();
    all_bits.extend((bits.len()..params.slots()).map(|_| rng.gen::<bool>()));

    let prepared = send_states(wire, Tag::EreBb84Batch, 4 * lex, model, "ere", rng)?;
    let (x, theta) = (prepared.bits(), prepared.bases());

    let mut step3 = eq_commit_recv(wire, 8 * lex, lambda, rng)?;

    let challenge = sample_subset(4 * lex, 2 * lex, rng);
    wire.send(Tag::EreChallengeSet, Writer::new().indices(&challenge).finish())?;
    let expected: Vec<usize> = challenge.iter().flat_map(|&i| [2 * i, 2 * i + 1]).collect();
    let opened_bits = eq_decommit_recv(wire, Tag::EqDecommit, &mut step3, &expected, lambda)?;
    let opened: Vec<(bool, bool)> = opened_bits.chunks(2).map(|c| (c[0], c[1])).collect();
    let mut hat_x = BitString::zeros(4 * lex);
    let mut hat_theta = vec![Basis::Rectilinear; 4 * lex];
    for (&i, &(b, t)) in challenge.iter().zip(&opened) {
        hat_x.set(i, b);
        hat_theta[i] = Basis::from_bit(t);
    }
    let (errors, tested) = matched_errors(&challenge, &x, &theta, &hat_x, &hat_theta);
    if !within_error_rate(errors, tested, params.alpha, params.delta) {
        return Err(wire.abort(Abort::at(Stage::Bb84Check)));
    }

    let rest = complement(4 * lex, &challenge);
    let code_seed = Seed(rng.gen());
    let code = build_code(m, default_syndrome_len(m), code_seed)?;
    let mut families = Vec::with_capacity(2 * k);
    let mut meta = Writer::new();
    meta.seed(&code_seed).bits(&basis_bits(&theta)).len(2 * k);
    for j in 0..2 * k {
        let members = rest[j * m..(j + 1) * m].to_vec();
        let x_tilde = x.select(&members);
        let r = ToeplitzSeed::random(m, lambda, rng);
        meta.indices(&members).bits(r.bits()).bits(&syndrome(&code, &x_tilde)?);
        let mut family = SeedFamily::derive(j, members, r, x_tilde, w)?;
        if cheat.fake_families.contains(&j) {
            family.p = (0..2 * w).map(|_| PrgSeed::random(lambda, rng)).collect();
        }
        families.push(family);
    }
    wire.send(Tag::EreFamilyMeta, meta.finish())?;

    let mut committers = Vec::with_capacity(params.slots());
    let mut gammas = Vec::with_capacity(k);
    for r in 0..k {
        let keys = read_keys(&wire.recv(Tag::NaorKey)?, w, 3 * lambda)?;
        let mut session: Vec<EqCommitter> = (0..w)
            .map(|q| {
                let s = seed_slots(r, q);
                let seed = |g: usize, d: usize| families[s[g][d].0].p[s[g][d].1].clone();
                let quad = EqSeedQuad::new(seed(0, 0), seed(0, 1), seed(1, 0), seed(1, 1));
                EqCommitter::honest(all_bits[r * w + q], quad, rng)
            })
            .collect();
        let payloads = session
            .iter()
            .zip(&keys)
            .map(|(c, key)| c.payloads(key))
            .collect::<Result<Vec<_>, _>>()?;
        wire.send(Tag::NaorPayload, write_payloads(&payloads))?;

        let gamma = read_bits(&wire.recv(Tag::ErePairChallenge)?, 1)?.get(0);
        gammas.push(gamma);
        let family = &families[2 * r + gamma as usize];
        wire.send(
            Tag::ErePairReveal,
            Writer::new().bits(&family.x_tilde).bits(&family.expansion()).finish(),
        )?;
        let masks: BitString = session.iter_mut().map(|c| c.mask(gamma)).collect();
        wire.send(Tag::ErePayloadCommit, Writer::new().bits(&masks).finish())?;
        committers.append(&mut session);
    }

    Ok(EreCommitterSession {
        params: *params,
        bits: all_bits,
        prepared,
        challenge,
        opened,
        step3,
        families,
        gammas,
        committers,
    })
}

/// Receiver side, with an honest measurement.
pub fn ere_commit_receiver(
    wire: &mut Wire,
    params: &EreParams,
    model: &ChannelModel,
    rng: &mut Rng,
) -> Result<EreReceiverSession, Error> {
    ere_commit_receiver_with(wire, params, model, &mut Honest, rng)
}

pub fn ere_commit_receiver_with(
    wire: &mut Wire,
    params: &EreParams,
    model: &ChannelModel,
    policy: &mut dyn MeasurePolicy,
    rng: &mut Rng,
) -> Result<EreReceiverSession, Error> {
    params.validate()?;
    let (lex, m, w, k, lambda) = (params.lambda_ex, params.m, params.w, params.k(), params.lambda_pqs);

    let measured = receive_states(wire, Tag::EreBb84Batch, 4 * lex, model, "ere", policy, rng)?;

    let mut step3: Vec<EqCommitter> = (0..4 * lex)
        .flat_map(|i| [measured.bits.get(i), measured.bases[i].bit()])
        .collect::<Vec<_>>()
        .into_iter()
        .map(|b| EqCommitter::honest(b, EqSeedQuad::random(lambda, rng), rng))
        .collect();
    eq_commit_send(wire, &mut step3)?;

    let challenge = read_indices_exact(&wire.recv(Tag::EreChallengeSet)?)?;
    validate_subset(&challenge, 4 * lex, 2 * lex)?;
    let openings: Vec<EqOpening> = challenge
        .iter()
        .flat_map(|&i| [2 * i, 2 * i + 1])
        .map(|i| {
            let c = &step3[i];
            c.opening(i, c.bit, rng.gen()).expect("honest instances open to their bit")
        })
        .collect();
    eq_decommit_send(wire, Tag::EqDecommit, &openings)?;

    let meta = wire.recv(Tag::EreFamilyMeta)?;
    let mut rd = Reader::new(&meta);
    let code_seed = rd.seed()?;
    let theta: Vec<Basis> = rd.bits_of(4 * lex)?.iter().map(Basis::from_bit).collect();
    expect_count(rd.len()?, 2 * k)?;
    let rest = complement(4 * lex, &challenge);
    let q_len = default_syndrome_len(m);
    let mut families = Vec::with_capacity(2 * k);
    for j in 0..2 * k {
        let members = rd.indices()?;
        if members != rest[j * m..(j + 1) * m] {
            return Err(malformed(format!("family {j} is not the expected block of unchallenged positions")));
        }
        let r = ToeplitzSeed::new(rd.bits_of(m + lambda - 1)?, m, lambda)?;
        let syndrome = rd.bits_of(q_len)?;
        families.push(FamilyMeta { members, r, syndrome });
    }
    rd.finish()?;

    let mut transcripts = Vec::with_capacity(params.slots());
    let mut gammas = Vec::with_capacity(k);
    for r in 0..k {
        let keys: Vec<BitString> = (0..w).map(|_| BitString::random(3 * lambda, rng)).collect();
        wire.send(Tag::NaorKey, write_keys(&keys))?;
        let payloads = read_payloads(&wire.recv(Tag::NaorPayload)?, w, 3 * lambda)?;
        let gamma: bool = rng.gen();
        gammas.push(gamma);
        wire.send(Tag::ErePairChallenge, Writer::new().bits(&BitString::from_bools([gamma])).finish())?;
        let mut session: Vec<EqCommitTranscript> = keys
            .into_iter()
            .zip(payloads)
            .map(|(key, c)| EqCommitTranscript::new(key, c, gamma))
            .collect();

        let reveal = wire.recv(Tag::ErePairReveal)?;
        let mut rd = Reader::new(&reveal);
        let x_tilde = rd.bits_of(m)?;
        let expansion = rd.bits_of(2 * w * lambda)?;
        rd.finish()?;
        let j = 2 * r + gamma as usize;
        let fam = &families[j];

        let (errors, tested) = matched_errors(
            &(0..m).collect::<Vec<_>>(),
            &x_tilde,
            &fam.members.iter().map(|&i| theta[i]).collect::<Vec<_>>(),
            &measured.bits.select(&fam.members),
            &fam.members.iter().map(|&i| measured.bases[i]).collect::<Vec<_>>(),
        );
        if !within_error_rate(errors, tested, params.alpha, params.delta_pair) {
            return Err(wire.abort(Abort::at_index(Stage::ErrorRate, j)));
        }
        if prg_expand(&universal_hash(&fam.r, &x_tilde)?, 2 * w * lambda)? != expansion {
            return Err(wire.abort(Abort::at_index(Stage::PrgCheck, j)));
        }
        for (q, t) in session.iter_mut().enumerate() {
            let s0 = expansion.slice(2 * q * lambda, lambda);
            let s1 = expansion.slice((2 * q + 1) * lambda, lambda);
            if let Err(stage) = t.open_pair(&s0, &s1, Stage::DecommitEquality) {
                return Err(wire.abort(Abort::at_index(stage, r * w + q)));
            }
        }

        let masks = read_bits(&wire.recv(Tag::ErePayloadCommit)?, w)?;
        for (t, e) in session.iter_mut().zip(masks.iter()) {
            t.e = Some(e);
        }
        transcripts.append(&mut session);
    }

    Ok(EreReceiverSession {
        params: *params,
        measured,
        step3,
        challenge,
        theta,
        code_seed,
        families,
        gammas,
        transcripts,
    })
}

impl EreCommitterSession {
    /// Decommitment of slot `i` with selector `delta`.
    pub fn opening(&self, i: usize, delta: bool) -> EqOpening {
        let c = &self.committers[i];
        c.opening(i, c.bit, delta).expect("honest instances open to their bit")
    }

    pub fn open(&self, wire: &mut Wire, indices: &[usize], rng: &mut Rng) -> Result<(), Error> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.committers.len()) {
            return Err(Error::Domain(format!("slot {bad} was never committed")));
        }
        let openings: Vec<EqOpening> = indices.iter().map(|&i| self.opening(i, rng.gen())).collect();
        wire.send(Tag::EreOpen, write_openings(&openings))
    }
}

impl EreReceiverSession {
    pub fn open(&mut self, wire: &mut Wire, indices: &[usize]) -> Result<Vec<bool>, Error> {
        eq_decommit_recv(wire, Tag::EreOpen, &mut self.transcripts, indices, self.params.lambda_pqs)
    }

    /// Verifies a decommitment that arrived outside a wire.
    pub fn verify(&mut self, opening: &EqOpening) -> Result<bool, Stage> {
        let t = self.transcripts.get_mut(opening.index).ok_or(Stage::Decommit)?;
        t.verify_opening(opening.bit, opening.delta, opening.seed.bits())?;
        Ok(opening.bit)
    }
}

/// Parses an ERE_OPEN payload without a wire, for audit tooling.
pub fn parse_openings(payload: &[u8], expected: &[usize], lambda_pqs: usize) -> Result<Vec<EqOpening>, Error> {
    read_openings(payload, expected, lambda_pqs)
}
