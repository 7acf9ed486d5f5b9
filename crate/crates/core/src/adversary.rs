//! Cheating parties for Monte-Carlo attack estimates.
//!
//! Each strategy deviates only in the step it names. Success means the
//! cheater went undetected and, for equivocation, can still open both ways.

use std::collections::BTreeSet;
use std::thread;

use rand::Rng as _;
use serde::Serialize;

use crate::bb84::MeasurePolicy;
use crate::bits::BitString;
use crate::channel::{measure, Basis, Bb84Instance, ChannelModel, Measurement};
use crate::commit::eq::{eq_commit_recv, eq_commit_send, EqCommitter, EqSeedQuad};
use crate::commit::ere::{ere_commit_committer, ere_commit_receiver, EreCheat, EreParams};
use crate::error::{Error, Stage};
use crate::ot::{run_ot_with, Carrier, Choice, OtParams, RunSeeds};
use crate::rng::{Rng, Seed};
use crate::stats::Frequency;
use crate::transport::Wire;

/// EqCommitment instances per binding-attack session.
pub const BINDING_INSTANCES: usize = 8;

/// Naor security parameter used by the attack sessions.
pub const ATTACK_LAMBDA: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryStrategy {
    /// Committer commits `(u, 1 - u)` in a guessed pair for `t` instances.
    EquivocateEq { t: usize },
    /// Seeds of `count` families, in distinct sessions, are not PRG outputs.
    FakeSeedFamily { count: usize },
    /// Bob guesses instead of measuring on a random `fraction` of states.
    SkipMeasurementOn { fraction: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub strategy: AdversaryStrategy,
    /// Trials in which the cheater went undetected.
    pub success: Frequency,
    /// Success probability predicted by the challenge-guessing argument.
    pub expected: Option<f64>,
}

impl AttackReport {
    pub fn within_3sigma(&self) -> Option<bool> {
        self.expected.map(|p| self.success.within(p, 3.0))
    }
}

pub fn run_attack(strategy: &AdversaryStrategy, trials: u64, seed: Seed) -> Result<AttackReport, Error> {
    let (success, expected) = match *strategy {
        AdversaryStrategy::EquivocateEq { t } => (attack_binding(t, trials, seed)?, Some(0.5f64.powi(t as i32))),
        AdversaryStrategy::FakeSeedFamily { count } => {
            let caught = fake_seed_family(count, trials, seed)?;
            (Frequency::new(trials - caught.hits, trials), Some(0.5f64.powi(count as i32)))
        }
        AdversaryStrategy::SkipMeasurementOn { fraction } => (skip_measurement(fraction, trials, seed)?, None),
    };
    Ok(AttackReport {
        strategy: strategy.clone(),
        success,
        expected,
    })
}

/// Fraction of sessions in which a committer equivocating in `t` of
/// [`BINDING_INSTANCES`] instances passes the challenge and can open every
/// equivocal instance to both bits.
pub fn attack_binding(t: usize, trials: u64, seed: Seed) -> Result<Frequency, Error> {
    if t > BINDING_INSTANCES {
        return Err(Error::Domain(format!("t = {t} exceeds {BINDING_INSTANCES} instances")));
    }
    let hits = (0..trials)
        .filter(|&i| binding_trial(t, seed.derive_indexed("binding", i)))
        .count() as u64;
    Ok(Frequency::new(hits, trials))
}

fn binding_trial(t: usize, seed: Seed) -> bool {
    let mut rng = seed.rng_for("committer");
    let committers: Vec<EqCommitter> = (0..BINDING_INSTANCES)
        .map(|i| {
            let seeds = EqSeedQuad::random(ATTACK_LAMBDA, &mut rng);
            if i < t {
                EqCommitter::equivocating(rng.gen(), seeds, &mut rng)
            } else {
                EqCommitter::honest(rng.gen(), seeds, &mut rng)
            }
        })
        .collect();
    let (mut a, mut b) = Wire::loopback_pair();
    let handle = thread::spawn(move || {
        let mut cs = committers;
        eq_commit_send(&mut a, &mut cs).map(|_| cs)
    });
    let received = eq_commit_recv(&mut b, BINDING_INSTANCES, ATTACK_LAMBDA, &mut seed.rng_for("receiver"));
    drop(b);
    let sent = handle.join().expect("committer thread panicked");
    let (Ok(cs), Ok(ts)) = (sent, received) else {
        return false;
    };
    cs.iter().zip(&ts).take(t).all(|(c, tr)| {
        [false, true].into_iter().all(|bit| {
            [false, true].into_iter().any(|delta| {
                c.opening(0, bit, delta)
                    .is_some_and(|o| tr.clone().verify_opening(bit, delta, o.seed.bits()).is_ok())
            })
        })
    })
}

/// ERE sizes small enough for thousands of sessions: four sessions of
/// three instances.
pub fn attack_ere_params() -> EreParams {
    EreParams {
        lambda_ex: 64,
        m: 16,
        w: 3,
        lambda_pqs: ATTACK_LAMBDA,
        alpha: 0.0,
        delta: 0.25,
        delta_pair: 0.45,
    }
}

/// Fraction of ERE runs whose receiver aborts at the PRG check when
/// families `0, 2, …, 2(count-1)` carry random seeds.
pub fn fake_seed_family(count: usize, trials: u64, seed: Seed) -> Result<Frequency, Error> {
    let params = attack_ere_params();
    if count == 0 || count > params.k() {
        return Err(Error::Domain(format!("fake family count must lie in 1..={}", params.k())));
    }
    let cheat = EreCheat {
        fake_families: (0..count).map(|c| 2 * c).collect(),
    };
    let mut caught = 0;
    for i in 0..trials {
        let s = seed.derive_indexed("fake-family", i);
        let model = ChannelModel::noiseless(s.derive("channel"));
        let (mut a, mut b) = Wire::loopback_pair();
        let cheat = cheat.clone();
        let handle = thread::spawn(move || {
            ere_commit_committer(&mut a, &params, &model, &[], &cheat, &mut s.rng_for("committer")).map(|_| ())
        });
        let r = ere_commit_receiver(&mut b, &params, &model, &mut s.rng_for("receiver"));
        drop(b);
        let _ = handle.join().expect("committer thread panicked");
        match r {
            Err(e) if e.abort_stage() == Some(Stage::PrgCheck) => caught += 1,
            Err(e) => return Err(e),
            Ok(_) => {}
        }
    }
    Ok(Frequency::new(caught, trials))
}

/// Bob outputs a uniform guess instead of measuring on `positions`.
pub struct SkipOn {
    pub positions: BTreeSet<usize>,
}

impl MeasurePolicy for SkipOn {
    fn measure(&mut self, index: usize, state: &Bb84Instance, model: &ChannelModel, noise: &mut Rng, rng: &mut Rng) -> (bool, Basis) {
        let basis = Basis::random(rng);
        if self.positions.contains(&index) {
            return (rng.gen(), basis);
        }
        match measure(state, basis, model, noise) {
            Measurement::Bit(b) => (b, basis),
            Measurement::Lost => unreachable!("lost states are filtered before measurement"),
        }
    }
}

/// Fraction of toy OT runs (`λ_OT = 128`, noiseless) that survive Alice's
/// check when Bob skips a random `fraction` of his measurements.
pub fn skip_measurement(fraction: f64, trials: u64, seed: Seed) -> Result<Frequency, Error> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Domain(format!("fraction {fraction} outside [0, 1]")));
    }
    let params = OtParams::toy(128, 0.0);
    let model = ChannelModel::noiseless(seed);
    let mut passed = 0;
    for i in 0..trials {
        let s = seed.derive_indexed("skip", i);
        let mut rng = s.rng_for("positions");
        let positions = (0..2 * params.lambda_ot).filter(|_| rng.gen_bool(fraction)).collect();
        let messages = vec![[BitString::random(params.message_len, &mut rng), BitString::random(params.message_len, &mut rng)]];
        let r = run_ot_with(
            messages,
            Choice::Single(rng.gen()),
            &params,
            &model,
            RunSeeds::from_master(s),
            Carrier::Loopback,
            Box::new(SkipOn { positions }),
        )?;
        match r.abort_stage() {
            None => passed += 1,
            Some(Stage::OtCheck) => {}
            Some(_) => return Err(r.alice.err().or(r.bob.err()).expect("an aborted side")),
        }
    }
    Ok(Frequency::new(passed, trials))
}
