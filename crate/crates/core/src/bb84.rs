//! BB84 batches carried as frames.
//!
//! The preparer pushes states through the simulated channel and sends them;
//! the measurer reports which arrived. Lost positions are replaced until the
//! requested count has arrived, so both sides index the same survivors.

use crate::bits::BitString;
use crate::channel::{decode_batch, encode_batch, measure, prepare_batch, transmit, Basis, Bb84Instance, ChannelModel, Measurement};
use crate::commit::eq::read_bits;
use crate::error::{Error, TransportError};
use crate::rng::Rng;
use crate::transport::{Tag, Wire, Writer};

const MAX_ROUNDS: usize = 256;

/// Preparer-side view of the surviving states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prepared {
    pub states: Vec<Bb84Instance>,
}

impl Prepared {
    pub fn bits(&self) -> BitString {
        self.states.iter().map(|s| s.preparation().0).collect()
    }

    pub fn bases(&self) -> Vec<Basis> {
        self.states.iter().map(|s| s.preparation().1).collect()
    }
}

/// Measurer-side outcome over the surviving states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Measured {
    pub bits: BitString,
    pub bases: Vec<Basis>,
}

/// How a measurer treats the `i`-th arriving state. Honest parties always
/// pick a uniform basis.
pub trait MeasurePolicy {
    fn measure(&mut self, index: usize, state: &Bb84Instance, model: &ChannelModel, noise: &mut Rng, rng: &mut Rng) -> (bool, Basis);
}

pub struct Honest;

impl MeasurePolicy for Honest {
    fn measure(&mut self, _: usize, state: &Bb84Instance, model: &ChannelModel, noise: &mut Rng, rng: &mut Rng) -> (bool, Basis) {
        let basis = Basis::random(rng);
        match measure(state, basis, model, noise) {
            Measurement::Bit(b) => (b, basis),
            Measurement::Lost => unreachable!("lost states are filtered before measurement"),
        }
    }
}

pub fn send_states(
    wire: &mut Wire,
    tag: Tag,
    needed: usize,
    model: &ChannelModel,
    label: &str,
    rng: &mut Rng,
) -> Result<Prepared, Error> {
    let mut channel = model.rng_seed.rng_for(&format!("{label}/transmit"));
    let mut states = Vec::with_capacity(needed);
    for _ in 0..MAX_ROUNDS {
        if states.len() == needed {
            return Ok(Prepared { states });
        }
        let batch = transmit(&prepare_batch(needed - states.len(), rng)?, model, &mut channel)?;
        wire.send(tag, encode_batch(&batch))?;
        let arrived = read_bits(&wire.recv(Tag::LossReport)?, batch.len())?;
        states.extend(batch.iter().zip(arrived.iter()).filter(|(_, a)| *a).map(|(s, _)| *s));
    }
    Err(Error::Domain(format!("fewer than {needed} states arrived after {MAX_ROUNDS} rounds")))
}

pub fn receive_states(
    wire: &mut Wire,
    tag: Tag,
    needed: usize,
    model: &ChannelModel,
    label: &str,
    policy: &mut dyn MeasurePolicy,
    rng: &mut Rng,
) -> Result<Measured, Error> {
    let mut noise = model.rng_seed.rng_for(&format!("{label}/measure"));
    let mut out = Measured {
        bits: BitString::zeros(0),
        bases: Vec::with_capacity(needed),
    };
    for _ in 0..MAX_ROUNDS {
        if out.bases.len() == needed {
            return Ok(out);
        }
        let batch = decode_batch(&wire.recv(tag)?)
            .ok_or_else(|| TransportError::Malformed("bad BB84 record".into()))?;
        if batch.is_empty() || batch.len() > needed - out.bases.len() {
            return Err(TransportError::Malformed(format!("BB84 batch of {} states", batch.len())).into());
        }
        let arrived: BitString = batch.iter().map(|s| !s.lost()).collect();
        wire.send(Tag::LossReport, Writer::new().bits(&arrived).finish())?;
        for s in batch.iter().filter(|s| !s.lost()) {
            let (bit, basis) = policy.measure(out.bases.len(), s, model, &mut noise, rng);
            out.bits.push(bit);
            out.bases.push(basis);
        }
    }
    Err(Error::Domain(format!("fewer than {needed} states arrived after {MAX_ROUNDS} rounds")))
}

/// Counts disagreements on positions where the bases match.
pub fn matched_errors(
    positions: &[usize],
    bits: &BitString,
    bases: &[Basis],
    hat_bits: &BitString,
    hat_bases: &[Basis],
) -> (usize, usize) {
    positions
        .iter()
        .filter(|&&i| bases[i] == hat_bases[i])
        .fold((0, 0), |(err, n), &i| (err + (bits.get(i) != hat_bits.get(i)) as usize, n + 1))
}

/// The matched-basis test: the error fraction may exceed `alpha` by at most
/// the sampling slack `delta`.
pub fn within_error_rate(errors: usize, tested: usize, alpha: f64, delta: f64) -> bool {
    errors as f64 <= (alpha + delta) * tested as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;
    use std::thread;

    fn exchange(model: ChannelModel, n: usize) -> (Prepared, Measured, [u8; 32]) {
        let (mut a, mut b) = Wire::loopback_pair();
        let t = thread::spawn(move || {
            let p = send_states(&mut a, Tag::OtBb84Batch, n, &model, "t", &mut Seed::from_u64(1).rng()).unwrap();
            (p, a.transcript_digest())
        });
        let m = receive_states(&mut b, Tag::OtBb84Batch, n, &model, "t", &mut Honest, &mut Seed::from_u64(2).rng()).unwrap();
        let (p, d) = t.join().unwrap();
        assert_eq!(d, b.transcript_digest());
        (p, m, d)
    }

    #[test]
    fn lossy_channel_delivers_requested_count() {
        let model = ChannelModel::new(0.0, 0.3, 0.0, Seed::from_u64(9)).unwrap();
        let (p, m, _) = exchange(model, 1000);
        assert_eq!(p.states.len(), 1000);
        assert!(p.states.iter().all(|s| !s.lost()));
        let all: Vec<usize> = (0..1000).collect();
        let (err, tested) = matched_errors(&all, &p.bits(), &p.bases(), &m.bits, &m.bases);
        assert_eq!(err, 0);
        assert!(tested > 400 && tested < 600);
    }

    #[test]
    fn replay_is_deterministic() {
        let model = ChannelModel::new(0.05, 0.1, 0.01, Seed::from_u64(4)).unwrap();
        let (p1, m1, d1) = exchange(model, 300);
        let (p2, m2, d2) = exchange(model, 300);
        assert_eq!((p1, m1, d1), (p2, m2, d2));
    }

    #[test]
    fn total_loss_gives_up() {
        let model = ChannelModel::new(0.0, 1.0, 0.0, Seed::from_u64(4)).unwrap();
        let (mut a, mut b) = Wire::loopback_pair();
        let t = thread::spawn(move || send_states(&mut a, Tag::OtBb84Batch, 10, &model, "t", &mut Seed::from_u64(1).rng()));
        let r = receive_states(&mut b, Tag::OtBb84Batch, 10, &model, "t", &mut Honest, &mut Seed::from_u64(2).rng());
        assert!(r.is_err());
        assert!(t.join().unwrap().is_err());
    }

    #[test]
    fn threshold_includes_slack() {
        assert!(within_error_rate(6, 100, 0.006, 0.06));
        assert!(!within_error_rate(7, 100, 0.006, 0.06));
        assert!(within_error_rate(0, 0, 0.0, 0.0));
    }
}
