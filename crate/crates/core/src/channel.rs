//! Classical simulation of a BB84 prepare-and-measure link.
//!
//! Preparation draws uniform bits and bases. The channel only marks instances
//! as lost or multiphoton; bit-flip noise is applied when a matched-basis
//! measurement happens, so the observed error rate on matched positions is
//! exactly `alpha`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{Rng, Seed};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Rectilinear,
    Diagonal,
}

impl Basis {
    pub fn from_bit(b: bool) -> Self {
        if b {
            Basis::Diagonal
        } else {
            Basis::Rectilinear
        }
    }

    pub fn bit(self) -> bool {
        matches!(self, Basis::Diagonal)
    }

    pub fn random(rng: &mut Rng) -> Self {
        Basis::from_bit(rng.gen())
    }
}

/// One conjugate-coding symbol in flight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bb84Instance {
    bit: bool,
    basis: Basis,
    lost: bool,
    multiphoton: bool,
}

impl Bb84Instance {
    pub fn prepare(bit: bool, basis: Basis) -> Self {
        Bb84Instance {
            bit,
            basis,
            lost: false,
            multiphoton: false,
        }
    }

    pub fn lost(&self) -> bool {
        self.lost
    }

    /// Whether a copy leaked. Only adversary tooling looks at this.
    pub fn multiphoton(&self) -> bool {
        self.multiphoton
    }

    /// Encoded bit and basis, as known to the preparer.
    pub fn preparation(&self) -> (bool, Basis) {
        (self.bit, self.basis)
    }

    /// `bit | basis << 1 | lost << 2 | multiphoton << 3`.
    pub fn to_byte(&self) -> u8 {
        self.bit as u8
            | (self.basis.bit() as u8) << 1
            | (self.lost as u8) << 2
            | (self.multiphoton as u8) << 3
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        if b & 0xF0 != 0 {
            return None;
        }
        Some(Bb84Instance {
            bit: b & 1 == 1,
            basis: Basis::from_bit(b & 2 == 2),
            lost: b & 4 == 4,
            multiphoton: b & 8 == 8,
        })
    }
}

pub fn encode_batch(batch: &[Bb84Instance]) -> Vec<u8> {
    batch.iter().map(Bb84Instance::to_byte).collect()
}

pub fn decode_batch(bytes: &[u8]) -> Option<Vec<Bb84Instance>> {
    bytes.iter().map(|&b| Bb84Instance::from_byte(b)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Bit-flip probability on matched-basis measurement.
    pub alpha: f64,
    pub loss_prob: f64,
    /// Per-instance multiphoton probability.
    pub vartheta: f64,
    pub rng_seed: Seed,
}

impl ChannelModel {
    pub fn new(alpha: f64, loss_prob: f64, vartheta: f64, rng_seed: Seed) -> Result<Self, Error> {
        let model = ChannelModel {
            alpha,
            loss_prob,
            vartheta,
            rng_seed,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn noiseless(rng_seed: Seed) -> Self {
        ChannelModel {
            alpha: 0.0,
            loss_prob: 0.0,
            vartheta: 0.0,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(0.0..0.5).contains(&self.alpha) {
            return Err(Error::Domain(format!("alpha {} outside [0, 0.5)", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.loss_prob) && self.loss_prob != 1.0 {
            return Err(Error::Domain(format!("loss_prob {} outside [0, 1]", self.loss_prob)));
        }
        if !(0.0..1.0).contains(&self.vartheta) {
            return Err(Error::Domain(format!("vartheta {} outside [0, 1)", self.vartheta)));
        }
        Ok(())
    }

    /// The sampling-lemma precondition `alpha + delta <= 1/2`.
    pub fn admits_slack(&self, delta: f64) -> bool {
        self.alpha + delta <= 0.5
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measurement {
    Bit(bool),
    Lost,
}

pub fn prepare_batch(n: usize, rng: &mut Rng) -> Result<Vec<Bb84Instance>, Error> {
    if n == 0 {
        return Err(Error::Domain("prepare_batch needs n >= 1".into()));
    }
    Ok((0..n)
        .map(|_| {
            let bit = rng.gen();
            Bb84Instance::prepare(bit, Basis::random(rng))
        })
        .collect())
}

pub fn transmit(
    batch: &[Bb84Instance],
    model: &ChannelModel,
    rng: &mut Rng,
) -> Result<Vec<Bb84Instance>, Error> {
    if batch.is_empty() {
        return Err(Error::Domain("transmit needs a nonempty batch".into()));
    }
    Ok(batch
        .iter()
        .map(|inst| {
            let lost = rng.gen_bool(model.loss_prob);
            let multiphoton = rng.gen_bool(model.vartheta);
            Bb84Instance {
                lost,
                multiphoton,
                ..*inst
            }
        })
        .collect())
}

pub fn measure(inst: &Bb84Instance, basis: Basis, model: &ChannelModel, rng: &mut Rng) -> Measurement {
    // Both draws happen unconditionally so the stream position does not depend
    // on the outcome.
    let flip = rng.gen_bool(model.alpha);
    let coin: bool = rng.gen();
    if inst.lost {
        Measurement::Lost
    } else if basis == inst.basis {
        Measurement::Bit(inst.bit ^ flip)
    } else {
        Measurement::Bit(coin)
    }
}
