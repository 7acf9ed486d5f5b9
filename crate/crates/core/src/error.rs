use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Where a protocol run stopped. Every abort symbol in the commitment and OT
/// algorithms maps to one of these, and the code travels in ABORT frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    ParamsMismatch,
    /// EqCommitment: the challenged pair opened to different values.
    ChallengeCheck,
    /// A commitment failed to open (Naor payload mismatch or bad opening).
    Decommit,
    /// ERE: matched-basis error rate on the challenged set exceeded the threshold.
    Bb84Check,
    /// ERE: a revealed seed family is not the PRG expansion of its hashed key.
    PrgCheck,
    /// ERE: a challenged family opened two commitments of one pair differently.
    DecommitEquality,
    /// ERE: revealed key bits disagree with the receiver's measurements.
    ErrorRate,
    /// OT: Alice's matched-basis check on the challenged set failed.
    OtCheck,
    /// A valid Naor opening whose value differs from `b XOR e`.
    MaskCheck,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::ParamsMismatch,
        Stage::ChallengeCheck,
        Stage::Decommit,
        Stage::Bb84Check,
        Stage::PrgCheck,
        Stage::DecommitEquality,
        Stage::ErrorRate,
        Stage::OtCheck,
        Stage::MaskCheck,
    ];

    pub fn code(self) -> u8 {
        Stage::ALL.iter().position(|s| *s == self).unwrap() as u8 + 1
    }

    pub fn from_code(code: u8) -> Option<Stage> {
        Stage::ALL.get((code as usize).checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::ParamsMismatch => "params-mismatch",
            Stage::ChallengeCheck => "challenge-check",
            Stage::Decommit => "decommit",
            Stage::Bb84Check => "bb84-check",
            Stage::PrgCheck => "prg-check",
            Stage::DecommitEquality => "decommit-equality",
            Stage::ErrorRate => "error-rate",
            Stage::OtCheck => "ot-check",
            Stage::MaskCheck => "mask-check",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abort {
    pub stage: Stage,
    pub index: Option<usize>,
}

impl Abort {
    pub fn at(stage: Stage) -> Self {
        Abort { stage, index: None }
    }

    pub fn at_index(stage: Stage, index: usize) -> Self {
        Abort {
            stage,
            index: Some(index),
        }
    }
}

impl fmt::Display for Abort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "abort at {} (index {i})", self.stage),
            None => write!(f, "abort at {}", self.stage),
        }
    }
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("truncated frame: needed {needed} bytes, had {available}")]
    Truncated { needed: usize, available: usize },
    #[error("unknown message tag 0x{0:02x}")]
    UnknownTag(u8),
    #[error("payload of {0} bytes exceeds the frame limit")]
    Oversize(usize),
    #[error("peer disconnected")]
    Disconnected,
    #[error("expected {expected} frame, got {got}")]
    Unexpected { expected: &'static str, got: &'static str },
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("length mismatch: expected {expected} bits, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("{0}")]
    Abort(Abort),
    #[error("peer sent {0}")]
    PeerAbort(Abort),
    #[error("no parameters in the search box meet the target: {0}")]
    Infeasible(String),
    #[error("not enough indices for {n_ot} blocks of {block}: matched {matched}, mismatched {mismatched}")]
    InsufficientIndices {
        n_ot: usize,
        block: usize,
        matched: usize,
        mismatched: usize,
    },
    #[error(transparent)]
    Transport(#[from] TransportError),
}

impl Error {
    pub fn abort_stage(&self) -> Option<Stage> {
        match self {
            Error::Abort(a) | Error::PeerAbort(a) => Some(a.stage),
            _ => None,
        }
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<(), Error> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Length { expected, actual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_codes_roundtrip() {
        for s in Stage::ALL {
            assert_eq!(Stage::from_code(s.code()), Some(s));
        }
        assert_eq!(Stage::from_code(0), None);
        assert_eq!(Stage::from_code(200), None);
    }
}
