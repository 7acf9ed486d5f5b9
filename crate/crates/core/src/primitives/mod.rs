//! Classical building blocks: SHAKE-256 expansion, Toeplitz hashing and
//! Naor's bit commitment.

mod naor;
mod prg;
mod toeplitz;

pub use naor::{naor_commit, naor_open, naor_verify, NaorCommitment};
pub use prg::{prg_expand, split_seeds, PrgSeed, DEFAULT_LAMBDA_PQS};
pub use toeplitz::{universal_hash, ToeplitzSeed};
