//! Quantum oblivious transfer from BB84 states.
//!
//! The crate simulates the quantum channel classically and implements the
//! classical layers on top of it: Naor commitments, the equivocal
//! `EqCommitment`, the equivocal and relaxed-extractable ERE-Commitment, the
//! OT protocol with syndrome error correction, and the concrete security
//! bounds used to size everything.

pub mod adversary;
pub mod bb84;
pub mod bits;
pub mod channel;
pub mod commit;
pub mod ecc;
pub mod error;
pub mod ot;
pub mod primitives;
pub mod rng;
pub mod secparams;
pub mod stats;
pub mod transport;

pub use bits::BitString;
pub use error::{Abort, Error, Stage, TransportError};
pub use rng::{Rng, Seed};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/ot.md")]
    mod ot {}
    #[doc = include_str!("../../../book/src/primitives.md")]
    mod primitives {}
    #[doc = include_str!("../../../book/src/parameters.md")]
    mod parameters {}
    #[doc = include_str!("../../../book/src/testing.md")]
    mod testing {}
}
