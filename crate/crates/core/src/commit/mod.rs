//! Commitment layers built on Naor's scheme.

pub mod eq;
pub mod ere;

pub use eq::{eq_commit_recv, eq_commit_send, eq_decommit_recv, eq_decommit_send, EqCommitTranscript, EqCommitter, EqOpening, EqSeedQuad};
pub use ere::{
    ere_commit_committer, ere_commit_receiver, ere_commit_receiver_with, sample_subset, seed_slots, EreCheat,
    EreCommitterSession, EreParams, EreReceiverSession, FamilyMeta, SeedFamily,
};
