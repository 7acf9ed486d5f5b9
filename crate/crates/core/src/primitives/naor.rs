use crate::bits::BitString;
use crate::error::check_len;
use crate::Error;

use super::prg::prg_expand;

/// A Naor commitment as seen by the receiver: the `3λ`-bit key it chose and the
/// committer's `3λ`-bit payload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NaorCommitment {
    pub key: BitString,
    pub payload: BitString,
}

impl NaorCommitment {
    pub fn verify(&self, bit: bool, randomness: &BitString) -> bool {
        naor_verify(&self.key, &self.payload, bit, randomness)
    }

    pub fn open(&self, randomness: &BitString) -> Option<bool> {
        naor_open(&self.key, &self.payload, randomness)
    }
}

/// `(b · k) XOR W(r)` with `W` the PRG stretched to `3|r|` bits.
pub fn naor_commit(key: &BitString, bit: bool, randomness: &BitString) -> Result<BitString, Error> {
    if randomness.is_empty() {
        return Err(Error::Domain("Naor randomness must be nonempty".into()));
    }
    check_len(3 * randomness.len(), key.len())?;
    let mut payload = prg_expand(randomness, key.len())?;
    if bit {
        payload.xor_assign(key);
    }
    Ok(payload)
}

pub fn naor_verify(key: &BitString, payload: &BitString, bit: bool, randomness: &BitString) -> bool {
    if randomness.is_empty() || key.len() != 3 * randomness.len() || payload.len() != key.len() {
        return false;
    }
    match naor_commit(key, bit, randomness) {
        Ok(expected) => &expected == payload,
        Err(_) => false,
    }
}

/// The bit a payload opens to under `randomness`, if any. With the all-zero key
/// both bits verify and 0 is reported.
pub fn naor_open(key: &BitString, payload: &BitString, randomness: &BitString) -> Option<bool> {
    if randomness.is_empty() || key.len() != 3 * randomness.len() || payload.len() != key.len() {
        return None;
    }
    let mut diff = prg_expand(randomness, key.len()).ok()?;
    diff.xor_assign(payload);
    if diff.is_zero() {
        Some(false)
    } else if &diff == key {
        Some(true)
    } else {
        None
    }
}
