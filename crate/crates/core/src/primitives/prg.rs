use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake256;

use crate::bits::BitString;
use crate::rng::Rng;
use crate::Error;

pub const DEFAULT_LAMBDA_PQS: usize = 256;

/// A PRG seed of exactly `lambda_pqs` bits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrgSeed(BitString);

impl PrgSeed {
    pub fn new(bits: BitString, lambda_pqs: usize) -> Result<Self, Error> {
        crate::error::check_len(lambda_pqs, bits.len())?;
        Ok(PrgSeed(bits))
    }

    pub fn random(lambda_pqs: usize, rng: &mut Rng) -> Self {
        PrgSeed(BitString::random(lambda_pqs, rng))
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn expand(&self, out_len: usize) -> Result<BitString, Error> {
        prg_expand(&self.0, out_len)
    }
}

/// SHAKE-256 in XOF mode over the MSB-first packed seed, truncated to
/// `out_len` bits. Outputs for the same seed are prefixes of one another.
pub fn prg_expand(seed: &BitString, out_len: usize) -> Result<BitString, Error> {
    if out_len == 0 {
        return Err(Error::Domain("prg_expand output length must be >= 1".into()));
    }
    let mut xof = Shake256::default();
    xof.update(&seed.to_bytes());
    let mut reader = xof.finalize_xof();
    let mut out = vec![0u8; out_len.div_ceil(8)];
    reader.read(&mut out);
    Ok(BitString::from_bytes_truncated(&out, out_len))
}

/// Splits an expansion into consecutive seeds of `seed_len` bits.
pub fn split_seeds(expanded: &BitString, seed_len: usize) -> Vec<PrgSeed> {
    assert!(seed_len > 0 && expanded.len() % seed_len == 0);
    (0..expanded.len() / seed_len)
        .map(|i| PrgSeed(expanded.slice(i * seed_len, seed_len)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    #[test]
    fn prefix_consistency() {
        let seed = BitString::random(256, &mut Seed::from_u64(1).rng());
        let short = prg_expand(&seed, 8).unwrap();
        let long = prg_expand(&seed, 16).unwrap();
        assert_eq!(long.slice(0, 8), short);
        let odd = prg_expand(&seed, 1001).unwrap();
        assert_eq!(prg_expand(&seed, 5000).unwrap().slice(0, 1001), odd);
    }

    #[test]
    fn zero_length_rejected() {
        assert!(prg_expand(&BitString::zeros(256), 0).is_err());
    }

    #[test]
    fn seed_length_enforced() {
        assert!(PrgSeed::new(BitString::zeros(255), 256).is_err());
        assert!(PrgSeed::new(BitString::zeros(256), 256).is_ok());
    }

    // Digests computed independently with Python's hashlib.shake_256.
    #[test]
    fn shake256_vectors() {
        let out = prg_expand(&BitString::zeros(0), 256).unwrap();
        assert_eq!(
            hex::encode(out.to_bytes()),
            "46b9dd2b0ba88d13233b3feb743eeb243fcd52ea62b81b82b50c27646ed5762f"
        );
        let abc = BitString::from_bytes(b"abc", 24).unwrap();
        assert_eq!(
            hex::encode(prg_expand(&abc, 128).unwrap().to_bytes()),
            "483366601360a8771c6863080cc4114d"
        );
    }

    #[test]
    fn split_is_sequential() {
        let expanded = prg_expand(&BitString::zeros(256), 4 * 256).unwrap();
        let seeds = split_seeds(&expanded, 256);
        assert_eq!(seeds.len(), 4);
        assert_eq!(seeds[2].bits(), &expanded.slice(512, 256));
    }
}
