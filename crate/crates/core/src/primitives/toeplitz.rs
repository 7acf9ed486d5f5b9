use crate::bits::BitString;
use crate::rng::Rng;
use crate::Error;

/// Diagonal-constant GF(2) matrix from `m` input bits to `out_len` output bits,
/// described by its `m + out_len - 1` defining bits. Entry `(i, j)` equals
/// bit `i + m - 1 - j` of the seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToeplitzSeed {
    bits: BitString,
    input_len: usize,
    output_len: usize,
}

impl ToeplitzSeed {
    pub fn new(bits: BitString, input_len: usize, output_len: usize) -> Result<Self, Error> {
        if input_len == 0 || output_len == 0 {
            return Err(Error::Domain("Toeplitz dimensions must be positive".into()));
        }
        crate::error::check_len(input_len + output_len - 1, bits.len())?;
        Ok(ToeplitzSeed {
            bits,
            input_len,
            output_len,
        })
    }

    pub fn random(input_len: usize, output_len: usize, rng: &mut Rng) -> Self {
        assert!(input_len > 0 && output_len > 0);
        ToeplitzSeed {
            bits: BitString::random(input_len + output_len - 1, rng),
            input_len,
            output_len,
        }
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }
}

pub fn universal_hash(seed: &ToeplitzSeed, x: &BitString) -> Result<BitString, Error> {
    crate::error::check_len(seed.input_len, x.len())?;
    let m = seed.input_len;
    // Row i is seed[i..i + m] against x reversed.
    let reversed: BitString = (0..m).map(|t| x.get(m - 1 - t)).collect();
    let xw = reversed.words();
    let mut out = BitString::zeros(seed.output_len);
    for i in 0..seed.output_len {
        let mut acc = 0u64;
        for (k, &w) in xw.iter().enumerate() {
            acc ^= seed.bits.window(i + 64 * k) & w;
        }
        if acc.count_ones() & 1 == 1 {
            out.set(i, true);
        }
    }
    Ok(out)
}
