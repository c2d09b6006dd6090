//! BPSK over AWGN and channel LLRs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Channel LLRs `L_n = 2y / sigma^2` of one received frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFrame {
    pub values: Vec<f64>,
    pub sigma2: f64,
}

impl LlrFrame {
    /// Wraps externally supplied LLRs (e.g. read from a file).
    pub fn new(values: Vec<f64>, sigma2: f64) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::LlrFormat(format!("non-finite LLR {bad}")));
        }
        Ok(Self { values, sigma2 })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Noise variance for BPSK at `ebn0_db` and code rate `rate`:
/// `sigma^2 = 1 / (2 R 10^(Eb/N0 / 10))`.
pub fn ebn0_to_sigma2(ebn0_db: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::BadRate(rate));
    }
    Ok(1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0)))
}

/// Maps `x` to `1 - 2x`, adds the given noise samples and returns the LLRs.
pub fn modulate_with_noise(codeword: &[u8], noise: &[f64], sigma2: f64) -> Result<LlrFrame> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::BadVariance(sigma2));
    }
    if noise.len() != codeword.len() {
        return Err(Error::Length {
            got: noise.len(),
            expected: codeword.len(),
        });
    }
    let scale = 2.0 / sigma2;
    let values = codeword
        .iter()
        .zip(noise)
        .map(|(&x, &z)| (1.0 - 2.0 * x as f64 + z) * scale)
        .collect();
    Ok(LlrFrame { values, sigma2 })
}

/// Sends `codeword` through BPSK/AWGN with noise drawn from `rng`.
pub fn transmit<R: Rng + ?Sized>(codeword: &[u8], sigma2: f64, rng: &mut R) -> Result<LlrFrame> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::BadVariance(sigma2));
    }
    let sigma = sigma2.sqrt();
    let noise: Vec<f64> = (0..codeword.len())
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    modulate_with_noise(codeword, &noise, sigma2)
}

/// SplitMix64 finaliser, used to decorrelate derived seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent random stream for frame `frame_index` under `master_seed`.
/// Frames can be generated in any order on any worker.
pub fn frame_rng(master_seed: u64, frame_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(frame_index);
    rng
}
