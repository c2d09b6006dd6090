//! Polar code description, CRC attachment and the `u G^{⊗n}` transform.

use std::path::Path;

use crate::channel::ebn0_to_sigma2;
use crate::construction::{ga_mean_llrs, most_reliable, FrozenMask, FrozenSource};
use crate::crc::CrcSpec;
use crate::error::{Error, Result};

/// A polar code P(N, K) with a c-bit CRC placed on the last c positions of
/// the information set.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCode {
    n: u32,
    payload_len: usize,
    crc: CrcSpec,
    /// Non-frozen positions, strictly increasing, |info| = K + c.
    info: Vec<usize>,
    frozen: Vec<bool>,
}

/// Message word `u` together with the payload and CRC it carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageWord {
    pub u: Vec<u8>,
    pub payload: Vec<u8>,
    pub crc_bits: Vec<u8>,
}

impl PolarCode {
    /// Builds P(2^n, K) with the given CRC. The K + c information positions
    /// come from `source`.
    pub fn build(n: u32, payload_len: usize, crc: CrcSpec, source: FrozenSource) -> Result<Self> {
        if !(1..=20).contains(&n) {
            return Err(Error::BadExponent(n));
        }
        let block_len = 1usize << n;
        let info_len = payload_len + crc.len();
        if info_len > block_len {
            return Err(Error::RateTooHigh {
                needed: info_len,
                block_length: block_len,
            });
        }
        let frozen = match source {
            FrozenSource::Mask(mask) => {
                if mask.len() != block_len {
                    return Err(Error::MaskLength {
                        got: mask.len(),
                        expected: block_len,
                    });
                }
                let open = mask.iter().filter(|f| !**f).count();
                if open != info_len {
                    return Err(Error::MaskPopcount {
                        got: open,
                        expected: info_len,
                    });
                }
                mask
            }
            FrozenSource::GaussianApproximation { design_ebn0_db } => {
                let rate = (payload_len.max(1) as f64) / block_len as f64;
                let sigma2 = ebn0_to_sigma2(design_ebn0_db, rate)?;
                let chosen = most_reliable(&ga_mean_llrs(n, sigma2), info_len);
                let mut mask = vec![true; block_len];
                for i in chosen {
                    mask[i] = false;
                }
                mask
            }
        };
        let info = (0..block_len).filter(|&i| !frozen[i]).collect();
        Ok(Self {
            n,
            payload_len,
            crc,
            info,
            frozen,
        })
    }

    /// Loads a code from a frozen-set file. K is the number of non-frozen
    /// positions minus the CRC width; a CRC recorded in the file metadata
    /// (`crc-width`, `crc-poly`, optionally `crc-init`) overrides `crc`.
    pub fn from_mask_file(path: impl AsRef<Path>, crc: Option<CrcSpec>) -> Result<Self> {
        let mask = FrozenMask::load(path)?;
        Self::from_mask(&mask, crc)
    }

    pub fn from_mask(mask: &FrozenMask, crc: Option<CrcSpec>) -> Result<Self> {
        let block_len = mask.frozen.len();
        if !block_len.is_power_of_two() || block_len < 2 {
            return Err(Error::MaskFormat(format!(
                "block length {block_len} is not a power of two >= 2"
            )));
        }
        let crc = match crc {
            Some(crc) => crc,
            None => crc_from_meta(mask)?.unwrap_or_default(),
        };
        let open = mask.frozen.iter().filter(|f| !**f).count();
        let payload_len = open.checked_sub(crc.len()).ok_or(Error::MaskPopcount {
            got: open,
            expected: crc.len(),
        })?;
        Self::build(
            block_len.trailing_zeros(),
            payload_len,
            crc,
            FrozenSource::Mask(mask.frozen.clone()),
        )
    }

    /// Frozen-set file contents describing this code, CRC included.
    pub fn to_mask(&self) -> FrozenMask {
        let mut mask = FrozenMask {
            frozen: self.frozen.clone(),
            ..Default::default()
        };
        mask.meta.insert("K".into(), self.payload_len.to_string());
        mask.meta
            .insert("crc-width".into(), self.crc.width().to_string());
        mask.meta
            .insert("crc-poly".into(), format!("{:#x}", self.crc.poly()));
        if self.crc.init() != 0 {
            mask.meta
                .insert("crc-init".into(), format!("{:#x}", self.crc.init()));
        }
        mask
    }

    pub fn log2_len(&self) -> u32 {
        self.n
    }

    pub fn block_len(&self) -> usize {
        1 << self.n
    }

    /// K, the number of payload bits (CRC excluded).
    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    pub fn crc(&self) -> &CrcSpec {
        &self.crc
    }

    /// Information set A (payload and CRC positions), strictly increasing.
    pub fn info_set(&self) -> &[usize] {
        &self.info
    }

    pub fn frozen_set(&self) -> Vec<usize> {
        (0..self.block_len()).filter(|&i| self.frozen[i]).collect()
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    /// Code rate K/N, CRC bits not counted.
    pub fn rate(&self) -> f64 {
        self.payload_len as f64 / self.block_len() as f64
    }

    /// Places payload and CRC on A and applies `G^{⊗n}`.
    pub fn encode(&self, payload: &[u8]) -> Result<(MessageWord, Vec<u8>)> {
        if payload.len() != self.payload_len {
            return Err(Error::Length {
                got: payload.len(),
                expected: self.payload_len,
            });
        }
        let crc_bits = self.crc.crc_bits(payload);
        let mut u = vec![0u8; self.block_len()];
        for (&pos, &bit) in self.info.iter().zip(payload.iter().chain(&crc_bits)) {
            u[pos] = bit & 1;
        }
        let mut x = u.clone();
        polar_transform(&mut x);
        let word = MessageWord {
            u,
            payload: payload.to_vec(),
            crc_bits,
        };
        Ok((word, x))
    }

    /// Payload bits of a message-word estimate, read off A.
    pub fn payload_of(&self, u_hat: &[u8]) -> Vec<u8> {
        self.info[..self.payload_len]
            .iter()
            .map(|&i| u_hat[i])
            .collect()
    }

    /// Recomputes the CRC over the payload positions of `u_hat` and compares
    /// it with the bits on the last c positions of A.
    pub fn crc_check(&self, u_hat: &[u8]) -> bool {
        debug_assert_eq!(u_hat.len(), self.block_len());
        let mut bits = Vec::with_capacity(self.info.len());
        bits.extend(self.info.iter().map(|&i| u_hat[i]));
        let (payload, crc) = bits.split_at(self.payload_len);
        self.crc.verify(payload, crc)
    }
}

fn crc_from_meta(mask: &FrozenMask) -> Result<Option<CrcSpec>> {
    let Some(width) = mask.meta.get("crc-width") else {
        return Ok(None);
    };
    let width: u32 = width
        .parse()
        .map_err(|_| Error::Crc(format!("bad crc-width `{width}`")))?;
    if width == 0 {
        return Ok(Some(CrcSpec::none()));
    }
    let poly = mask
        .meta
        .get("crc-poly")
        .ok_or_else(|| Error::Crc("crc-width given without crc-poly".into()))?;
    let mut crc = CrcSpec::from_hex(width, poly)?;
    if let Some(init) = mask.meta.get("crc-init") {
        let digits = init.trim_start_matches("0x");
        let init = u64::from_str_radix(digits, 16)
            .map_err(|_| Error::Crc(format!("bad crc-init `{init}`")))?;
        crc = crc.with_init(init);
    }
    Ok(Some(crc))
}

/// In-place `x = u G^{⊗n}` over GF(2) with `G = [[1,0],[1,1]]`, natural
/// (non bit-reversed) order. The transform is its own inverse.
pub fn polar_transform(bits: &mut [u8]) {
    let len = bits.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        for block in bits.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
}
