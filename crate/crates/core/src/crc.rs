//! Bit-serial CRC over unpacked bit slices.
//!
//! Payloads in a polar code are arbitrary-length bit vectors, so the CRC is
//! computed one bit at a time with an MSB-first shift register rather than
//! over bytes. The register model follows the usual parameterisation
//! (width, polynomial, init, reflect in/out, final xor). With `reflect_in`,
//! bits are consumed in groups of eight with the bit order reversed inside
//! each group, which matches byte-oriented CRCs when the input is a packed
//! byte stream unpacked MSB-first.

use std::fmt;

use crate::error::{Error, Result};

/// Generator polynomial and register parameters of a CRC.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrcSpec {
    width: u32,
    /// Full generator including the x^width term.
    poly: u64,
    init: u64,
    reflect_in: bool,
    reflect_out: bool,
    xor_out: u64,
}

impl CrcSpec {
    /// Creates a CRC of `width` bits. `poly` may include the leading x^width
    /// coefficient or omit it; either way the stored generator has degree
    /// exactly `width`.
    pub fn new(width: u32, poly: u64) -> Result<Self> {
        if width > 63 {
            return Err(Error::Crc(format!("width {width} exceeds 63 bits")));
        }
        let top = 1u64 << width;
        let poly = if poly < top {
            poly | top
        } else if poly < (top << 1) {
            poly
        } else {
            return Err(Error::Crc(format!(
                "polynomial {poly:#x} has degree above {width}"
            )));
        };
        if poly & 1 == 0 && width > 0 {
            return Err(Error::Crc(format!(
                "polynomial {poly:#x} lacks the x^0 term"
            )));
        }
        Ok(Self {
            width,
            poly,
            init: 0,
            reflect_in: false,
            reflect_out: false,
            xor_out: 0,
        })
    }

    /// Parses a hexadecimal polynomial, with or without `0x`.
    pub fn from_hex(width: u32, poly: &str) -> Result<Self> {
        let digits = poly
            .trim()
            .trim_start_matches("0x")
            .trim_start_matches("0X");
        let value = u64::from_str_radix(digits, 16)
            .map_err(|_| Error::Crc(format!("bad hex polynomial `{poly}`")))?;
        Self::new(width, value)
    }

    /// No CRC at all: every word passes.
    pub fn none() -> Self {
        Self::new(0, 1).expect("degree-0 generator")
    }

    /// 24-bit generator used by 5G NR polar-coded control channels
    /// (gCRC24C, D^24 + D^23 + D^21 + D^20 + D^17 + D^15 + D^13 + D^12 + D^8
    /// + D^4 + D^2 + D + 1).
    pub fn nr_crc24c() -> Self {
        Self::new(24, 0x1B2_B117).expect("valid generator")
    }

    pub fn with_init(mut self, init: u64) -> Self {
        self.init = init & self.mask();
        self
    }

    pub fn with_reflect(mut self, reflect_in: bool, reflect_out: bool) -> Self {
        self.reflect_in = reflect_in;
        self.reflect_out = reflect_out;
        self
    }

    pub fn with_xor_out(mut self, xor_out: u64) -> Self {
        self.xor_out = xor_out & self.mask();
        self
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Number of CRC bits, as a length.
    pub fn len(&self) -> usize {
        self.width as usize
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0
    }

    pub fn poly(&self) -> u64 {
        self.poly
    }

    pub fn init(&self) -> u64 {
        self.init
    }

    pub fn reflect_in(&self) -> bool {
        self.reflect_in
    }

    pub fn reflect_out(&self) -> bool {
        self.reflect_out
    }

    pub fn xor_out(&self) -> u64 {
        self.xor_out
    }

    fn mask(&self) -> u64 {
        if self.width == 0 {
            0
        } else {
            u64::MAX >> (64 - self.width)
        }
    }

    /// CRC register value of `bits` (each element 0 or 1).
    pub fn checksum(&self, bits: &[u8]) -> u64 {
        if self.width == 0 {
            return 0;
        }
        let mask = self.mask();
        let low = self.poly & mask;
        let msb = self.width - 1;
        let mut reg = self.init;
        let mut feed = |bit: u8| {
            let top = ((reg >> msb) as u8 & 1) ^ (bit & 1);
            reg = (reg << 1) & mask;
            if top == 1 {
                reg ^= low;
            }
        };
        if self.reflect_in {
            for group in bits.chunks(8) {
                group.iter().rev().for_each(|&b| feed(b));
            }
        } else {
            bits.iter().for_each(|&b| feed(b));
        }
        if self.reflect_out {
            reg = reg.reverse_bits() >> (64 - self.width);
        }
        reg ^ self.xor_out
    }

    /// The CRC of `bits` as `width` bits, MSB first.
    pub fn crc_bits(&self, bits: &[u8]) -> Vec<u8> {
        let value = self.checksum(bits);
        (0..self.width)
            .rev()
            .map(|k| ((value >> k) & 1) as u8)
            .collect()
    }

    /// Whether `crc` (MSB first) is the CRC of `payload`.
    pub fn verify(&self, payload: &[u8], crc: &[u8]) -> bool {
        if crc.len() != self.len() {
            return false;
        }
        let value = crc.iter().fold(0u64, |acc, &b| (acc << 1) | (b & 1) as u64);
        value == self.checksum(payload)
    }
}

impl Default for CrcSpec {
    fn default() -> Self {
        Self::nr_crc24c()
    }
}

impl fmt::Display for CrcSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "width={} poly={:#x}", self.width, self.poly)?;
        if self.init != 0 {
            write!(f, " init={:#x}", self.init)?;
        }
        if self.reflect_in || self.reflect_out {
            write!(f, " refin={} refout={}", self.reflect_in, self.reflect_out)?;
        }
        if self.xor_out != 0 {
            write!(f, " xorout={:#x}", self.xor_out)?;
        }
        Ok(())
    }
}
