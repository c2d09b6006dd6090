//! Successive cancellation decoding with an injectable bit-flip vector.
//!
//! The decoder walks the code tree depth first without recursion. LLRs of
//! the node currently being visited at height `h` live in
//! `alpha[2^h .. 2^(h+1)]`; the channel LLRs act as the root (height n).
//! Partial sums of the most recently finished left child at height `h` live
//! in `left_sums[2^h .. 2^(h+1)]`. Memory is O(N), time O(N log N).

use std::fmt::Write as _;

use crate::channel::LlrFrame;
use crate::code::PolarCode;
use crate::error::{Error, Result};

/// Check-node update: `min(|a|,|b|) sgn(a) sgn(b)`.
#[inline]
pub fn f(a: f64, b: f64) -> f64 {
    let magnitude = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -magnitude
    } else {
        magnitude
    }
}

/// Variable-node update: `b + (1 - 2c) a`.
#[inline]
pub fn g(a: f64, b: f64, c: u8) -> f64 {
    if c & 1 == 0 {
        b + a
    } else {
        b - a
    }
}

/// `(1 - sgn(llr) t) / 2` with `sgn(0) = +1`.
#[inline]
pub fn hard_decision(llr: f64, t: i8) -> u8 {
    let positive = llr >= 0.0;
    // t = -1 inverts the decision.
    (positive == (t < 0)) as u8
}

/// Per-bit flip decisions: -1 flips the SC decision, +1 keeps it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipVector(Vec<i8>);

impl FlipVector {
    pub fn keep_all(block_len: usize) -> Self {
        Self(vec![1; block_len])
    }

    /// -1 exactly at `indices`, each of which must be an information bit.
    pub fn from_indices(code: &PolarCode, indices: &[usize]) -> Result<Self> {
        let mut t = vec![1i8; code.block_len()];
        for &i in indices {
            if i >= t.len() || code.is_frozen(i) {
                return Err(Error::NotInformation(i));
            }
            t[i] = -1;
        }
        Ok(Self(t))
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn flipped(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &t)| t < 0)
            .map(|(i, _)| i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Output of one SC pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ScTrace {
    pub u_hat: Vec<u8>,
    /// Stage-0 LLR of every bit just before its hard decision.
    pub decision_llrs: Vec<f64>,
    pub flips: FlipVector,
}

impl ScTrace {
    /// `index,frozen,decision_llr,t,u_hat` rows.
    pub fn to_csv(&self, code: &PolarCode) -> String {
        let mut out = String::from("index,frozen,decision_llr,t,u_hat\n");
        for i in 0..self.u_hat.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                i,
                code.is_frozen(i) as u8,
                self.decision_llrs[i],
                self.flips.as_slice()[i],
                self.u_hat[i]
            );
        }
        out
    }
}

/// Reusable SC workspace for codes of length 2^n.
#[derive(Debug, Clone)]
pub struct ScDecoder {
    n: usize,
    alpha: Vec<f64>,
    left_sums: Vec<u8>,
    cur: Vec<u8>,
    next: Vec<u8>,
}

impl ScDecoder {
    pub fn new(log2_len: u32) -> Self {
        let len = 1usize << log2_len;
        Self {
            n: log2_len as usize,
            alpha: vec![0.0; len],
            left_sums: vec![0; len],
            cur: vec![0; len],
            next: vec![0; len],
        }
    }

    pub fn for_code(code: &PolarCode) -> Self {
        Self::new(code.log2_len())
    }

    /// Runs the SC schedule, asking `decide(i, llr)` for every non-frozen
    /// bit. Frozen bits are set to 0. Decisions and decision LLRs are
    /// written to `u_hat` and `llrs`.
    pub fn run<D>(
        &mut self,
        channel: &[f64],
        frozen: &[bool],
        u_hat: &mut [u8],
        llrs: &mut [f64],
        mut decide: D,
    ) where
        D: FnMut(usize, f64) -> u8,
    {
        let n = self.n;
        let len = 1usize << n;
        assert_eq!(channel.len(), len, "channel length");
        assert_eq!(frozen.len(), len, "frozen mask length");
        assert_eq!(u_hat.len(), len);
        assert_eq!(llrs.len(), len);

        for i in 0..len {
            let mut h = if i == 0 {
                n
            } else {
                i.trailing_zeros() as usize + 1
            };
            if i > 0 {
                // Enter the right child of the common ancestor.
                h -= 1;
                let half = 1usize << h;
                let (parent, child) = split_levels(&mut self.alpha, channel, h, n);
                let sums = &self.left_sums[half..2 * half];
                for j in 0..half {
                    child[j] = g(parent[j], parent[j + half], sums[j]);
                }
            }
            while h > 0 {
                h -= 1;
                let half = 1usize << h;
                let (parent, child) = split_levels(&mut self.alpha, channel, h, n);
                for j in 0..half {
                    child[j] = f(parent[j], parent[j + half]);
                }
            }
            let llr = if n == 0 { channel[0] } else { self.alpha[1] };
            let bit = if frozen[i] { 0 } else { decide(i, llr) & 1 };
            u_hat[i] = bit;
            llrs[i] = llr;

            // Fold the new bit into the partial sums of finished subtrees.
            self.cur[0] = bit;
            let mut h = 0;
            while h < n && (i >> h) & 1 == 1 {
                let half = 1usize << h;
                let sums = &self.left_sums[half..2 * half];
                let (low, high) = self.next[..2 * half].split_at_mut(half);
                for (((lo, hi), &s), &c) in
                    low.iter_mut().zip(high).zip(sums).zip(&self.cur[..half])
                {
                    *lo = s ^ c;
                    *hi = c;
                }
                std::mem::swap(&mut self.cur, &mut self.next);
                h += 1;
            }
            if h < n {
                let half = 1usize << h;
                self.left_sums[half..2 * half].copy_from_slice(&self.cur[..half]);
            }
        }
    }

    /// SC decoding where the decision of every bit with `t_i = -1` is
    /// inverted.
    pub fn decode(&mut self, code: &PolarCode, channel: &[f64], flips: &FlipVector) -> ScTrace {
        let len = code.block_len();
        let mut u_hat = vec![0u8; len];
        let mut llrs = vec![0.0; len];
        let t = flips.as_slice();
        self.run(
            channel,
            code.frozen_mask(),
            &mut u_hat,
            &mut llrs,
            |i, llr| hard_decision(llr, t[i]),
        );
        ScTrace {
            u_hat,
            decision_llrs: llrs,
            flips: flips.clone(),
        }
    }
}

fn split_levels<'a>(
    alpha: &'a mut [f64],
    channel: &'a [f64],
    child_height: usize,
    n: usize,
) -> (&'a [f64], &'a mut [f64]) {
    let size = 1usize << child_height;
    if child_height + 1 == n {
        (channel, &mut alpha[size..2 * size])
    } else {
        let (lo, hi) = alpha.split_at_mut(2 * size);
        (&hi[..2 * size], &mut lo[size..2 * size])
    }
}

/// One-shot SC decode with a fresh workspace.
pub fn sc_decode(code: &PolarCode, frame: &LlrFrame, flips: &FlipVector) -> Result<ScTrace> {
    check_len(code, frame.len())?;
    check_len(code, flips.len())?;
    Ok(ScDecoder::for_code(code).decode(code, &frame.values, flips))
}

fn check_len(code: &PolarCode, got: usize) -> Result<()> {
    if got != code.block_len() {
        return Err(Error::Length {
            got,
            expected: code.block_len(),
        });
    }
    Ok(())
}

/// Result of the genie-aided reference decoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenieOutcome {
    pub success: bool,
    pub corrections: usize,
    /// Positions whose decision was forced to the true bit.
    pub corrected: Vec<usize>,
    pub u_hat: Vec<u8>,
}

/// Ideal flip decoder: SC that corrects up to `omega_max` wrong information
/// decisions using the transmitted word. Succeeds when no disagreement is
/// left uncorrected.
pub fn genie_decode_with(
    decoder: &mut ScDecoder,
    code: &PolarCode,
    channel: &[f64],
    true_u: &[u8],
    omega_max: usize,
) -> GenieOutcome {
    let len = code.block_len();
    let mut u_hat = vec![0u8; len];
    let mut llrs = vec![0.0; len];
    let mut corrected = Vec::new();
    let mut failed = false;
    decoder.run(
        channel,
        code.frozen_mask(),
        &mut u_hat,
        &mut llrs,
        |i, llr| {
            let bit = hard_decision(llr, 1);
            if bit != true_u[i] {
                if corrected.len() < omega_max {
                    corrected.push(i);
                    return true_u[i];
                }
                failed = true;
            }
            bit
        },
    );
    GenieOutcome {
        success: !failed,
        corrections: corrected.len(),
        corrected,
        u_hat,
    }
}

pub fn genie_decode(
    code: &PolarCode,
    frame: &LlrFrame,
    true_u: &[u8],
    omega_max: usize,
) -> Result<GenieOutcome> {
    check_len(code, frame.len())?;
    check_len(code, true_u.len())?;
    Ok(genie_decode_with(
        &mut ScDecoder::for_code(code),
        code,
        &frame.values,
        true_u,
        omega_max,
    ))
}
