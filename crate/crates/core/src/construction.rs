//! Frozen-set construction: Gaussian approximation and the text mask format.
//!
//! Mask files look like
//!
//! ```text
//! # construction=ga design-ebn0-db=2
//! # crc-width=24 crc-poly=0x1b2b117
//! N=8
//! 11100000
//! ```
//!
//! where `1` marks a frozen position. Lines starting with `#` carry optional
//! `key=value` metadata; mask characters may be wrapped over several lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Where the information set comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum FrozenSource {
    /// Explicit mask, `true` = frozen.
    Mask(Vec<bool>),
    /// Gaussian-approximation density evolution at the given design Eb/N0,
    /// with rate K/N.
    GaussianApproximation { design_ebn0_db: f64 },
}

/// Parsed frozen-set file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrozenMask {
    pub frozen: Vec<bool>,
    pub meta: BTreeMap<String, String>,
}

impl FrozenMask {
    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut declared: Option<usize> = None;
        let mut frozen = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for token in comment.split_whitespace() {
                    if let Some((k, v)) = token.split_once('=') {
                        meta.insert(k.to_string(), v.to_string());
                    }
                }
                continue;
            }
            if declared.is_none() {
                let value = line.strip_prefix("N=").ok_or_else(|| {
                    Error::MaskFormat(format!("expected `N=<int>`, got `{line}`"))
                })?;
                let n = value
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::MaskFormat(format!("bad block length `{value}`")))?;
                declared = Some(n);
                continue;
            }
            for ch in line.chars() {
                match ch {
                    '0' => frozen.push(false),
                    '1' => frozen.push(true),
                    c if c.is_whitespace() => {}
                    c => return Err(Error::MaskFormat(format!("unexpected character `{c}`"))),
                }
            }
        }
        let expected = declared.ok_or_else(|| Error::MaskFormat("missing `N=` line".into()))?;
        if frozen.len() != expected {
            return Err(Error::MaskLength {
                got: frozen.len(),
                expected,
            });
        }
        Ok(Self { frozen, meta })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.meta.is_empty() {
            out.push('#');
            for (k, v) in &self.meta {
                let _ = write!(out, " {k}={v}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "N={}", self.frozen.len());
        for row in self.frozen.chunks(64) {
            out.extend(row.iter().map(|&f| if f { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

// Chung's two-piece approximation of the GA phi function, in the log domain
// so that very reliable channels do not underflow. The first piece exceeds
// 1 for x below about 0.034 and is clamped there.
fn ln_phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < 10.0 {
        (-0.4527 * x.powf(0.86) + 0.0218).min(0.0)
    } else {
        0.5 * (std::f64::consts::PI / x).ln() - x / 4.0 + (1.0 - 10.0 / (7.0 * x)).ln()
    }
}

fn inv_ln_phi(target: f64) -> f64 {
    if target >= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while ln_phi(hi) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_phi(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Mean LLR of each synthetic bit channel u_0..u_{N-1} under the Gaussian
/// approximation for a BPSK/AWGN channel of noise variance `sigma2`.
///
/// Index bits are read MSB first: a 0 selects the check-node (f) branch,
/// a 1 the variable-node (g) branch, which matches `x = u G^{⊗n}` without
/// bit reversal.
pub fn ga_mean_llrs(n: u32, sigma2: f64) -> Vec<f64> {
    let mut means = vec![2.0 / sigma2];
    for _ in 0..n {
        means = means
            .iter()
            .flat_map(|&mu| {
                let lp = ln_phi(mu);
                // 1 - (1 - phi)^2 = phi (2 - phi)
                let minus = inv_ln_phi(lp + (2.0 - lp.exp()).ln());
                [minus, 2.0 * mu]
            })
            .collect();
    }
    means
}

/// The `count` most reliable positions by descending mean LLR, returned in
/// increasing index order. Equal reliabilities prefer the higher index.
pub fn most_reliable(reliability: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..reliability.len()).collect();
    order.sort_by(|&a, &b| {
        reliability[b]
            .total_cmp(&reliability[a])
            .then_with(|| b.cmp(&a))
    });
    let mut chosen = order[..count].to_vec();
    chosen.sort_unstable();
    chosen
}
