//! Single-frame decoding with an attempt-by-attempt log.

use std::fmt::Write as _;
use std::path::Path;

use crate::channel::{ebn0_to_sigma2, LlrFrame};
use crate::code::PolarCode;
use crate::dscf::DscfDecoder;
use crate::error::{Error, Result};
use crate::metrics::FlipSet;
use crate::sc::{genie_decode_with, FlipVector, ScDecoder, ScTrace};
use crate::sim::{generate_frame, point_seed, DecoderSpec};

/// Where the frame to decode comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameSource {
    /// Frame `index` of a `simulate` run with this seed and Eb/N0.
    Seed {
        seed: u64,
        index: u64,
        ebn0_db: f64,
    },
    Llrs(LlrFrame),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttemptLog {
    pub flip_set: FlipSet,
    pub crc_pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeReport {
    pub attempts: Vec<AttemptLog>,
    pub crc_pass: bool,
    pub u_hat: Vec<u8>,
    /// Known only for seeded frames.
    pub payload_ok: Option<bool>,
    /// SC trace of the final attempt.
    pub trace: ScTrace,
}

impl DecodeReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, a) in self.attempts.iter().enumerate() {
            let _ = writeln!(
                out,
                "attempt {} flips={} metric={} crc={}",
                k + 1,
                a.flip_set,
                a.flip_set.metric(),
                if a.crc_pass { "pass" } else { "fail" }
            );
        }
        let _ = writeln!(out, "crc={}", if self.crc_pass { "pass" } else { "fail" });
        if let Some(ok) = self.payload_ok {
            let _ = writeln!(out, "payload={}", if ok { "correct" } else { "wrong" });
        }
        let bits: String = self.u_hat.iter().map(|&b| char::from(b'0' + b)).collect();
        let _ = writeln!(out, "u_hat={bits}");
        out
    }
}

/// Reads one LLR per line; blank lines and `#` comments are skipped.
pub fn parse_llrs(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(k, l)| {
            let v: f64 = l
                .parse()
                .map_err(|_| Error::LlrFormat(format!("line {}: `{l}` is not a number", k + 1)))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::LlrFormat(format!(
                    "line {}: non-finite value",
                    k + 1
                )))
            }
        })
        .collect()
}

/// LLR file for `code`; the noise variance is unknown and recorded as 0.
pub fn read_llr_file(path: impl AsRef<Path>, code: &PolarCode) -> Result<LlrFrame> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let values = parse_llrs(&text)?;
    if values.len() != code.block_len() {
        return Err(Error::LlrFormat(format!(
            "{} values, expected {}",
            values.len(),
            code.block_len()
        )));
    }
    LlrFrame::new(values, 0.0)
}

pub fn decode_one(
    code: &PolarCode,
    source: &FrameSource,
    decoder: &DecoderSpec,
) -> Result<DecodeReport> {
    let (word, frame) = match source {
        FrameSource::Seed {
            seed,
            index,
            ebn0_db,
        } => {
            let sigma2 = ebn0_to_sigma2(*ebn0_db, code.rate())?;
            let (word, frame) = generate_frame(code, point_seed(*seed, *ebn0_db), *index, sigma2)?;
            (Some(word), frame)
        }
        FrameSource::Llrs(frame) => (None, frame.clone()),
    };
    if frame.len() != code.block_len() {
        return Err(Error::Length {
            got: frame.len(),
            expected: code.block_len(),
        });
    }
    let mut sc = ScDecoder::for_code(code);
    let (attempts, final_set) = match decoder {
        DecoderSpec::Sc => {
            let trace = sc.decode(code, &frame.values, &FlipVector::keep_all(code.block_len()));
            let pass = code.crc_check(&trace.u_hat);
            (
                vec![AttemptLog {
                    flip_set: FlipSet::empty(),
                    crc_pass: pass,
                }],
                Vec::new(),
            )
        }
        DecoderSpec::Genie { omega } => {
            let word = word
                .as_ref()
                .ok_or_else(|| Error::Config("the genie decoder needs a seeded frame".into()))?;
            let out = genie_decode_with(&mut sc, code, &frame.values, &word.u, *omega);
            let set = FlipSet::new(code, out.corrected.clone())?;
            (
                vec![AttemptLog {
                    flip_set: set,
                    crc_pass: code.crc_check(&out.u_hat),
                }],
                out.corrected,
            )
        }
        DecoderSpec::Dscf(cfg) => {
            let out = DscfDecoder::new(code, cfg.clone())?.decode(code, &frame.values);
            let last = out
                .history
                .last()
                .map(|a| a.flip_set.indices().to_vec())
                .unwrap_or_default();
            let logs = out
                .history
                .into_iter()
                .map(|a| AttemptLog {
                    flip_set: a.flip_set,
                    crc_pass: a.crc_pass,
                })
                .collect();
            (logs, last)
        }
    };
    let trace = sc.decode(
        code,
        &frame.values,
        &FlipVector::from_indices(code, &final_set)?,
    );
    let crc_pass = code.crc_check(&trace.u_hat);
    let payload_ok = word.map(|w| code.payload_of(&trace.u_hat) == w.payload);
    Ok(DecodeReport {
        attempts,
        crc_pass,
        u_hat: trace.u_hat.clone(),
        payload_ok,
        trace,
    })
}
