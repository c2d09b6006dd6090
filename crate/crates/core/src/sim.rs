//! Monte Carlo FER sweeps.
//!
//! Frame `k` at a given Eb/N0 always draws its payload and noise from
//! `frame_rng(mix_seed(seed, ebn0.to_bits()), k)`, so every decoder sees the
//! same frames for the same seed, and the outcome of a sweep does not depend
//! on how frames are spread over workers. Frames are decoded in parallel in
//! fixed-size chunks and merged in index order; the stopping rule is
//! evaluated frame by frame during the merge.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{ebn0_to_sigma2, frame_rng, mix_seed, transmit, LlrFrame};
use crate::code::{MessageWord, PolarCode};
use crate::dscf::{DscfConfig, DscfDecoder};
use crate::error::{Error, Result};
use crate::sc::{genie_decode_with, FlipVector, ScDecoder};

const CHUNK: u64 = 2048;

/// Decoder under test.
#[derive(Debug, Clone, PartialEq)]
pub enum DecoderSpec {
    Sc,
    Genie { omega: usize },
    Dscf(DscfConfig),
}

impl DecoderSpec {
    pub fn max_attempts(&self) -> usize {
        match self {
            DecoderSpec::Dscf(cfg) => cfg.max_attempts + 1,
            _ => 1,
        }
    }
}

impl fmt::Display for DecoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecoderSpec::Sc => write!(f, "sc"),
            DecoderSpec::Genie { omega } => write!(f, "genie:{omega}"),
            DecoderSpec::Dscf(cfg) => write!(
                f,
                "dscf:{}:{}:{}",
                cfg.omega_max, cfg.max_attempts, cfg.metric
            ),
        }
    }
}

impl FromStr for DecoderSpec {
    type Err = Error;

    /// `sc`, `genie:<omega>` or `dscf:<omega>:<attempts>:<metric>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::DecoderSpec(s.to_string());
        let mut parts = s.trim().splitn(4, ':');
        match parts.next() {
            Some("sc") if parts.next().is_none() => Ok(DecoderSpec::Sc),
            Some("genie") => {
                let omega = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if parts.next().is_some() {
                    return Err(bad());
                }
                Ok(DecoderSpec::Genie { omega })
            }
            Some("dscf") => {
                let omega = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                let attempts = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                let metric = parts.next().ok_or_else(bad)?.parse()?;
                Ok(DecoderSpec::Dscf(DscfConfig::new(omega, attempts, metric)?))
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub ebn0_db: Vec<f64>,
    pub min_frames: u64,
    pub min_frame_errors: u64,
    pub max_frames: u64,
    pub decoder: DecoderSpec,
    pub seed: u64,
    pub workers: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.min_frame_errors < 1 {
            return Err(Error::Config("min frame errors must be at least 1".into()));
        }
        if self.max_frames < self.min_frames || self.max_frames == 0 {
            return Err(Error::Config(
                "max frames must be >= min frames and positive".into(),
            ));
        }
        if self.workers == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        if let DecoderSpec::Dscf(cfg) = &self.decoder {
            cfg.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub ebn0_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub mean_attempts: f64,
    /// Frames that passed the CRC with a wrong payload.
    pub undetected: u64,
    /// The error target was not reached within `max_frames`.
    pub censored: bool,
    /// `attempts_histogram[a - 1]` counts frames decoded in `a` SC passes.
    pub attempts_histogram: Vec<u64>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub points: Vec<PointResult>,
}

/// What happened to one simulated frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameOutcome {
    /// Decoded payload differs from the transmitted one.
    pub frame_error: bool,
    pub crc_pass: bool,
    /// The whole message word was recovered.
    pub recovered: bool,
    pub attempts: usize,
}

impl FrameOutcome {
    pub fn undetected(&self) -> bool {
        self.crc_pass && self.frame_error
    }
}

enum Workspace {
    Sc(ScDecoder),
    Genie(ScDecoder, usize),
    Dscf(DscfDecoder),
}

impl Workspace {
    fn new(code: &PolarCode, spec: &DecoderSpec) -> Self {
        match spec {
            DecoderSpec::Sc => Workspace::Sc(ScDecoder::for_code(code)),
            DecoderSpec::Genie { omega } => Workspace::Genie(ScDecoder::for_code(code), *omega),
            DecoderSpec::Dscf(cfg) => {
                Workspace::Dscf(DscfDecoder::new(code, cfg.clone()).expect("validated config"))
            }
        }
    }

    fn decode(&mut self, code: &PolarCode, word: &MessageWord, channel: &[f64]) -> FrameOutcome {
        let (u_hat, crc_pass, attempts) = match self {
            Workspace::Sc(sc) => {
                let trace = sc.decode(code, channel, &FlipVector::keep_all(code.block_len()));
                let pass = code.crc_check(&trace.u_hat);
                (trace.u_hat, pass, 1)
            }
            Workspace::Genie(sc, omega) => {
                let out = genie_decode_with(sc, code, channel, &word.u, *omega);
                (out.u_hat, out.success, 1)
            }
            Workspace::Dscf(dec) => {
                let out = dec.decode(code, channel);
                (out.u_hat, out.crc_pass, out.attempts)
            }
        };
        FrameOutcome {
            frame_error: code.payload_of(&u_hat) != word.payload,
            crc_pass,
            recovered: u_hat == word.u,
            attempts,
        }
    }
}

/// Payload and channel LLRs of frame `index` at noise variance `sigma2`.
pub fn generate_frame(
    code: &PolarCode,
    stream_seed: u64,
    index: u64,
    sigma2: f64,
) -> Result<(MessageWord, LlrFrame)> {
    let mut rng = frame_rng(stream_seed, index);
    let payload: Vec<u8> = (0..code.payload_len())
        .map(|_| rng.random::<bool>() as u8)
        .collect();
    let (word, x) = code.encode(&payload)?;
    let frame = transmit(&x, sigma2, &mut rng)?;
    Ok((word, frame))
}

/// Seed of the frame stream at `ebn0_db`.
pub fn point_seed(seed: u64, ebn0_db: f64) -> u64 {
    mix_seed(seed, ebn0_db.to_bits())
}

/// Decodes frames `range` at `ebn0_db` and returns their outcomes in index
/// order. Must be called inside the desired rayon pool.
pub fn simulate_frames(
    code: &PolarCode,
    decoder: &DecoderSpec,
    seed: u64,
    ebn0_db: f64,
    range: std::ops::Range<u64>,
) -> Result<Vec<FrameOutcome>> {
    let sigma2 = ebn0_to_sigma2(ebn0_db, code.rate())?;
    let stream = point_seed(seed, ebn0_db);
    range
        .into_par_iter()
        .map_init(
            || Workspace::new(code, decoder),
            |ws, idx| {
                let (word, frame) = generate_frame(code, stream, idx, sigma2)?;
                Ok(ws.decode(code, &word, &frame.values))
            },
        )
        .collect()
}

fn run_point(code: &PolarCode, spec: &SweepSpec, ebn0_db: f64) -> Result<PointResult> {
    let start = Instant::now();
    let mut histogram = vec![0u64; spec.decoder.max_attempts()];
    let (mut frames, mut errors, mut undetected, mut attempts) = (0u64, 0u64, 0u64, 0u64);
    let done = |frames: u64, errors: u64| {
        frames >= spec.max_frames || (frames >= spec.min_frames && errors >= spec.min_frame_errors)
    };
    'outer: while !done(frames, errors) {
        let end = (frames + CHUNK).min(spec.max_frames);
        for out in simulate_frames(code, &spec.decoder, spec.seed, ebn0_db, frames..end)? {
            frames += 1;
            errors += out.frame_error as u64;
            undetected += out.undetected() as u64;
            attempts += out.attempts as u64;
            histogram[out.attempts - 1] += 1;
            if done(frames, errors) {
                break 'outer;
            }
        }
    }
    Ok(PointResult {
        ebn0_db,
        frames,
        frame_errors: errors,
        fer: errors as f64 / frames as f64,
        mean_attempts: attempts as f64 / frames as f64,
        undetected,
        censored: errors < spec.min_frame_errors,
        attempts_histogram: histogram,
        wall_time: start.elapsed(),
    })
}

/// FER and mean attempts at every Eb/N0 point of `spec`.
pub fn run_sweep(code: &PolarCode, spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        let points = spec
            .ebn0_db
            .iter()
            .map(|&db| run_point(code, spec, db))
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepResult { points })
    })
}

pub const CSV_HEADER: &str = "ebn0_db,frames,frame_errors,fer,mean_attempts,undetected,censored";

pub fn render_csv(result: &SweepResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in &result.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.ebn0_db,
            p.frames,
            p.frame_errors,
            p.fer,
            p.mean_attempts,
            p.undetected,
            p.censored as u8
        );
    }
    out
}

pub fn emit_csv(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_csv(result)).map_err(|e| Error::io(path, e))
}
