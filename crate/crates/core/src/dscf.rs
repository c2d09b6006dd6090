//! Dynamic SC-flip decoding with a global candidate pool.
//!
//! After a failed SC pass every order-1 flip set is scored from its decision
//! LLRs. Attempts then pop the lowest-metric candidate from a single pool
//! shared by all orders; a failed attempt of order below `omega_max` pushes
//! its own children, scored from its own trace. The pool is trimmed to the
//! remaining budget after every insertion, so at most `1 + m` SC passes run.

use std::cmp::Ordering;

use crate::channel::LlrFrame;
use crate::code::PolarCode;
use crate::error::{Error, Result};
use crate::metrics::{select_candidates, FlipSet, MetricKind};
use crate::sc::{FlipVector, ScDecoder, ScTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct DscfConfig {
    /// Highest error order explored.
    pub omega_max: usize,
    /// Additional SC attempts after the initial pass.
    pub max_attempts: usize,
    pub metric: MetricKind,
}

impl DscfConfig {
    pub fn new(omega_max: usize, max_attempts: usize, metric: MetricKind) -> Result<Self> {
        let cfg = Self {
            omega_max,
            max_attempts,
            metric,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega_max < 1 {
            return Err(Error::Config("omega must be at least 1".into()));
        }
        if self.max_attempts < 1 {
            return Err(Error::Config("attempt budget must be at least 1".into()));
        }
        self.metric.validate()
    }
}

/// One SC pass of a decode.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub flip_set: FlipSet,
    pub crc_pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub u_hat: Vec<u8>,
    pub payload_hat: Vec<u8>,
    pub crc_pass: bool,
    /// SC passes run, the initial one included.
    pub attempts: usize,
    /// Flip set of the passing attempt (empty when plain SC passed).
    pub winning_flip_set: Option<FlipSet>,
    pub history: Vec<Attempt>,
}

/// `t_i = -1` iff `i ∈ E`.
pub fn build_flip_vector(set: &FlipSet, code: &PolarCode) -> Result<FlipVector> {
    FlipVector::from_indices(code, set.indices())
}

fn pool_order(a: &FlipSet, b: &FlipSet) -> Ordering {
    a.metric()
        .total_cmp(&b.metric())
        .then_with(|| a.indices().cmp(b.indices()))
}

/// DSCF decoder with its own SC workspace.
#[derive(Debug, Clone)]
pub struct DscfDecoder {
    cfg: DscfConfig,
    sc: ScDecoder,
}

impl DscfDecoder {
    pub fn new(code: &PolarCode, cfg: DscfConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            sc: ScDecoder::for_code(code),
        })
    }

    pub fn config(&self) -> &DscfConfig {
        &self.cfg
    }

    fn finish(
        code: &PolarCode,
        trace: ScTrace,
        pass: bool,
        attempts: usize,
        win: Option<FlipSet>,
        history: Vec<Attempt>,
    ) -> DecodeOutcome {
        DecodeOutcome {
            payload_hat: code.payload_of(&trace.u_hat),
            u_hat: trace.u_hat,
            crc_pass: pass,
            attempts,
            winning_flip_set: win,
            history,
        }
    }

    pub fn decode(&mut self, code: &PolarCode, channel: &[f64]) -> DecodeOutcome {
        let budget = self.cfg.max_attempts;
        let root = FlipSet::empty();
        let trace = self
            .sc
            .decode(code, channel, &FlipVector::keep_all(code.block_len()));
        let pass = code.crc_check(&trace.u_hat);
        let mut history = vec![Attempt {
            flip_set: root.clone(),
            crc_pass: pass,
        }];
        if pass {
            return Self::finish(code, trace, true, 1, Some(root), history);
        }

        // Kept in descending order so the best candidate pops off the end.
        let mut pool = select_candidates(&trace, &root, code, &self.cfg.metric);
        pool.truncate(budget);
        pool.reverse();

        let mut last = trace;
        let mut used = 0;
        while used < budget {
            let Some(candidate) = pool.pop() else { break };
            let flips = FlipVector::from_indices(code, candidate.indices())
                .expect("candidates are information positions");
            let trace = self.sc.decode(code, channel, &flips);
            used += 1;
            let pass = code.crc_check(&trace.u_hat);
            history.push(Attempt {
                flip_set: candidate.clone(),
                crc_pass: pass,
            });
            if pass {
                return Self::finish(code, trace, true, used + 1, Some(candidate), history);
            }
            if candidate.order() < self.cfg.omega_max {
                pool.extend(select_candidates(
                    &trace,
                    &candidate,
                    code,
                    &self.cfg.metric,
                ));
                pool.sort_by(|a, b| pool_order(b, a));
                let keep = budget - used;
                if pool.len() > keep {
                    pool.drain(..pool.len() - keep);
                }
            }
            last = trace;
        }
        Self::finish(code, last, false, used + 1, None, history)
    }
}

pub fn dscf_decode(code: &PolarCode, frame: &LlrFrame, cfg: &DscfConfig) -> Result<DecodeOutcome> {
    if frame.len() != code.block_len() {
        return Err(Error::Length {
            got: frame.len(),
            expected: code.block_len(),
        });
    }
    Ok(DscfDecoder::new(code, cfg.clone())?.decode(code, &frame.values))
}
