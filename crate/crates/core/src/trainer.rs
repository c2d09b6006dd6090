//! Training of the additive flip-metric parameters from all-zero frames.
//!
//! Each training frame is pushed through an unrolled flip pipeline of
//! exactly `omega_max` stages. Stage `w` picks the single best child of the
//! previous flip set under the beta metric, re-decodes, and is charged
//!
//! ```text
//! l_w = 1 / (1 + e^{L_t})^2   if the CRC still fails and i*_w >= t_w
//! ```
//!
//! where `t_w` is the first non-zero information bit of the new estimate and
//! `L_t` its decision LLR, sign-flipped when `t_w` is itself a flipped
//! position so that the smooth term tracks the hard error `(u_hat_t - 0)^2`. A stage whose predecessor already passed the CRC
//! keeps the flip vector and costs nothing.
//!
//! The loss only moves when some argmin selection changes, so its gradient
//! is zero almost everywhere. Beta is therefore fitted per order by a grid
//! scan followed by golden-section refinement on mini-batches; a two-sided
//! perturbation (SPSA) optimizer is available for comparison.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{ebn0_to_sigma2, frame_rng, mix_seed, transmit, LlrFrame};
use crate::code::PolarCode;
use crate::error::{Error, Result};
use crate::metrics::{select_candidates, FlipSet, MetricKind};
use crate::sc::{FlipVector, ScDecoder};

/// Which beta metric is trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricForm {
    Exact,
    Relu,
}

impl MetricForm {
    pub fn metric(self, beta: &[f64]) -> MetricKind {
        match self {
            MetricForm::Exact => MetricKind::BetaExact(beta.to_vec()),
            MetricForm::Relu => MetricKind::BetaRelu(beta.to_vec()),
        }
    }
}

impl fmt::Display for MetricForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricForm::Exact => "exact",
            MetricForm::Relu => "relu",
        })
    }
}

impl FromStr for MetricForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" | "beta-exact" => Ok(MetricForm::Exact),
            "relu" | "beta-relu" => Ok(MetricForm::Relu),
            other => Err(Error::Config(format!("unknown metric form `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    /// Per-order grid scan plus golden-section refinement.
    CoordinateSearch,
    /// Simultaneous-perturbation finite differences with step `learning_rate`.
    Spsa,
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "coordinate" | "coord" => Ok(Optimizer::CoordinateSearch),
            "spsa" => Ok(Optimizer::Spsa),
            other => Err(Error::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub ebn0_points_db: Vec<f64>,
    pub samples_per_point: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta_init_range: (f64, f64),
    pub metric_form: MetricForm,
    pub omega_max: usize,
    pub seed: u64,
    /// Step size of the SPSA optimizer; unused by the coordinate search.
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    /// Interior grid points scanned per order and epoch.
    pub grid_points: usize,
    /// Golden-section stopping width.
    pub resolution: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            ebn0_points_db: vec![2.0, 3.0, 4.0, 5.0],
            samples_per_point: 250_000,
            epochs: 50,
            batch_size: 256,
            beta_init_range: (0.0, 10.0),
            metric_form: MetricForm::Exact,
            omega_max: 2,
            seed: 1,
            learning_rate: 0.001,
            optimizer: Optimizer::CoordinateSearch,
            grid_points: 99,
            resolution: 1e-3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.beta_init_range;
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.ebn0_points_db.is_empty() {
            return fail("no Eb/N0 points");
        }
        if self.samples_per_point == 0 || self.epochs == 0 || self.batch_size == 0 {
            return fail("sample, epoch and batch counts must be positive");
        }
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
            return fail("beta range must satisfy 0 <= low < high");
        }
        if self.omega_max == 0 {
            return fail("omega must be at least 1");
        }
        if self.grid_points == 0 || self.resolution.is_nan() || self.resolution <= 0.0 {
            return fail("grid must have points and a positive resolution");
        }
        Ok(())
    }
}

/// Mean losses of one beta vector over a set of frames.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub epoch: usize,
    pub beta: Vec<f64>,
    /// Sum over orders of the mean per-order loss.
    pub lambda_hat: f64,
    pub per_order: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub beta: Vec<f64>,
    /// Loss of the returned beta over the whole training set.
    pub final_loss: LossRecord,
    /// Mini-batch loss after every epoch.
    pub history: Vec<LossRecord>,
    pub frames: usize,
    pub failing_frames: usize,
    /// Stages where the CRC failed on an all-zero estimate, or no child
    /// existed; charged zero loss.
    pub degenerate_stages: usize,
}

/// Per-stage detail of the unrolled pipeline, for inspection and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTrace {
    pub flip_set: FlipSet,
    pub crc_pass: bool,
    pub first_error: Option<usize>,
    pub loss: f64,
}

/// Frame loss with reusable workspace.
#[derive(Debug, Clone)]
pub struct LossEvaluator {
    sc: ScDecoder,
}

impl LossEvaluator {
    pub fn new(code: &PolarCode) -> Self {
        Self {
            sc: ScDecoder::for_code(code),
        }
    }

    /// Unrolls `omega_max` stages on an all-zero-codeword frame. Returns the
    /// per-stage records; stages after a CRC pass are omitted (they carry
    /// zero loss).
    pub fn stages(
        &mut self,
        code: &PolarCode,
        channel: &[f64],
        beta: &[f64],
        form: MetricForm,
        omega_max: usize,
    ) -> Vec<StageTrace> {
        let metric = form.metric(beta);
        let mut trace = self
            .sc
            .decode(code, channel, &FlipVector::keep_all(code.block_len()));
        let mut parent = FlipSet::empty();
        let mut out = Vec::with_capacity(omega_max);
        if code.crc_check(&trace.u_hat) {
            return out;
        }
        for _ in 0..omega_max {
            let Some(best) = select_candidates(&trace, &parent, code, &metric)
                .into_iter()
                .next()
            else {
                out.push(StageTrace {
                    flip_set: parent.clone(),
                    crc_pass: false,
                    first_error: None,
                    loss: 0.0,
                });
                break;
            };
            let flips = FlipVector::from_indices(code, best.indices())
                .expect("candidates are information positions");
            trace = self.sc.decode(code, channel, &flips);
            let crc_pass = code.crc_check(&trace.u_hat);
            let first_error = code
                .info_set()
                .iter()
                .copied()
                .find(|&i| trace.u_hat[i] != 0);
            let selected = best.last().expect("non-empty child");
            let loss = match first_error {
                Some(t) if !crc_pass && selected >= t => {
                    let effective = trace.decision_llrs[t] * f64::from(trace.flips.as_slice()[t]);
                    let s = 1.0 / (1.0 + effective.exp());
                    s * s
                }
                _ => 0.0,
            };
            out.push(StageTrace {
                flip_set: best.clone(),
                crc_pass,
                first_error,
                loss,
            });
            if crc_pass {
                break;
            }
            parent = best;
        }
        out
    }

    pub fn frame_loss(
        &mut self,
        code: &PolarCode,
        channel: &[f64],
        beta: &[f64],
        form: MetricForm,
        omega_max: usize,
    ) -> Vec<f64> {
        let mut losses = vec![0.0; omega_max];
        for (slot, stage) in losses
            .iter_mut()
            .zip(self.stages(code, channel, beta, form, omega_max))
        {
            *slot = stage.loss;
        }
        losses
    }
}

/// Per-order losses `(l_1, .., l_omega_max)` of one all-zero-codeword frame.
/// Each entry lies in [0, 1].
pub fn frame_loss(
    code: &PolarCode,
    frame: &LlrFrame,
    beta: &[f64],
    form: MetricForm,
    omega_max: usize,
) -> Vec<f64> {
    LossEvaluator::new(code).frame_loss(code, &frame.values, beta, form, omega_max)
}

/// Lazily generated all-zero-codeword training frames.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    sigma2: Vec<f64>,
    samples_per_point: usize,
    block_len: usize,
    seed: u64,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.sigma2.len() * self.samples_per_point
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Frame `idx`; frames of point `p` occupy
    /// `p * samples_per_point .. (p + 1) * samples_per_point`.
    pub fn frame(&self, idx: usize) -> LlrFrame {
        let point = idx / self.samples_per_point;
        let within = idx % self.samples_per_point;
        let mut rng = frame_rng(mix_seed(self.seed, point as u64), within as u64);
        transmit(&vec![0u8; self.block_len], self.sigma2[point], &mut rng)
            .expect("validated variance")
    }

    pub fn iter(&self) -> impl Iterator<Item = LlrFrame> + '_ {
        (0..self.len()).map(|i| self.frame(i))
    }
}

/// `samples_per_point` all-zero frames at every Eb/N0 point, reproducible
/// from `cfg.seed`.
pub fn make_training_set(code: &PolarCode, cfg: &TrainConfig) -> Result<TrainingSet> {
    let sigma2 = cfg
        .ebn0_points_db
        .iter()
        .map(|&db| ebn0_to_sigma2(db, code.rate()))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainingSet {
        sigma2,
        samples_per_point: cfg.samples_per_point,
        block_len: code.block_len(),
        seed: cfg.seed,
    })
}

/// Training frames whose initial SC pass fails the CRC. All other frames
/// contribute zero loss for every beta.
struct FailingFrames {
    ids: Vec<usize>,
    llrs: Vec<Vec<f64>>,
}

fn collect_failing(code: &PolarCode, set: &TrainingSet) -> FailingFrames {
    let found: Vec<(usize, Vec<f64>)> = (0..set.len())
        .into_par_iter()
        .map_init(
            || ScDecoder::for_code(code),
            |sc, idx| {
                let frame = set.frame(idx);
                let trace = sc.decode(code, &frame.values, &FlipVector::keep_all(code.block_len()));
                (!code.crc_check(&trace.u_hat)).then_some((idx, frame.values))
            },
        )
        .flatten()
        .collect();
    let (ids, llrs) = found.into_iter().unzip();
    FailingFrames { ids, llrs }
}

struct Objective<'a> {
    code: &'a PolarCode,
    form: MetricForm,
    omega_max: usize,
}

impl Objective<'_> {
    /// Mean per-order loss over `denominator` frames, of which only the
    /// listed failing ones can be non-zero. Summation runs in list order.
    fn evaluate(
        &self,
        frames: &[&[f64]],
        denominator: usize,
        beta: &[f64],
    ) -> Result<(f64, Vec<f64>, usize)> {
        let per_frame: Vec<(Vec<StageTrace>, Vec<f64>)> = frames
            .par_iter()
            .map_init(
                || LossEvaluator::new(self.code),
                |ev, llrs| {
                    let stages = ev.stages(self.code, llrs, beta, self.form, self.omega_max);
                    let mut losses = vec![0.0; self.omega_max];
                    for (slot, s) in losses.iter_mut().zip(&stages) {
                        *slot = s.loss;
                    }
                    (stages, losses)
                },
            )
            .collect();
        let mut sums = vec![0.0; self.omega_max];
        let mut degenerate = 0;
        for (stages, losses) in &per_frame {
            degenerate += stages
                .iter()
                .filter(|s| !s.crc_pass && s.first_error.is_none())
                .count();
            for (acc, l) in sums.iter_mut().zip(losses) {
                *acc += l;
            }
        }
        let denom = denominator.max(1) as f64;
        let per_order: Vec<f64> = sums.iter().map(|s| s / denom).collect();
        let lambda: f64 = per_order.iter().sum();
        if !lambda.is_finite() {
            return Err(Error::NonFiniteLoss(beta.to_vec()));
        }
        Ok((lambda, per_order, degenerate))
    }
}

fn golden_section(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        // `<=` keeps the lower point on ties.
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Interior grid `low + (high - low) k / (points + 1)`, k = 1..=points.
fn beta_grid(range: (f64, f64), points: usize) -> Vec<f64> {
    let (lo, hi) = range;
    let step = (hi - lo) / (points + 1) as f64;
    (1..=points).map(|k| lo + step * k as f64).collect()
}

/// Fits one beta per error order by minimising the mean frame loss.
pub fn train_beta(code: &PolarCode, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let set = make_training_set(code, cfg)?;
    let failing = collect_failing(code, &set);
    let objective = Objective {
        code,
        form: cfg.metric_form,
        omega_max: cfg.omega_max,
    };
    let (lo, hi) = cfg.beta_init_range;
    let grid = beta_grid(cfg.beta_init_range, cfg.grid_points);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0x0074_7261_696e));
    let mut beta: Vec<f64> = (0..cfg.omega_max)
        .map(|_| {
            let v: f64 = rng.random_range(lo..hi);
            v.max(grid[0])
        })
        .collect();

    let batch_size = cfg.batch_size.min(set.len());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut picked = index::sample(&mut rng, set.len(), batch_size).into_vec();
        picked.sort_unstable();
        let batch: Vec<&[f64]> = picked
            .iter()
            .filter_map(|id| failing.ids.binary_search(id).ok())
            .map(|pos| failing.llrs[pos].as_slice())
            .collect();

        match cfg.optimizer {
            Optimizer::CoordinateSearch => {
                for order in 0..cfg.omega_max {
                    let mut eval = |b: f64| -> Result<f64> {
                        let mut trial = beta.clone();
                        trial[order] = b;
                        Ok(objective.evaluate(&batch, batch_size, &trial)?.0)
                    };
                    let mut best_k = 0;
                    let mut best = f64::INFINITY;
                    for (k, &b) in grid.iter().enumerate() {
                        let v = eval(b)?;
                        if v < best {
                            best = v;
                            best_k = k;
                        }
                    }
                    let mut chosen = grid[best_k];
                    let left = if best_k == 0 { lo } else { grid[best_k - 1] };
                    let right = grid.get(best_k + 1).copied().unwrap_or(hi);
                    let (x, v) = golden_section(&mut eval, left, right, cfg.resolution)?;
                    if v < best && x > 0.0 {
                        chosen = x;
                    }
                    beta[order] = chosen;
                }
            }
            Optimizer::Spsa => {
                let c = 0.05 * (hi - lo);
                let delta: Vec<f64> = (0..cfg.omega_max)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                let shifted = |sign: f64| -> Vec<f64> {
                    beta.iter()
                        .zip(&delta)
                        .map(|(b, d)| (b + sign * c * d).clamp(grid[0], hi))
                        .collect()
                };
                let plus = objective.evaluate(&batch, batch_size, &shifted(1.0))?.0;
                let minus = objective.evaluate(&batch, batch_size, &shifted(-1.0))?.0;
                for (b, d) in beta.iter_mut().zip(&delta) {
                    let grad = (plus - minus) / (2.0 * c * d);
                    *b = (*b - cfg.learning_rate * grad).clamp(grid[0], hi);
                }
            }
        }

        let (lambda_hat, per_order, _) = objective.evaluate(&batch, batch_size, &beta)?;
        history.push(LossRecord {
            epoch,
            beta: beta.clone(),
            lambda_hat,
            per_order,
        });
        candidates.push(beta.clone());
    }

    // Mini-batch iterates are noisy; keep the one with the lowest loss over
    // the whole training set (earliest epoch on ties).
    let all: Vec<&[f64]> = failing.llrs.iter().map(Vec::as_slice).collect();
    let mut best: Option<(LossRecord, usize)> = None;
    for (epoch, cand) in candidates.iter().enumerate() {
        if best.as_ref().is_some_and(|(b, _)| &b.beta == cand) {
            continue;
        }
        let (lambda_hat, per_order, degenerate) = objective.evaluate(&all, set.len(), cand)?;
        if best.as_ref().is_none_or(|(b, _)| lambda_hat < b.lambda_hat) {
            best = Some((
                LossRecord {
                    epoch,
                    beta: cand.clone(),
                    lambda_hat,
                    per_order,
                },
                degenerate,
            ));
        }
    }
    let (final_loss, degenerate_stages) = best.expect("at least one epoch");
    if degenerate_stages > 0 {
        log::warn!(
            "{degenerate_stages} stage(s) failed the CRC without a detectable first error or child; charged zero loss"
        );
    }
    Ok(TrainOutcome {
        beta: final_loss.beta.clone(),
        final_loss,
        history,
        frames: set.len(),
        failing_frames: failing.ids.len(),
        degenerate_stages,
    })
}

/// Key-value report of a training run.
pub fn render_report(cfg: &TrainConfig, outcome: &TrainOutcome, code_hash: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "metric_form={}", cfg.metric_form);
    let _ = writeln!(out, "metric={}", cfg.metric_form.metric(&outcome.beta));
    for (k, b) in outcome.beta.iter().enumerate() {
        let _ = writeln!(out, "beta_{}={}", k + 1, b);
    }
    let _ = writeln!(out, "final_loss={}", outcome.final_loss.lambda_hat);
    for (k, l) in outcome.final_loss.per_order.iter().enumerate() {
        let _ = writeln!(out, "loss_{}={}", k + 1, l);
    }
    let points: Vec<String> = cfg.ebn0_points_db.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(out, "ebn0_db={}", points.join(","));
    let _ = writeln!(out, "samples_per_point={}", cfg.samples_per_point);
    let _ = writeln!(out, "epochs={}", cfg.epochs);
    let _ = writeln!(out, "batch_size={}", cfg.batch_size);
    let _ = writeln!(out, "learning_rate={}", cfg.learning_rate);
    let _ = writeln!(out, "frames={}", outcome.frames);
    let _ = writeln!(out, "failing_frames={}", outcome.failing_frames);
    let _ = writeln!(out, "seed={}", cfg.seed);
    let _ = writeln!(out, "code_sha256={code_hash}");
    out
}
