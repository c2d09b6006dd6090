//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints its verdict even when the others pass.

mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use polarflip::channel::modulate_with_noise;
use polarflip::metrics::{q_alpha_exact, q_alpha_relu, q_beta_exact, relu};
use polarflip::sc::{FlipVector, ScDecoder, ScTrace};
use polarflip::sim::{simulate_frames, DecoderSpec, FrameOutcome};
use polarflip::trainer::{MetricForm, TrainConfig};
use polarflip::{train_beta, CrcSpec, DscfConfig, FlipSet, MetricKind, PolarCode};
use rand::Rng;
use rand_distr::StandardNormal;
use support::*;

const TABLE_EXACT: [f64; 2] = [2.206, 1.225];
const TABLE_RELU: [f64; 2] = [2.801, 2.196];
const ALPHA: f64 = 0.3367;
const SEED: u64 = 2024;

type Verdict = Result<String, String>;

fn check(cond: bool, detail: String) -> Verdict {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dscf(omega: usize, m: usize, metric: MetricKind) -> DecoderSpec {
    DecoderSpec::Dscf(DscfConfig::new(omega, m, metric).unwrap())
}

/// Outcomes of frames `0..frames` at `ebn0_db`; every decoder sees the
/// same frames for the same seed.
fn run(code: &PolarCode, decoder: &DecoderSpec, ebn0_db: f64, frames: u64) -> Vec<FrameOutcome> {
    simulate_frames(code, decoder, SEED, ebn0_db, 0..frames).unwrap()
}

fn errors(outcomes: &[FrameOutcome]) -> usize {
    outcomes.iter().filter(|o| o.frame_error).count()
}

fn random_trace(r: &mut impl Rng, code: &PolarCode, max_mag: f64) -> (ScTrace, FlipSet) {
    let llrs: Vec<f64> = (0..code.block_len())
        .map(|_| r.random_range(-max_mag..max_mag))
        .collect();
    let info = code.info_set();
    let mut picks: Vec<usize> = (0..r.random_range(1..=3))
        .map(|_| info[r.random_range(0..info.len())])
        .collect();
    picks.sort_unstable();
    picks.dedup();
    let trace = ScTrace {
        u_hat: llrs.iter().map(|&l| (l < 0.0) as u8).collect(),
        decision_llrs: llrs,
        flips: FlipVector::keep_all(code.block_len()),
    };
    (trace, FlipSet::new(code, picks).unwrap())
}

fn metric_oracle() -> Verdict {
    let code = ga_code(5, 14, CrcSpec::new(6, 0x43).unwrap());
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let alpha = r.random_range(0.05..2.0);
        let beta = r.random_range(0.0..5.0);
        let (trace, set) = random_trace(&mut r, &code, 8.0);
        let llrs = &trace.decision_llrs;
        let info = code.info_set();
        let ix = set.indices();
        let qa = neg_log_p_star(
            llrs,
            info,
            ix,
            |x| 1.0 / (1.0 + (-alpha * x).exp()),
            |x| 1.0 / (1.0 + (alpha * x).exp()),
        ) / alpha;
        let qb = neg_log_p_star(
            llrs,
            info,
            ix,
            |x| 1.0 / (1.0 + (beta - x).exp()),
            |x| 1.0 / (1.0 + (x - beta).exp()),
        ) + set.order() as f64 * beta;
        worst = worst
            .max(rel_err(
                q_alpha_exact(&trace, &set, &code, alpha).unwrap(),
                qa,
            ))
            .max(rel_err(
                q_beta_exact(&trace, &set, &code, beta).unwrap(),
                qb,
            ));
    }
    check(
        worst < 1e-9,
        format!("2000 comparisons, max relative error {worst:.2e}"),
    )
}

fn alpha_collapse() -> Verdict {
    let code = ga_code(5, 14, CrcSpec::new(6, 0x43).unwrap());
    let mut r = rng(2);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let (trace, set) = random_trace(&mut r, &code, 20.0);
        let q = q_alpha_relu(&trace, &set).unwrap();
        let last = set.last().unwrap();
        for alpha in [0.1, ALPHA, 1.0] {
            let head: f64 = code
                .info_set()
                .iter()
                .filter(|&&i| i <= last)
                .map(|&i| relu(-alpha * trace.decision_llrs[i].abs()) / alpha)
                .sum();
            let literal = head
                + set
                    .indices()
                    .iter()
                    .map(|&i| trace.decision_llrs[i].abs())
                    .sum::<f64>();
            mismatches += (literal.to_bits() != q.to_bits()) as usize;
        }
    }
    check(
        mismatches == 0,
        format!("{mismatches} mismatches over 3000 evaluations"),
    )
}

fn relu_degradation() -> Verdict {
    let code = fixture_code();
    let frames = 20_000;
    let exact = errors(&run(
        &code,
        &dscf(2, 64, MetricKind::AlphaExact(ALPHA)),
        3.0,
        frames,
    ));
    let simplified = errors(&run(
        &code,
        &dscf(2, 64, MetricKind::AlphaRelu),
        3.0,
        frames,
    ));
    let ratio = simplified as f64 / exact.max(1) as f64;
    check(
        exact >= 100 && simplified >= 100 && ratio >= 1.15,
        format!(
            "3.0 dB, {frames} frames: FER alpha-exact {:.3e} ({exact} err), alpha-relu {:.3e} ({simplified} err), ratio {ratio:.2}",
            exact as f64 / frames as f64,
            simplified as f64 / frames as f64
        ),
    )
}

fn near_ideal_omega_one() -> Verdict {
    let code = fixture_code();
    let frames = 10_000;
    let genie = errors(&run(&code, &DecoderSpec::Genie { omega: 1 }, 3.0, frames));
    let exact = errors(&run(
        &code,
        &dscf(1, 8, MetricKind::BetaExact(TABLE_EXACT.to_vec())),
        3.0,
        frames,
    ));
    let hw = errors(&run(
        &code,
        &dscf(1, 8, MetricKind::BetaRelu(TABLE_RELU.to_vec())),
        3.0,
        frames,
    ));
    let to_genie = exact as f64 / genie.max(1) as f64;
    let relu_vs_exact = (hw.max(exact) as f64) / (hw.min(exact).max(1) as f64);
    check(
        genie >= 100 && exact >= 100 && hw >= 100 && to_genie <= 1.3 && relu_vs_exact <= 1.15,
        format!(
            "3.0 dB, {frames} frames: errors genie {genie}, beta-exact {exact}, beta-relu {hw}; exact/genie {to_genie:.3}, relu vs exact {relu_vs_exact:.3}"
        ),
    )
}

fn attempts_convergence() -> Verdict {
    let code = fixture_code();
    let spec = dscf(2, 64, MetricKind::BetaExact(TABLE_EXACT.to_vec()));
    let points = [3.5, 4.0, 4.5];
    let means: Vec<f64> = points
        .iter()
        .map(|&db| {
            let out = run(&code, &spec, db, 20_000);
            out.iter().map(|o| o.attempts as f64).sum::<f64>() / out.len() as f64
        })
        .collect();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    check(
        decreasing && means[2] < 1.1,
        format!("mean attempts at {points:?} dB: {means:.4?}"),
    )
}

/// Stores the exact-form beta for the efficacy check.
fn training_sanity(trained: &mut Option<Vec<f64>>) -> Verdict {
    let code = fixture_code();
    let base = TrainConfig {
        samples_per_point: 25_000,
        seed: SEED,
        ..Default::default()
    };
    let exact = train_beta(
        &code,
        &TrainConfig {
            metric_form: MetricForm::Exact,
            ..base.clone()
        },
    )
    .unwrap();
    let relu = train_beta(
        &code,
        &TrainConfig {
            metric_form: MetricForm::Relu,
            ..base
        },
    )
    .unwrap();
    let (e, h) = (exact.beta, relu.beta);
    let near = |v: &[f64], t: &[f64; 2]| v.iter().zip(t).all(|(a, b)| (a - b).abs() <= 0.7);
    println!(
        "  info: within 0.7 of the published values: exact {}, relu {} (non-blocking)",
        near(&e, &TABLE_EXACT),
        near(&h, &TABLE_RELU)
    );
    let ok = e[0] > e[1] && h[0] > e[0] && h[1] > e[1];
    let detail = format!("exact beta {e:.4?}, relu beta {h:.4?}");
    *trained = Some(e);
    check(ok, detail)
}

fn trained_efficacy(trained: &Option<Vec<f64>>) -> Verdict {
    let Some(trained) = trained else {
        return Err("no trained beta available".into());
    };
    let code = fixture_code();
    let frames = 20_000;
    let table = errors(&run(
        &code,
        &dscf(2, 64, MetricKind::BetaExact(TABLE_EXACT.to_vec())),
        3.0,
        frames,
    ));
    let ours = errors(&run(
        &code,
        &dscf(2, 64, MetricKind::BetaExact(trained.clone())),
        3.0,
        frames,
    ));
    let ratio = ours.max(table) as f64 / ours.min(table).max(1) as f64;
    check(
        table >= 50 && ours >= 50 && ratio <= 1.5,
        format!(
            "3.0 dB, {frames} frames: errors with trained beta {ours}, with published beta {table}, ratio {ratio:.3}"
        ),
    )
}

fn genie_dominance() -> Verdict {
    let code = fixture_code();
    let frames = 10_000;
    let mut violations = 0;
    let mut false_positives = 0;
    for omega in [1, 2] {
        let genie = run(&code, &DecoderSpec::Genie { omega }, 2.5, frames);
        let flip = run(
            &code,
            &dscf(omega, 64, MetricKind::BetaExact(TABLE_EXACT.to_vec())),
            2.5,
            frames,
        );
        for (g, d) in genie.iter().zip(&flip) {
            if d.undetected() {
                false_positives += 1;
                continue;
            }
            violations += (d.recovered && !g.recovered) as usize;
        }
    }
    check(
        violations == 0,
        format!("2.5 dB, {frames} frames x omega in {{1,2}}: {violations} violations, {false_positives} CRC false positives excluded"),
    )
}

fn kernel_exactness() -> Verdict {
    let code = p8_5();
    let mut r = rng(9);
    let mut dec = ScDecoder::for_code(&code);
    let mut bad = 0;
    for _ in 0..1000 {
        let llrs: Vec<f64> = (0..8)
            .map(|_| 3.0 * r.sample::<f64, _>(StandardNormal))
            .collect();
        let trace = dec.decode(&code, &llrs, &FlipVector::keep_all(8));
        let reference = reference_sc(&llrs, code.frozen_mask(), &[]);
        let llr_ok = trace
            .decision_llrs
            .iter()
            .zip(&reference.decision_llrs)
            .all(|(a, b)| (a - b).abs() <= 1e-12);
        bad += (trace.u_hat != reference.u_hat || !llr_ok) as usize;
    }
    let mut roundtrip_failures = 0;
    for n in 3..=8u32 {
        let half = 1usize << (n - 1);
        let code = if n >= 4 {
            ga_code(n, half - 6, CrcSpec::new(6, 0x43).unwrap())
        } else {
            ga_code(n, half, CrcSpec::none())
        };
        let mut dec = ScDecoder::for_code(&code);
        for _ in 0..10_000 {
            let (word, x) = code
                .encode(&random_bits(&mut r, code.payload_len()))
                .unwrap();
            let noise: Vec<f64> = (0..x.len())
                .map(|_| 1e-3 * r.sample::<f64, _>(StandardNormal))
                .collect();
            let frame = modulate_with_noise(&x, &noise, 1e-4).unwrap();
            let trace = dec.decode(&code, &frame.values, &FlipVector::keep_all(x.len()));
            roundtrip_failures += (trace.u_hat != word.u) as usize;
        }
    }
    check(
        bad == 0 && roundtrip_failures == 0,
        format!("P(8,5): {bad}/1000 mismatches; noiseless round trip: {roundtrip_failures}/60000 failures"),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "8"] {
        let out = dir.path().join(format!("{workers}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_polarflip"))
            .args([
                "simulate",
                "--code",
                FIXTURE,
                "--decoder",
                "dscf:2:64:alpha-exact:0.3367",
                "--ebn0",
                "2,2.5,3",
                "--seed",
                "77",
                "--min-errors",
                "50",
                "--min-frames",
                "3000",
                "--workers",
                workers,
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        if !status.success() {
            return Err(format!("simulate exited with {status}"));
        }
        outputs.push(std::fs::read(out).unwrap());
    }
    check(
        outputs[0] == outputs[1],
        format!("{} bytes of CSV, workers 1 vs 8", outputs[0].len()),
    )
}

/// Runs one criterion, prints its verdict and returns 1 on failure.
fn criterion(name: &str, f: impl FnOnce() -> Verdict) -> usize {
    let start = Instant::now();
    let verdict = catch_unwind(AssertUnwindSafe(f));
    let secs = start.elapsed().as_secs_f64();
    let (failed, line) = match verdict {
        Ok(Ok(d)) => (0, format!("PASS criterion {name}: {d}")),
        Ok(Err(d)) => (1, format!("FAIL criterion {name}: {d}")),
        Err(_) => (1, format!("FAIL criterion {name}: panicked")),
    };
    println!("{line} [{secs:.1}s]");
    failed
}

fn main() -> ExitCode {
    let mut trained = None;
    let mut failed = 0;
    failed += criterion("1 metric oracle equivalence", metric_oracle);
    failed += criterion("2 alpha-relu independent of alpha", alpha_collapse);
    failed += criterion("3 alpha-relu degrades FER at omega=2", relu_degradation);
    failed += criterion("4 beta metrics near ideal at omega=1", near_ideal_omega_one);
    failed += criterion("5 mean attempts converge to 1", attempts_convergence);
    failed += criterion("6 trained beta ordering", || training_sanity(&mut trained));
    failed += criterion("7 trained beta FER efficacy", || trained_efficacy(&trained));
    failed += criterion("8 genie dominance", genie_dominance);
    failed += criterion("9 SC kernel exactness", kernel_exactness);
    failed += criterion("10 worker-count determinism", determinism);
    if failed == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
