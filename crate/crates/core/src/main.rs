use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use polarflip::config::Config;
use polarflip::construction::FrozenSource;
use polarflip::inspect::{decode_one, read_llr_file, FrameSource};
use polarflip::sim::{emit_csv, render_csv, run_sweep, DecoderSpec, SweepSpec};
use polarflip::trainer::{render_report, train_beta, MetricForm, Optimizer, TrainConfig};
use polarflip::{CrcSpec, DscfConfig, MetricKind, PolarCode};

#[derive(Parser)]
#[command(
    name = "polarflip",
    version,
    about = "Polar SC / dynamic SC-flip simulator"
)]
struct Cli {
    /// key = value file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct CodeArgs {
    /// Frozen-set file; without it a code is built from --n/--k
    #[arg(long)]
    code: Option<PathBuf>,
    /// log2 of the block length
    #[arg(long)]
    n: Option<u32>,
    /// Payload bits
    #[arg(long)]
    k: Option<usize>,
    /// Design Eb/N0 of the Gaussian-approximation construction
    #[arg(long)]
    design_ebn0: Option<f64>,
    #[arg(long)]
    crc_width: Option<u32>,
    /// Generator polynomial in hex
    #[arg(long)]
    crc_poly: Option<String>,
}

#[derive(Args)]
struct DecoderArgs {
    /// sc, genie, dscf, or a full spec such as dscf:2:64:beta-exact:2.2,1.2
    #[arg(long)]
    decoder: Option<String>,
    /// alpha-exact:<a>, alpha-relu, beta-exact:<b1,b2>, beta-relu:<b1,b2>
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    omega: Option<usize>,
    /// Additional SC attempts
    #[arg(long)]
    attempts: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// FER and mean-attempts sweep over Eb/N0, written as CSV
    Simulate {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        decoder: DecoderArgs,
        /// Comma list or lo:step:hi
        #[arg(long)]
        ebn0: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        min_errors: Option<u64>,
        #[arg(long)]
        min_frames: Option<u64>,
        #[arg(long)]
        max_frames: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// CSV path; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the additive flip-metric offsets on all-zero frames
    Train {
        #[command(flatten)]
        code: CodeArgs,
        /// exact or relu
        #[arg(long)]
        form: Option<String>,
        #[arg(long)]
        omega: Option<usize>,
        #[arg(long)]
        ebn0: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
        /// lo,hi
        #[arg(long)]
        beta_range: Option<String>,
        /// coordinate or spsa
        #[arg(long)]
        optimizer: Option<String>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Report path; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode one frame and print every attempt
    Decode {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        decoder: DecoderArgs,
        /// One LLR per line; replaces the seeded frame
        #[arg(long)]
        llr_file: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Frame index within the seeded stream
        #[arg(long)]
        index: Option<u64>,
        /// Single Eb/N0 of the seeded frame
        #[arg(long)]
        ebn0: Option<f64>,
        /// Write the SC trace of the final attempt as CSV
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Build a frozen-set file with the Gaussian approximation
    Construct {
        #[command(flatten)]
        code: CodeArgs,
        /// Mask path; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl CodeArgs {
    fn apply(&self, cfg: &mut Config) {
        cfg.set_opt("code", self.code.as_ref().map(|p| p.display()));
        cfg.set_opt("n", self.n);
        cfg.set_opt("k", self.k);
        cfg.set_opt("design-ebn0", self.design_ebn0);
        cfg.set_opt("crc-width", self.crc_width);
        cfg.set_opt("crc-poly", self.crc_poly.as_ref());
    }
}

impl DecoderArgs {
    fn apply(&self, cfg: &mut Config) {
        cfg.set_opt("decoder", self.decoder.as_ref());
        cfg.set_opt("metric", self.metric.as_ref());
        cfg.set_opt("omega", self.omega);
        cfg.set_opt("attempts", self.attempts);
    }
}

fn crc_from(cfg: &Config) -> Result<Option<CrcSpec>> {
    let width: Option<u32> = cfg.get("crc-width")?;
    let poly = cfg.raw("crc-poly");
    Ok(match (width, poly) {
        (None, None) => None,
        (Some(0), _) => Some(CrcSpec::none()),
        (Some(w), Some(p)) => {
            let mut spec = CrcSpec::from_hex(w, p)?;
            if let Some(init) = cfg.raw("crc-init") {
                let init = u64::from_str_radix(init.trim_start_matches("0x"), 16)
                    .with_context(|| format!("bad crc-init `{init}`"))?;
                spec = spec.with_init(init);
            }
            Some(spec)
        }
        _ => bail!("crc-width and crc-poly must be given together"),
    })
}

/// The code and a digest identifying it.
fn load_code(cfg: &Config) -> Result<(PolarCode, String)> {
    let crc = crc_from(cfg)?;
    let code = match cfg.raw("code") {
        Some(path) => PolarCode::from_mask_file(path, crc)?,
        None => PolarCode::build(
            cfg.get_or("n", 8)?,
            cfg.get_or("k", 128)?,
            crc.unwrap_or_default(),
            FrozenSource::GaussianApproximation {
                design_ebn0_db: cfg.get_or("design-ebn0", 2.0)?,
            },
        )?,
    };
    let digest = Sha256::digest(code.to_mask().render().as_bytes());
    let hash = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok((code, hash))
}

fn decoder_from(cfg: &Config) -> Result<DecoderSpec> {
    let name = cfg.raw("decoder").unwrap_or("dscf");
    if name.contains(':') {
        return Ok(name.parse()?);
    }
    let omega = cfg.get_or("omega", 2)?;
    Ok(match name {
        "sc" => DecoderSpec::Sc,
        "genie" => DecoderSpec::Genie { omega },
        "dscf" => {
            let metric: MetricKind = cfg
                .raw("metric")
                .unwrap_or("beta-exact:2.206,1.225")
                .parse()?;
            DecoderSpec::Dscf(DscfConfig::new(omega, cfg.get_or("attempts", 64)?, metric)?)
        }
        other => bail!("unknown decoder `{other}`"),
    })
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Simulate {
            code,
            decoder,
            ebn0,
            seed,
            min_errors,
            min_frames,
            max_frames,
            workers,
            out,
        } => {
            code.apply(&mut cfg);
            decoder.apply(&mut cfg);
            cfg.set_opt("ebn0", ebn0);
            cfg.set_opt("seed", seed);
            cfg.set_opt("min-errors", min_errors);
            cfg.set_opt("min-frames", min_frames);
            cfg.set_opt("max-frames", max_frames);
            cfg.set_opt("workers", workers);
            cfg.set_opt("out", out.map(|p| p.display().to_string()));
            let (code, _) = load_code(&cfg)?;
            let spec = SweepSpec {
                ebn0_db: cfg
                    .get_list("ebn0")?
                    .unwrap_or_else(|| vec![1.0, 1.5, 2.0, 2.5, 3.0]),
                min_frames: cfg.get_or("min-frames", 100_000)?,
                min_frame_errors: cfg.get_or("min-errors", 50)?,
                max_frames: cfg.get_or("max-frames", 10_000_000)?,
                decoder: decoder_from(&cfg)?,
                seed: cfg.get_or("seed", 1)?,
                workers: cfg.get_or("workers", default_workers())?,
            };
            log::info!(
                "simulating {} with {} worker(s)",
                spec.decoder,
                spec.workers
            );
            let result = run_sweep(&code, &spec)?;
            for p in &result.points {
                log::info!(
                    "{} dB: {} frames, {} errors, {:.1?}",
                    p.ebn0_db,
                    p.frames,
                    p.frame_errors,
                    p.wall_time
                );
            }
            match cfg.raw("out") {
                Some(path) => emit_csv(&result, path)?,
                None => print!("{}", render_csv(&result)),
            }
        }
        Command::Train {
            code,
            form,
            omega,
            ebn0,
            samples,
            epochs,
            batch,
            beta_range,
            optimizer,
            learning_rate,
            seed,
            workers,
            out,
        } => {
            code.apply(&mut cfg);
            cfg.set_opt("form", form);
            cfg.set_opt("omega", omega);
            cfg.set_opt("ebn0", ebn0);
            cfg.set_opt("samples", samples);
            cfg.set_opt("epochs", epochs);
            cfg.set_opt("batch", batch);
            cfg.set_opt("beta-range", beta_range);
            cfg.set_opt("optimizer", optimizer);
            cfg.set_opt("learning-rate", learning_rate);
            cfg.set_opt("seed", seed);
            cfg.set_opt("workers", workers);
            let (code, hash) = load_code(&cfg)?;
            let defaults = TrainConfig::default();
            let beta_init_range = match cfg.get_list("beta-range")? {
                None => defaults.beta_init_range,
                Some(v) if v.len() == 2 => (v[0], v[1]),
                Some(_) => bail!("beta-range must be `lo,hi`"),
            };
            let train = TrainConfig {
                ebn0_points_db: cfg.get_list("ebn0")?.unwrap_or(defaults.ebn0_points_db),
                samples_per_point: cfg.get_or("samples", defaults.samples_per_point)?,
                epochs: cfg.get_or("epochs", defaults.epochs)?,
                batch_size: cfg.get_or("batch", defaults.batch_size)?,
                beta_init_range,
                metric_form: cfg
                    .get::<MetricForm>("form")?
                    .unwrap_or(defaults.metric_form),
                omega_max: cfg.get_or("omega", defaults.omega_max)?,
                seed: cfg.get_or("seed", defaults.seed)?,
                learning_rate: cfg.get_or("learning-rate", defaults.learning_rate)?,
                optimizer: cfg
                    .get::<Optimizer>("optimizer")?
                    .unwrap_or(defaults.optimizer),
                ..defaults
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.get_or("workers", default_workers())?)
                .build()?;
            let outcome = pool.install(|| train_beta(&code, &train))?;
            for rec in &outcome.history {
                log::info!(
                    "epoch {}: beta {:?} loss {}",
                    rec.epoch,
                    rec.beta,
                    rec.lambda_hat
                );
            }
            write_or_print(out.as_deref(), &render_report(&train, &outcome, &hash))?;
        }
        Command::Decode {
            code,
            decoder,
            llr_file,
            seed,
            index,
            ebn0,
            trace,
        } => {
            code.apply(&mut cfg);
            decoder.apply(&mut cfg);
            cfg.set_opt("seed", seed);
            cfg.set_opt("index", index);
            cfg.set_opt("ebn0", ebn0);
            let (code, _) = load_code(&cfg)?;
            let source = match llr_file {
                Some(path) => FrameSource::Llrs(read_llr_file(path, &code)?),
                None => FrameSource::Seed {
                    seed: cfg.get_or("seed", 1)?,
                    index: cfg.get_or("index", 0)?,
                    ebn0_db: cfg.get_or("ebn0", 2.0)?,
                },
            };
            let report = decode_one(&code, &source, &decoder_from(&cfg)?)?;
            print!("{}", report.render());
            if let Some(path) = trace {
                write_or_print(Some(&path), &report.trace.to_csv(&code))?;
            }
        }
        Command::Construct { code, out } => {
            code.apply(&mut cfg);
            if cfg.raw("code").is_some() {
                bail!("construct builds a new frozen set; drop --code");
            }
            let (code, _) = load_code(&cfg)?;
            let mut mask = code.to_mask();
            mask.meta.insert("construction".into(), "ga".into());
            mask.meta.insert(
                "design-ebn0-db".into(),
                cfg.get_or("design-ebn0", 2.0f64)?.to_string(),
            );
            write_or_print(out.as_deref(), &mask.render())?;
        }
    }
    Ok(())
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
