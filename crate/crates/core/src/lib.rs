//! Polar codes with CRC, successive cancellation (SC) decoding, and dynamic
//! SC-flip decoding with multiplicative or trainable additive flip metrics.
//!
//! ```
//! use polarflip::{dscf_decode, CrcSpec, DscfConfig, FrozenSource, LlrFrame, MetricKind, PolarCode};
//!
//! let code = PolarCode::build(6, 24, CrcSpec::new(8, 0x107)?, FrozenSource::GaussianApproximation { design_ebn0_db: 2.0 })?;
//! let (word, x) = code.encode(&[1; 24])?;
//! let llrs: Vec<f64> = x.iter().map(|&b| if b == 0 { 4.0 } else { -4.0 }).collect();
//! let cfg = DscfConfig::new(2, 16, MetricKind::BetaExact(vec![2.2, 1.2]))?;
//! let out = dscf_decode(&code, &LlrFrame::new(llrs, 0.5)?, &cfg)?;
//! assert_eq!(out.payload_hat, word.payload);
//! # Ok::<(), polarflip::Error>(())
//! ```

pub mod channel;
pub mod code;
pub mod config;
pub mod construction;
pub mod crc;
pub mod dscf;
pub mod error;
pub mod inspect;
pub mod metrics;
pub mod sc;
pub mod sim;
pub mod trainer;

pub use channel::{ebn0_to_sigma2, frame_rng, mix_seed, transmit, LlrFrame};
pub use code::{polar_transform, MessageWord, PolarCode};
pub use config::Config;
pub use construction::{FrozenMask, FrozenSource};
pub use crc::CrcSpec;
pub use dscf::{dscf_decode, DecodeOutcome, DscfConfig, DscfDecoder};
pub use error::{Error, Result};
pub use inspect::{decode_one, read_llr_file, DecodeReport, FrameSource};
pub use metrics::{metric_value, select_candidates, FlipSet, MetricKind};
pub use sc::{genie_decode, sc_decode, FlipVector, ScDecoder, ScTrace};
pub use sim::{emit_csv, render_csv, run_sweep, DecoderSpec, SweepResult, SweepSpec};
pub use trainer::{frame_loss, train_beta, MetricForm, TrainConfig, TrainOutcome};
