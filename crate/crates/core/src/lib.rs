//! Copy-move forgery detection toolkit.
//!
//! The detector follows a two-branch dataflow:
//!
//! 1. **Localization.** The input is resized to a working size, expanded to a
//!    three-level scale pyramid and described per pixel by dense Zernike
//!    moments ([`zernike`]). A differentiable cross-scale PatchMatch
//!    ([`patchmatch`]) estimates two nearest-neighbor offset fields, one from
//!    complex moments and one from rotation-invariant magnitudes. Dense
//!    linear fitting ([`dlf`]) measures how well each offset field is
//!    explained by a local affine motion, and [`predictor`] turns those
//!    residuals into a copy-move probability mask.
//! 2. **Source/target discrimination.** The two offset fields are fused,
//!    per-pixel cues are warped across matched pairs and scored, and the sign
//!    of the pairwise score difference labels each detected pixel as source
//!    or target ([`ranking`]). The scorer is trained with the margin
//!    discrimination loss in [`losses`].
//!
//! [`synthgen`] builds labeled synthetic forgeries and [`pipeline`] wires the
//! stages into batch detection, evaluation and fixture generation.
//!
//! ```no_run
//! use cmfd::pipeline::{detect_image, PipelineConfig};
//!
//! # fn main() -> cmfd::Result<()> {
//! let cfg = PipelineConfig::default();
//! let report = detect_image("forged.png".as_ref(), "out".as_ref(), &cfg)?;
//! println!("{} copy-move pixels", report.foreground_pixels);
//! # Ok(())
//! # }
//! ```

pub mod dlf;
mod error;
pub mod imagecore;
pub mod losses;
pub mod morphology;
pub mod patchmatch;
pub mod pipeline;
pub mod predictor;
pub mod ranking;
pub mod synthgen;
pub mod zernike;

pub use error::{Error, Result};
