//! Link-level study library for codebook-based single-layer uplink MIMO
//! precoding.
//!
//! The crate models one question end to end: how much does per-sub-band
//! precoder selection buy over a single wide-band choice, for the legacy
//! codebooks and for finer phase-grid codebooks, under a frequency-selective
//! channel? It provides:
//!
//! - [`numerics`]: small dense complex linear algebra (Gram matrices,
//!   Kronecker products, a Hermitian dominant-eigenpair solver),
//! - [`codebook`]: constant-modulus single-layer precoder codebooks and a
//!   text export format,
//! - [`channel`]: a tapped-delay-line OFDM channel grid with deterministic
//!   per-trial randomness and analytic fixtures,
//! - [`precoding`]: sub-band partitioning, per-sub-band second-order
//!   statistics and precoder selection,
//! - [`linkabs`]: capacity-domain effective-SNR mapping and a logistic
//!   transport-block error model,
//! - [`sim`]: the Monte-Carlo sweep engine, study helpers, config parsing
//!   and CSV output used by the `sbprec` binary.
//!
//! All math is generic over the real scalar type via [`numerics::Scalar`]
//! (`f32` or `f64`); the aliases below pin the `f64` instantiations used by
//! the CLI and most tests.

pub mod channel;
pub mod codebook;
pub mod error;
pub mod linkabs;
pub mod numerics;
pub mod precoding;
pub mod sim;

pub use error::{Error, Result};

/// `f64` complex vector.
pub type CVec64 = numerics::CVec<f64>;
/// `f64` complex matrix.
pub type CMat64 = numerics::CMat<f64>;
/// `f64` codebook.
pub type Codebook64 = codebook::Codebook<f64>;
/// `f64` grid geometry.
pub type GridSpec64 = channel::GridSpec<f64>;
/// `f64` power-delay profile.
pub type TdlProfile64 = channel::TdlProfile<f64>;
/// `f64` channel realization.
pub type ChannelGrid64 = channel::ChannelGrid<f64>;
/// `f64` sub-band statistics.
pub type SubbandStats64 = precoding::SubbandStats<f64>;
/// `f64` sub-band assignment.
pub type SubbandAssignment64 = precoding::SubbandAssignment<f64>;
/// `f64` link-abstraction error model.
pub type McsModel64 = linkabs::McsModel<f64>;
/// `f64` simulation configuration.
pub type SimConfig64 = sim::SimConfig<f64>;
/// `f64` sweep result.
pub type SweepResult64 = sim::SweepResult<f64>;
