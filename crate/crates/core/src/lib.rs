//! End-to-end toolkit for FMCW radar interference mitigation.
//!
//! The crate covers the full experiment loop: synthesis of dechirped radar
//! frames with mutual interference ([`synth`]), the windowed 3-D FFT that
//! turns a frame into a range/Doppler/angle map ([`spectrum`]), a cell-averaging
//! CFAR detector with a continuous relaxation that admits gradients ([`cfar`]),
//! a small complex-valued convolutional network trained through that detector
//! ([`cvnn`], [`loss`]), classical interference mitigation baselines
//! ([`baselines`]), tolerant detection scoring ([`metrics`]), and the on-disk
//! formats tying it together ([`io`], [`dataset`]).
//!
//! All numerics are generic over [`Scalar`], so the same code runs in `f32`
//! for throughput and in `f64` for gradient checks and reference tests.

pub mod baselines;
pub mod cfar;
pub mod cvnn;
pub mod dataset;
pub mod error;
pub mod fft;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod spectrum;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{BoolTensor, ComplexTensor, RealTensor};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point element type for every numeric routine in this crate.
///
/// `f32` and `f64` implement it; nothing else is expected to. The FFT bound
/// comes from the FFT backend and is satisfied by both.
pub trait Scalar:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + rustfft::FftNum
    + Default
    + std::fmt::Debug
    + std::fmt::Display
    + 'static
{
    /// Lossy conversion from `f64`, used for constants and accumulators.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Scalar")
    }
    /// Widening conversion to `f64` for accumulation and reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex sample in the working precision.
pub type Complex<T> = num_complex::Complex<T>;

/// Single-precision complex sample, the storage type of all datasets.
pub type C32 = num_complex::Complex<f32>;
/// Double-precision complex sample, used by oracles and gradient checks.
pub type C64 = num_complex::Complex<f64>;

/// Radar cube or spectrum map in single precision.
pub type ComplexTensor32 = ComplexTensor<f32>;
/// Radar cube or spectrum map in double precision.
pub type ComplexTensor64 = ComplexTensor<f64>;
/// Detection or power map in single precision.
pub type RealTensor32 = RealTensor<f32>;
/// Detection or power map in double precision.
pub type RealTensor64 = RealTensor<f64>;
