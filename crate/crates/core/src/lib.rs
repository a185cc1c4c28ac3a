//! Reconstruction of a half-line Schrödinger potential from its scattering matrix.
//!
//! The production path follows Krein's method: the S-matrix is factorized into the
//! Jost function, the Jost function gives the even kernel `H(t)`, a nested family of
//! Toeplitz systems yields the amplitude `A(x)`, and `q = A^2 + A'`. Marchenko and
//! Gelfand–Levitan inverters and a forward Jost-solution solver provide independent
//! cross-checks.
//!
//! Every numerical routine is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod error;
pub mod forward;
pub mod gelfand_levitan;
pub mod grid;
pub mod kernel;
pub mod krein;
pub mod linalg;
pub mod marchenko;
pub mod pipeline;
pub mod presets;
pub mod reduction;
pub mod riemann;
pub mod scalar;
pub mod special;
pub mod transforms;

pub use error::{Result, ScatterError};
pub use grid::{ComplexSamples, RealSamples, Sampled, TailDecay, UniformGrid};
pub use forward::{jost_function, s_matrix, scattering_data, Potential, ScatteringData};
pub use kernel::{kernel_from_jost, marchenko_kernel, KreinKernel, MarchenkoKernel};
pub use krein::{amplitude, potential_from_amplitude, solve_gamma_family, GammaSweep};
pub use pipeline::{invert, roundtrip, Method, PipelineConfig, PipelineReport};
pub use presets::Preset;
pub use reduction::{reduce_index, BlaschkeSpec, Parity};
pub use riemann::{solve_riemann, winding_index, JostClosure};
pub use scalar::{Cplx, Real};

pub type Grid = UniformGrid<f64>;
pub type Samples = RealSamples<f64>;
pub type CSamples = ComplexSamples<f64>;
