use num_complex::Complex64;
use thiserror::Error;

use crate::fourier::TrigPotential;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid of {grid} points aliases a potential with {modes} modes (need at least {needed})")]
    Aliasing { grid: usize, modes: usize, needed: usize },

    #[error("integration of the fundamental system failed at lambda = {lambda}: step underflow at x = {x}")]
    Integrator { lambda: Complex64, x: f64 },

    #[error("band edges violate interlacing near gap {gap}: {detail}")]
    Interlacing { gap: usize, detail: String },

    #[error("(-1)^n Delta = {value} < 1 at the critical point of gap {gap}")]
    HeightDomain { gap: usize, value: f64 },

    #[error("quadrature on gap {gap} did not converge with {nodes} nodes (last change {change:e}, value {value:e})")]
    Quadrature {
        gap: usize,
        nodes: usize,
        change: f64,
        value: f64,
    },

    #[error("z = {z} is outside momentum gap {gap} = [{lo}, {hi}]")]
    OutsideGap { gap: usize, z: f64, lo: f64, hi: f64 },

    #[error("gap {gap} is closed or was not resolved")]
    ClosedGap { gap: usize },

    #[error("ground state is not positive after normalization (min sample {min})")]
    GroundStateSign { min: f64 },

    #[error("ground state residual {residual:e} exceeds {tolerance:e}")]
    GroundStateResidual { residual: f64, tolerance: f64 },

    #[error("Riccati roundtrip residual {residual:e} exceeds {tolerance:e}")]
    RiccatiRoundtrip { residual: f64, tolerance: f64 },

    #[error("flow blew up at t = {time}: norm {norm} exceeds {limit}")]
    BlowUp {
        time: f64,
        norm: f64,
        limit: f64,
        last_good: Box<TrigPotential>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Config(_) | Error::Parse { .. } | Error::Aliasing { .. })
    }
}
