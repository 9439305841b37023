//! The Riccati map `p -> q` with `q' = p' + p^2 - |p|^2` and its inverse.
//!
//! The inverse uses the ground state `w > 0` of `-d^2/dx^2 + q'`: then
//! `p = w'/w` and the ground energy is `-|p|^2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{dealiased_grid, TrigPotential};
use crate::hill::hill_matrix;

/// Tolerance on `|forward(inverse(q)).q - q|`.
pub const ROUNDTRIP_TOL: f64 = 1e-7;
/// Tolerance on the relative eigen-residual of the ground state.
pub const GROUND_RESIDUAL_TOL: f64 = 1e-9;

/// A potential `p` together with `q = R(p)`, `q0 = |p|^2` and the weight `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiPair {
    pub p: TrigPotential,
    pub q: TrigPotential,
    pub q0: f64,
    /// `w(j / M) = exp(int_0^{j/M} p)`, `j = 0..M`.
    pub w_samples: Vec<f64>,
}

/// `q = p + antiderivative(p^2 - |p|^2)`.
pub fn forward(p: &TrigPotential) -> RiccatiPair {
    let (_, fluctuation) = p.square();
    let q = p + &fluctuation.antiderivative();
    let big_p = p.antiderivative();
    let m = dealiased_grid(8 * p.modes().max(4));
    let samples = big_p.evaluate_grid(m).expect("grid exceeds twice the mode count");
    let origin = samples[0];
    RiccatiPair {
        p: p.clone(),
        q,
        q0: p.norm().powi(2),
        w_samples: samples.iter().map(|s| (s - origin).exp()).collect(),
    }
}

/// Bottom of the periodic spectrum of `-d^2/dx^2 + psi` with its eigenfunction.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    /// `lambda_0^+`.
    pub energy: f64,
    /// Mean of `w`; `w = mean + oscillation` with `w(0) = 1`.
    pub mean: f64,
    pub oscillation: TrigPotential,
    /// `|H w - energy w| / |w|` on the truncated Fourier basis, including spill-over modes.
    pub residual: f64,
}

impl GroundState {
    pub fn eval(&self, x: f64) -> f64 {
        self.mean + self.oscillation.eval(x)
    }

    pub fn samples(&self, m: usize) -> Result<Vec<f64>> {
        Ok(self
            .oscillation
            .evaluate_grid(m)?
            .into_iter()
            .map(|v| v + self.mean)
            .collect())
    }

    /// `int_0^1 (w'^2 + psi w^2) / int_0^1 w^2`.
    pub fn rayleigh_quotient(&self, psi: &TrigPotential) -> f64 {
        let m = dealiased_grid(2 * self.oscillation.modes() + psi.modes()).max(64);
        let w = self.samples(m).expect("grid sized for the product");
        let dw = self.oscillation.derivative().evaluate_grid(m).expect("same mode count");
        let v = psi.evaluate_grid(m).expect("grid exceeds potential modes");
        let num: f64 = (0..m).map(|j| dw[j] * dw[j] + v[j] * w[j] * w[j]).sum();
        let den: f64 = w.iter().map(|x| x * x).sum();
        num / den
    }
}

/// Ground state from the Hill matrix, refined by inverse iteration.
pub fn ground_state(psi: &TrigPotential) -> Result<GroundState> {
    let mut k = 2 * psi.modes() + 16;
    let mut previous: Option<f64> = None;
    loop {
        let h = hill_matrix(psi, k, false);
        let eig = h.clone().symmetric_eigen();
        let idx = eig.eigenvalues.imin();
        let mut energy = eig.eigenvalues[idx];
        let mut x: DVector<Complex64> = eig.eigenvectors.column(idx).into_owned();
        let shift = energy - 1e-8 * energy.abs().max(1.0);
        let lu = (&h - DMatrix::<Complex64>::identity(h.nrows(), h.ncols()) * Complex64::new(shift, 0.0)).lu();
        for _ in 0..2 {
            if let Some(y) = lu.solve(&x) {
                x = &y / Complex64::new(y.norm(), 0.0);
            }
        }
        energy = (x.adjoint() * &h * &x)[(0, 0)].re / x.norm_squared();
        let settled = previous.is_some_and(|p| (p - energy).abs() <= 1e-13 * energy.abs().max(1.0));
        if settled || k >= 2048 {
            return finish_ground_state(psi, k, energy, x);
        }
        previous = Some(energy);
        k *= 2;
    }
}

fn finish_ground_state(psi: &TrigPotential, k: usize, energy: f64, x: DVector<Complex64>) -> Result<GroundState> {
    let ki = k as i64;
    // Coefficient of e^{i 2 pi m x} sits at index m + K.
    let at0: Complex64 = x.iter().sum();
    let c: Vec<Complex64> = x.iter().map(|v| v / at0).collect();
    let mean = c[k].re;
    let oscillation = TrigPotential::new((1..=k).map(|m| 0.5 * (c[k + m] + c[k - m].conj())).collect());
    // Residual on the basis widened by the potential bandwidth.
    let wide = k + psi.modes();
    let coeff = |m: i64| -> Complex64 {
        match m.unsigned_abs() as usize {
            0 => Complex64::new(mean, 0.0),
            a if a <= k => oscillation.coeff(m),
            _ => Complex64::new(0.0, 0.0),
        }
    };
    let mut res2 = 0.0;
    let mut norm2 = 0.0;
    for a in -(wide as i64)..=(wide as i64) {
        let mut hw = (std::f64::consts::TAU * a as f64).powi(2) * coeff(a) - energy * coeff(a);
        for b in (a - psi.modes() as i64)..=(a + psi.modes() as i64) {
            if b.abs() <= ki {
                hw += psi.coeff(a - b) * coeff(b);
            }
        }
        res2 += hw.norm_sqr();
        norm2 += coeff(a).norm_sqr();
    }
    let residual = (res2 / norm2).sqrt() / energy.abs().max(1.0);
    if residual > GROUND_RESIDUAL_TOL {
        return Err(Error::GroundStateResidual {
            residual,
            tolerance: GROUND_RESIDUAL_TOL,
        });
    }
    let gs = GroundState {
        energy,
        mean,
        oscillation,
        residual,
    };
    let grid = dealiased_grid(4 * k);
    let min = gs.samples(grid)?.into_iter().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        return Err(Error::GroundStateSign { min });
    }
    Ok(gs)
}

/// Result of inverting the Riccati map.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiInverse {
    pub p: TrigPotential,
    /// `lambda_0^+` of `-d^2/dx^2 + q'`; equals `-|p|^2`.
    pub ground_energy: f64,
    /// `|forward(p).q - q|`.
    pub roundtrip: f64,
    /// Norm of the modes of `w'/w` discarded by the final truncation.
    pub truncation: f64,
}

/// `p = w'/w` for the ground state `w` of `-d^2/dx^2 + q'`.
pub fn inverse(q: &TrigPotential) -> Result<RiccatiInverse> {
    let psi = q.derivative();
    let gs = ground_state(&psi)?;
    let m = dealiased_grid(4 * gs.oscillation.modes().max(8));
    let w = gs.samples(m)?;
    let dw = gs.oscillation.derivative().evaluate_grid(m)?;
    let ratio: Vec<f64> = w.iter().zip(&dw).map(|(w, d)| d / w).collect();
    let full = TrigPotential::from_grid(&ratio, m / 2 - 1);
    let p = full.trimmed(1e-16);
    let truncation = (&full - &p).norm();
    let roundtrip = (&forward(&p).q - q).norm();
    if roundtrip > ROUNDTRIP_TOL {
        return Err(Error::RiccatiRoundtrip {
            residual: roundtrip,
            tolerance: ROUNDTRIP_TOL,
        });
    }
    Ok(RiccatiInverse {
        p,
        ground_energy: gs.energy,
        roundtrip,
        truncation,
    })
}
