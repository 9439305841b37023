//! Discriminant, band edges, critical points and heights of `-y'' + (psi + q0) y`.
//!
//! Edges come from the Fourier-truncated Hill matrix in the basis
//! `e^{i pi j x}`: even `j` spans the periodic problem, odd `j` the
//! antiperiodic one. The discriminant comes from the monodromy ODE. The two
//! routes are compared by [`BandStructure::cross_validate`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::TrigPotential;
use crate::ode::{period_map, OdeOptions, Spectral};
use crate::roots::{brent, golden_max};

/// A gap is open iff `lambda^+ - lambda^- > GAP_THRESHOLD * max(1, lambda^+)`.
pub const GAP_THRESHOLD: f64 = 1e-9;

/// Relative movement of edges accepted when doubling the matrix truncation.
pub const TRUNCATION_TOL: f64 = 1e-10;

const MAX_HALF_WIDTH: usize = 2048;

pub fn gap_is_open(lower: f64, upper: f64) -> bool {
    upper - lower > GAP_THRESHOLD * upper.abs().max(1.0)
}

/// `arccosh(1 + u)` for `u >= 0`, accurate for small `u`.
pub fn acosh1p(u: f64) -> f64 {
    if u < 1e-4 {
        let s = (2.0 * u).sqrt();
        s * (1.0 + u * (-1.0 / 12.0 + u * (3.0 / 160.0 + u * (-5.0 / 896.0 + u * 35.0 / 18432.0))))
    } else {
        (u + (u * (2.0 + u)).sqrt()).ln_1p()
    }
}

/// Transfer data over one period at spectral parameter `lambda`.
#[derive(Debug, Clone, Copy)]
pub struct Monodromy<T> {
    pub lambda: T,
    pub theta1: T,
    pub dtheta1: T,
    pub phi1: T,
    pub dphi1: T,
    /// `(theta(1) + phi'(1)) / 2`.
    pub delta: T,
    /// `d delta / d lambda`, when requested.
    pub ddelta: Option<T>,
    /// Accumulated local error estimate of the integrator.
    pub error_estimate: f64,
}

impl<T: Spectral> Monodromy<T> {
    pub fn wronskian(&self) -> T {
        self.theta1 * self.dphi1 - self.dtheta1 * self.phi1
    }
}

/// Evaluator of the discriminant of `-y'' + (psi + q0) y`.
#[derive(Debug, Clone)]
pub struct Discriminant {
    psi: TrigPotential,
    q0: f64,
    opts: OdeOptions,
}

impl Discriminant {
    pub fn new(psi: &TrigPotential, q0: f64) -> Self {
        Discriminant {
            psi: psi.clone(),
            q0,
            opts: OdeOptions::default(),
        }
    }

    pub fn with_options(mut self, opts: OdeOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn potential(&self) -> &TrigPotential {
        &self.psi
    }

    pub fn monodromy<T: Spectral>(&self, lambda: T, with_derivative: bool) -> Result<Monodromy<T>> {
        let psi = &self.psi;
        let q0 = self.q0;
        let v = move |x: f64| psi.eval(x) + q0;
        let m = period_map(&v, lambda, with_derivative, &self.opts)?;
        let two = T::from_real(2.0);
        Ok(Monodromy {
            lambda,
            theta1: m.y[(0, 0)],
            dtheta1: m.y[(1, 0)],
            phi1: m.y[(0, 1)],
            dphi1: m.y[(1, 1)],
            delta: (m.y[(0, 0)] + m.y[(1, 1)]) / two,
            ddelta: m.dy.map(|d| (d[(0, 0)] + d[(1, 1)]) / two),
            error_estimate: m.error_estimate,
        })
    }

    pub fn value(&self, lambda: f64) -> Result<f64> {
        Ok(self.monodromy(lambda, false)?.delta)
    }

    pub fn value_and_slope(&self, lambda: f64) -> Result<(f64, f64)> {
        let m = self.monodromy(lambda, true)?;
        Ok((m.delta, m.ddelta.unwrap_or(0.0)))
    }

    /// Rounding-level uncertainty of `delta` at `lambda`.
    pub fn noise(&self, lambda: f64, error_estimate: f64) -> f64 {
        error_estimate + 4.0 * f64::EPSILON * (1.0 + lambda.abs().sqrt())
    }
}

/// Hermitian Hill matrix on modes `e^{i pi j x}`, `j = 2m` (periodic) or
/// `j = 2m + 1` (antiperiodic), `-K <= m <= K`.
pub fn hill_matrix(psi: &TrigPotential, half_width: usize, antiperiodic: bool) -> DMatrix<Complex64> {
    let js = block_indices(half_width, antiperiodic);
    let dim = js.len();
    DMatrix::from_fn(dim, dim, |a, b| {
        let mut h = psi.coeff((js[a] - js[b]) / 2);
        if a == b {
            h += (std::f64::consts::PI * js[a] as f64).powi(2);
        }
        h
    })
}

fn block_indices(half_width: usize, antiperiodic: bool) -> Vec<i64> {
    let k = half_width as i64;
    if antiperiodic {
        (-k - 1..=k).map(|m| 2 * m + 1).collect()
    } else {
        (-k..=k).map(|m| 2 * m).collect()
    }
}

fn sorted_eigenvalues(h: DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Unshifted band edges from the Hill matrix.
#[derive(Debug, Clone)]
pub struct RawEdges {
    /// `lambda_0^+`.
    pub ground: f64,
    /// `(lambda_n^-, lambda_n^+)` for `n = 1..=n_max`.
    pub pairs: Vec<(f64, f64)>,
    /// Half-width `K` of the accepted truncation.
    pub half_width: usize,
}

/// Rayleigh quotient of the lowest eigenvector found by shifted inverse iteration.
/// Unlike the eigensolver value, its error does not scale with `|H|`.
fn refine_lowest(h: &DMatrix<Complex64>, lowest: f64, next: f64) -> f64 {
    let shift = lowest - 1e-3 * (next - lowest);
    let dim = h.nrows();
    let lu = (h - DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(shift, 0.0)).lu();
    let mut x = nalgebra::DVector::<Complex64>::from_element(dim, Complex64::new(1.0, 0.0));
    for _ in 0..4 {
        match lu.solve(&x) {
            Some(y) => x = &y / Complex64::new(y.norm(), 0.0),
            None => return lowest,
        }
    }
    let rq = (x.adjoint() * h * &x)[(0, 0)].re / x.norm_squared();
    if rq.is_finite() && (rq - lowest).abs() <= 1e-6 * (next - lowest) {
        rq
    } else {
        lowest
    }
}

fn edges_at(psi: &TrigPotential, half_width: usize, n_max: usize) -> (f64, Vec<(f64, f64)>) {
    let ((ground, p), a) = rayon::join(
        || {
            let h = hill_matrix(psi, half_width, false);
            let p = sorted_eigenvalues(h.clone());
            (refine_lowest(&h, p[0], p[1]), p)
        },
        || sorted_eigenvalues(hill_matrix(psi, half_width, true)),
    );
    let pairs = (1..=n_max)
        .map(|n| if n % 2 == 0 { (p[n - 1], p[n]) } else { (a[n - 1], a[n]) })
        .collect();
    (ground, pairs)
}

/// Band edges up to gap `n_max`. The truncation is doubled from a small width;
/// each edge is taken from the first doubled width that agrees with the one below
/// to [`TRUNCATION_TOL`] relative plus eigensolver roundoff.
pub fn band_edges(psi: &TrigPotential, n_max: usize) -> Result<RawEdges> {
    if n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    let margin = 8 + 2 * psi.modes();
    let mut k = 16 + margin;
    let mut ground: Option<f64> = None;
    let mut pairs: Vec<Option<(f64, f64)>> = vec![None; n_max];
    let mut prev = edges_at(psi, k, n_max.min(k - margin));
    loop {
        let fine_k = 2 * k;
        let fine = edges_at(psi, fine_k, n_max.min(fine_k - margin));
        let roundoff = 16.0 * f64::EPSILON * (std::f64::consts::TAU * fine_k as f64).powi(2);
        let close = |a: f64, b: f64| (a - b).abs() <= TRUNCATION_TOL * b.abs().max(1.0) + roundoff;
        if ground.is_none() && close(prev.0, fine.0) {
            ground = Some(fine.0);
        }
        for (i, (c, f)) in prev.1.iter().zip(&fine.1).enumerate() {
            if pairs[i].is_none() && close(c.0, f.0) && close(c.1, f.1) {
                pairs[i] = Some(*f);
            }
        }
        let done = ground.is_some() && pairs.iter().all(Option::is_some);
        if done || fine_k >= MAX_HALF_WIDTH {
            let ground = ground.unwrap_or(fine.0);
            let pairs: Vec<(f64, f64)> = pairs.iter().enumerate().map(|(i, p)| p.unwrap_or(fine.1[i])).collect();
            check_interlacing(ground, &pairs)?;
            return Ok(RawEdges {
                ground,
                pairs,
                half_width: fine_k,
            });
        }
        prev = fine;
        k = fine_k;
    }
}

fn check_interlacing(ground: f64, pairs: &[(f64, f64)]) -> Result<()> {
    let mut prev = ground;
    for (i, &(lo, hi)) in pairs.iter().enumerate() {
        let n = i + 1;
        if !(prev < lo) {
            return Err(Error::Interlacing {
                gap: n,
                detail: format!("edge below gap {n} is {prev}, lower edge is {lo}"),
            });
        }
        if lo > hi {
            return Err(Error::Interlacing {
                gap: n,
                detail: format!("lower edge {lo} exceeds upper edge {hi}"),
            });
        }
        prev = hi;
    }
    Ok(())
}

/// `q0 = -lambda_0^+` of the unshifted operator.
pub fn normalize_offset(psi: &TrigPotential) -> Result<f64> {
    Ok(-band_edges(psi, 1)?.ground)
}

/// Data of gap `n` after normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    /// Critical point `lambda_n`, where `delta'` vanishes.
    pub crit: f64,
    pub height: f64,
    pub open: bool,
    /// Curvature `kappa` of `(-1)^n delta - 1 ~ kappa (lambda - lambda^-)(lambda^+ - lambda)`
    /// when the gap is below discriminant resolution; then `v` is taken from this model.
    pub tiny: Option<f64>,
}

impl Gap {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn sign(&self) -> f64 {
        if self.n.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Momentum-gap endpoints `(sqrt(lambda^-), sqrt(lambda^+))`.
    pub fn z_edges(&self) -> (f64, f64) {
        (self.lower.max(0.0).sqrt(), self.upper.max(0.0).sqrt())
    }
}

/// Normalized band structure: `lambda_0^+ = 0` and gaps `1..=n_max`.
#[derive(Debug, Clone)]
pub struct BandStructure {
    pub q0: f64,
    pub gaps: Vec<Gap>,
    pub half_width: usize,
    disc: Discriminant,
}

impl BandStructure {
    pub fn compute(psi: &TrigPotential, n_max: usize) -> Result<Self> {
        let raw = band_edges(psi, n_max)?;
        let q0 = -raw.ground;
        let disc = Discriminant::new(psi, q0);
        let gaps = raw
            .pairs
            .par_iter()
            .enumerate()
            .map(|(i, &(lo, hi))| resolve_gap(&disc, i + 1, lo + q0, hi + q0))
            .collect::<Result<Vec<_>>>()?;
        Ok(BandStructure {
            q0,
            gaps,
            half_width: raw.half_width,
            disc,
        })
    }

    pub fn n_max(&self) -> usize {
        self.gaps.len()
    }

    pub fn gap(&self, n: usize) -> Option<&Gap> {
        n.checked_sub(1).and_then(|i| self.gaps.get(i))
    }

    pub fn discriminant(&self) -> &Discriminant {
        &self.disc
    }

    /// `(lambda_0^+, lambda_1^-, lambda_1^+, ...)`.
    pub fn edges(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.gaps.iter().flat_map(|g| [g.lower, g.upper]))
            .collect()
    }

    pub fn heights(&self) -> Vec<f64> {
        self.gaps.iter().map(|g| g.height).collect()
    }

    pub fn gap_lengths(&self) -> Vec<f64> {
        self.gaps
            .iter()
            .map(|g| if g.open { g.length() } else { 0.0 })
            .collect()
    }

    /// Compares every edge of gaps `0..=n_check` with the monodromy route.
    pub fn cross_validate(&self, n_check: usize) -> Result<Vec<EdgeCheck>> {
        let mut targets = vec![(0, EdgeSide::Upper, 0.0, 0.0)];
        for g in self.gaps.iter().take(n_check) {
            let spread = if g.open { g.length() } else { 0.0 };
            targets.push((g.n, EdgeSide::Lower, g.lower, spread));
            targets.push((g.n, EdgeSide::Upper, g.upper, spread));
        }
        targets
            .par_iter()
            .map(|&(n, side, lambda, spread)| check_edge(&self.disc, n, side, lambda, spread))
            .collect()
    }
}

fn gap_sign(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn resolve_gap(disc: &Discriminant, n: usize, lower: f64, upper: f64) -> Result<Gap> {
    let closed = Gap {
        n,
        lower,
        upper,
        crit: 0.5 * (lower + upper),
        height: 0.0,
        open: false,
        tiny: None,
    };
    if !gap_is_open(lower, upper) {
        return Ok(closed);
    }
    let sign = gap_sign(n);
    let mid = 0.5 * (lower + upper);
    let m = disc.monodromy(mid, false)?;
    let noise = disc.noise(mid, m.error_estimate);
    let f_mid = sign * m.delta - 1.0;
    if f_mid < 1e3 * noise {
        let kappa = curvature(disc, n, mid)?;
        let f_max = kappa * 0.25 * (upper - lower).powi(2);
        return Ok(Gap {
            crit: mid,
            height: acosh1p(f_max),
            open: true,
            tiny: Some(kappa),
            ..closed
        });
    }
    let crit = critical_point(disc, n, lower, upper)?;
    let m = disc.monodromy(crit, false)?;
    let f = sign * m.delta - 1.0;
    let tol = (1e-9f64).max(disc.noise(crit, m.error_estimate));
    if f < -tol {
        return Err(Error::HeightDomain {
            gap: n,
            value: sign * m.delta,
        });
    }
    Ok(Gap {
        crit,
        height: acosh1p(f.max(0.0)),
        open: true,
        ..closed
    })
}

/// `kappa = -f''/2` for `f = (-1)^n delta - 1`, by central differences of `delta'`.
fn curvature(disc: &Discriminant, n: usize, at: f64) -> Result<f64> {
    let step = 1e-3 * at.abs().max(1.0).sqrt();
    let (_, s_hi) = disc.value_and_slope(at + step)?;
    let (_, s_lo) = disc.value_and_slope(at - step)?;
    Ok((-gap_sign(n) * (s_hi - s_lo) / (4.0 * step)).max(0.0))
}

/// Point of `[lower, upper]` where `(-1)^n delta` is maximal.
///
/// Root of `delta'` by Brent when the slope is resolved at both edges,
/// golden-section maximization otherwise.
pub fn critical_point(disc: &Discriminant, n: usize, lower: f64, upper: f64) -> Result<f64> {
    if !gap_is_open(lower, upper) {
        return Ok(0.5 * (lower + upper));
    }
    let sign = gap_sign(n);
    let xtol = (1e-12 * upper.abs().max(1.0)).min(1e-4 * (upper - lower));
    let slope = |l: f64| -> Result<(f64, f64)> {
        let m = disc.monodromy(l, true)?;
        Ok((sign * m.ddelta.unwrap_or(0.0), disc.noise(l, m.error_estimate)))
    };
    let (s_lo, noise_lo) = slope(lower)?;
    let (s_hi, noise_hi) = slope(upper)?;
    let resolved = s_lo > 10.0 * noise_lo && s_hi < -10.0 * noise_hi;
    if resolved {
        brent(
            |l| disc.monodromy(l, true).map(|m| sign * m.ddelta.unwrap_or(0.0)),
            lower,
            upper,
            s_lo,
            s_hi,
            xtol,
            200,
        )
    } else {
        golden_max(|l| disc.value(l).map(|d| sign * d), lower, upper, xtol)
    }
}

/// `h_n = arccosh((-1)^n delta(lambda_n))`, zero for closed gaps.
pub fn height(band: &BandStructure, n: usize) -> Option<f64> {
    band.gap(n).map(|g| g.height)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSide {
    Lower,
    Upper,
}

/// Agreement of a matrix edge with the discriminant.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCheck {
    pub n: usize,
    pub side: EdgeSide,
    pub matrix: f64,
    /// Newton root of `delta = (-1)^n` started at the matrix edge; `None`
    /// when the root is too ill-conditioned to locate beyond the residual.
    pub root: Option<f64>,
    /// `|delta(matrix edge) - (-1)^n|`.
    pub residual: f64,
    /// `|wronskian - 1|` at the matrix edge.
    pub wronskian_drift: f64,
}

impl EdgeCheck {
    pub fn deviation(&self) -> Option<f64> {
        self.root.map(|r| (r - self.matrix).abs() / self.matrix.abs().max(1.0))
    }

    pub fn agrees(&self, tol: f64) -> bool {
        self.residual <= tol && self.deviation().is_none_or(|d| d <= tol)
    }
}

/// Newton root of `delta = (-1)^n` started at `lambda`, or `None` when the
/// slope there does not resolve the root beyond discriminant noise.
/// Steps longer than `limit` abort the iteration.
pub fn polish_edge(disc: &Discriminant, n: usize, lambda: f64, limit: f64) -> Result<Option<f64>> {
    let target = gap_sign(n);
    let m = disc.monodromy(lambda, true)?;
    let scale = lambda.abs().max(1.0);
    let mut g = m.delta - target;
    let mut s = m.ddelta.unwrap_or(0.0);
    // A simple root is located to noise / |slope|; double roots are not.
    if s.abs() * 1e-10 * scale <= disc.noise(lambda, m.error_estimate) {
        return Ok(None);
    }
    let mut l = lambda;
    for _ in 0..8 {
        let step = g / s;
        if !step.is_finite() || step.abs() > limit {
            break;
        }
        l -= step;
        if step.abs() <= 1e-15 * scale {
            break;
        }
        let mm = disc.monodromy(l, true)?;
        g = mm.delta - target;
        s = mm.ddelta.unwrap_or(0.0);
    }
    Ok(Some(l))
}

fn check_edge(disc: &Discriminant, n: usize, side: EdgeSide, lambda: f64, spread: f64) -> Result<EdgeCheck> {
    let m = disc.monodromy(lambda, false)?;
    let residual = (m.delta - gap_sign(n)).abs();
    let wronskian_drift = (m.wronskian() - 1.0).abs();
    let limit = if spread > 0.0 {
        0.5 * spread
    } else {
        1e-3 * lambda.abs().max(1.0)
    };
    let root = polish_edge(disc, n, lambda, limit)?;
    Ok(EdgeCheck {
        n,
        side,
        matrix: lambda,
        root,
        residual,
        wronskian_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn free_discriminant_is_cos_sqrt() {
        let d = Discriminant::new(&TrigPotential::zero(), 0.0);
        let m = d.monodromy(0.0, false).unwrap();
        assert_relative_eq!(m.theta1, 1.0, epsilon = 1e-14);
        assert_relative_eq!(m.phi1, 1.0, epsilon = 1e-14);
        assert_relative_eq!(m.dphi1, 1.0, epsilon = 1e-14);
        assert!(m.dtheta1.abs() < 1e-14);
        assert_relative_eq!(d.value(PI * PI).unwrap(), -1.0, epsilon = 1e-13);
        let top = (10.0 * PI).powi(2);
        for i in 0..=200 {
            let l = top * i as f64 / 200.0;
            assert!((d.value(l).unwrap() - l.sqrt().cos()).abs() <= 1e-10, "lambda {l}");
        }
    }

    #[test]
    fn acosh1p_branches_agree() {
        for u in [1e-3f64, 5e-5, 9.9e-5, 1e-4] {
            let naive = (1.0 + u).acosh();
            assert_relative_eq!(acosh1p(u), naive, max_relative = 1e-10);
        }
        assert_eq!(acosh1p(0.0), 0.0);
    }

    #[test]
    fn free_spectrum_has_closed_gaps() {
        let b = BandStructure::compute(&TrigPotential::zero(), 6).unwrap();
        assert!(b.q0.abs() < 1e-20);
        for g in &b.gaps {
            let expect = (PI * g.n as f64).powi(2);
            assert_relative_eq!(g.lower, expect, max_relative = 1e-13);
            assert_relative_eq!(g.upper, expect, max_relative = 1e-13);
            assert!(!g.open);
            assert_eq!(g.height, 0.0);
            assert_relative_eq!(g.crit, expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn hill_matrix_is_hermitian() {
        let psi = TrigPotential::from_modes([(1, Complex64::new(0.3, -0.2)), (3, Complex64::new(0.0, 0.1))]);
        for anti in [false, true] {
            let h = hill_matrix(&psi, 6, anti);
            assert_eq!(h, h.adjoint());
        }
    }

    /// Eigenvalues of the 2x2 block coupling `e^{+-i pi x}` by `c_1`.
    #[test]
    fn first_gap_matches_degenerate_block() {
        let c = 0.1;
        let psi = TrigPotential::cosine(1, 2.0 * c);
        let raw = band_edges(&psi, 3).unwrap();
        let (lo, hi) = raw.pairs[0];
        assert_relative_eq!(hi - lo, 2.0 * c, max_relative = 0.05);
        let gamma2 = raw.pairs[1].1 - raw.pairs[1].0;
        assert!(gamma2 < 0.05 * (hi - lo), "gamma2 = {gamma2}");
        // The frozen value is the high-truncation matrix width.
        let wide = sorted_eigenvalues(hill_matrix(&psi, 200, true));
        assert_relative_eq!(hi - lo, wide[1] - wide[0], max_relative = 1e-12);
    }

    #[test]
    fn offset_is_minus_ground_state() {
        assert!(normalize_offset(&TrigPotential::zero()).unwrap().abs() < 1e-20);
        let psi = TrigPotential::cosine(1, 2.0);
        let q0 = normalize_offset(&psi).unwrap();
        let wide = sorted_eigenvalues(hill_matrix(&psi, 200, false));
        assert!(q0 > 0.0);
        assert_relative_eq!(q0, -wide[0], max_relative = 1e-11);
        let shifted = normalize_offset(&psi.translate(0.37)).unwrap();
        assert_relative_eq!(q0, shifted, max_relative = 1e-11);
    }

    #[test]
    fn critical_point_is_interior_maximum() {
        let psi = TrigPotential::cosine(1, 0.2);
        let b = BandStructure::compute(&psi, 4).unwrap();
        let g = b.gap(1).unwrap();
        assert!(g.open && g.tiny.is_none());
        assert!(g.lower < g.crit && g.crit < g.upper);
        let d = b.discriminant();
        let f = |l: f64| -d.value(l).unwrap();
        let peak = f(g.crit);
        assert!(peak > 1.0);
        for i in 0..=400 {
            let l = g.lower + g.length() * i as f64 / 400.0;
            assert!(f(l) <= peak + 1e-13);
        }
        let h = 1e-4 * g.length();
        let (_, s_lo) = d.value_and_slope(g.crit - h).unwrap();
        let (_, s_hi) = d.value_and_slope(g.crit + h).unwrap();
        assert!(s_lo < 0.0 && s_hi > 0.0);
        assert_relative_eq!(g.height, (peak).acosh(), max_relative = 1e-10);
    }

    #[test]
    fn edges_solve_discriminant_equation() {
        let psi = TrigPotential::from_modes([
            (1, Complex64::new(0.4, 0.1)),
            (2, Complex64::new(-0.2, 0.3)),
            (5, Complex64::new(0.05, 0.0)),
        ]);
        let b = BandStructure::compute(&psi, 16).unwrap();
        for c in b.cross_validate(16).unwrap() {
            assert!(c.agrees(1e-8), "{c:?}");
            assert!(c.wronskian_drift <= 1e-10, "{c:?}");
        }
        let e = b.edges();
        assert_eq!(e[0], 0.0);
        for w in e.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn complex_lambda_wronskian() {
        let psi = TrigPotential::cosine(2, 0.7);
        let d = Discriminant::new(&psi, 0.0);
        let m = d.monodromy(Complex64::new(30.0, 4.0), false).unwrap();
        assert!((m.wronskian() - 1.0).norm() < 1e-10);
    }
}
