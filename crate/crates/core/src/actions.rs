//! Quasimomentum on the momentum gaps, actions, moments and `Q_0`.
//!
//! On gap `n` the imaginary part of the quasimomentum is
//! `v(z) = arccosh((-1)^n delta(z^2))`. All gap integrals are taken in the
//! substitution `z = mid + half cos(theta)` with the trapezoid rule in
//! `theta`, which is the second-kind Chebyshev rule for the square-root
//! vanishing of `v` at both momentum-gap endpoints. Node sets nest under
//! doubling, so every refinement reuses earlier samples.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::TrigPotential;
use crate::hill::{acosh1p, polish_edge, BandStructure, Gap};
use crate::quadrature::chebyshev_first_kind_angles;

/// Relative change between node doublings accepted as converged.
pub const QUAD_TOL: f64 = 1e-10;
const MIN_LEVEL: u32 = 4;
const MAX_LEVEL: u32 = 12;

/// Actions at the truncation edge must fall below this fraction of the largest.
pub const EDGE_ACTION_RATIO: f64 = 1e-14;
/// Moment tails above this fraction of the sum raise a warning.
pub const TAIL_WARNING: f64 = 1e-8;

/// `v(z + i0)` on gap `n`, for `z` in the closed momentum gap.
pub fn gap_v(band: &BandStructure, n: usize, z: f64) -> Result<f64> {
    let gap = band.gap(n).ok_or(Error::ClosedGap { gap: n })?;
    let (lo, hi) = gap.z_edges();
    if !(lo <= z && z <= hi) {
        return Err(Error::OutsideGap { gap: n, z, lo, hi });
    }
    if !gap.open || z == lo || z == hi {
        return Ok(0.0);
    }
    Ok(acosh1p(excess(band, gap, z, z - lo, hi - z)?.max(0.0)))
}

/// `(-1)^n delta(z^2) - 1` at `z = z^- + below = z^+ - above`, from the
/// discriminant or the small-gap model.
fn excess(band: &BandStructure, gap: &Gap, z: f64, below: f64, above: f64) -> Result<f64> {
    match gap.tiny {
        Some(kappa) => {
            let (lo, hi) = gap.z_edges();
            Ok(kappa * below * (z + lo) * above * (z + hi))
        }
        None => Ok(gap.sign() * band.discriminant().value(z * z)? - 1.0),
    }
}

/// Uncertainty of [`excess`] near the critical point of an open gap.
fn excess_noise(band: &BandStructure, gap: &Gap) -> Result<f64> {
    if gap.tiny.is_some() {
        return Ok(0.0);
    }
    let m = band.discriminant().monodromy(gap.crit, false)?;
    Ok(band.discriminant().noise(gap.crit, m.error_estimate))
}

/// Integrals of one gap: `int z v dz`, `int v dz`, `int v / z dz`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapIntegrals {
    pub n: usize,
    pub z_lower: f64,
    pub z_upper: f64,
    /// `A_n = (4 / pi) int z v dz`.
    pub action: f64,
    pub v_integral: f64,
    pub v_over_z: f64,
    /// Quadrature nodes used; zero for closed gaps.
    pub nodes: usize,
}

/// Integrates `z v`, `v` and `v / z` over momentum gap `n`.
pub fn gap_integrals(band: &BandStructure, n: usize) -> Result<GapIntegrals> {
    let gap = band.gap(n).ok_or(Error::ClosedGap { gap: n })?;
    let (z_lower, z_upper) = gap.z_edges();
    let mut out = GapIntegrals {
        n,
        z_lower,
        z_upper,
        action: 0.0,
        v_integral: 0.0,
        v_over_z: 0.0,
        nodes: 0,
    };
    if !gap.open {
        return Ok(out);
    }
    let mid = 0.5 * (z_lower + z_upper);
    let half = 0.5 * (z_upper - z_lower);
    let noise = excess_noise(band, gap)?;
    // Error of a sum of v samples perturbed by `noise` in the excess.
    let floor = 10.0 * PI * half * noise / gap.height.max(noise.sqrt()).max(f64::MIN_POSITIVE);
    let weights = [z_upper, 1.0, 1.0 / z_lower];

    let mut sums = [0.0f64; 3];
    let mut prev: Option<[f64; 3]> = None;
    for level in 1..=MAX_LEVEL {
        let parts = 1usize << level;
        let new: Vec<usize> = if level == 1 {
            vec![1]
        } else {
            (1..parts).step_by(2).collect()
        };
        let samples = new
            .par_iter()
            .map(|&i| {
                let theta = PI * i as f64 / parts as f64;
                let z = mid + half * theta.cos();
                let below = 2.0 * half * (0.5 * theta).cos().powi(2);
                let above = 2.0 * half * (0.5 * theta).sin().powi(2);
                let v = acosh1p(excess(band, gap, z, below, above)?.max(0.0));
                Ok((theta.sin(), z, v))
            })
            .collect::<Result<Vec<_>>>()?;
        for (s, z, v) in samples {
            sums[0] += s * z * v;
            sums[1] += s * v;
            sums[2] += s * v / z;
        }
        let scale = half * PI / parts as f64;
        let current = [scale * sums[0], scale * sums[1], scale * sums[2]];
        if level >= MIN_LEVEL {
            if let Some(old) = prev {
                let change = (0..3)
                    .map(|k| (current[k] - old[k]).abs() - floor * weights[k])
                    .zip(current)
                    .map(|(d, c)| d / c.abs().max(f64::MIN_POSITIVE))
                    .fold(f64::NEG_INFINITY, f64::max);
                if change <= QUAD_TOL {
                    out.action = 4.0 / PI * current[0];
                    out.v_integral = current[1];
                    out.v_over_z = current[2];
                    out.nodes = parts - 1;
                    return Ok(out);
                }
                if level == MAX_LEVEL {
                    return Err(Error::Quadrature {
                        gap: n,
                        nodes: parts - 1,
                        change,
                        value: current[0],
                    });
                }
            }
        }
        prev = Some(current);
    }
    unreachable!("quadrature loop returns at the last level")
}

/// `A_n = (4 / pi) int_{g_n} z v(z + i0) dz`.
pub fn action(band: &BandStructure, n: usize) -> Result<f64> {
    Ok(gap_integrals(band, n)?.action)
}

/// `A_n` from the spectral-parameter form
/// `(-1)^{n+1} (2 / pi) int lambda delta' / |delta^2 - 1|^{1/2} d lambda`,
/// by first-kind Gauss-Chebyshev quadrature on `[lambda^-, lambda^+]`.
pub fn action_lambda_form(band: &BandStructure, n: usize) -> Result<f64> {
    let gap = band.gap(n).ok_or(Error::ClosedGap { gap: n })?;
    if !gap.open {
        return Ok(0.0);
    }
    let disc = band.discriminant();
    // The endpoint behaviour is weighted heavily here, so the edges are
    // re-located on the discriminant itself.
    let limit = 0.25 * gap.length();
    let lower = polish_edge(disc, n, gap.lower, limit)?.unwrap_or(gap.lower);
    let upper = polish_edge(disc, n, gap.upper, limit)?.unwrap_or(gap.upper);
    let c = 0.5 * (lower + upper);
    let h = 0.5 * (upper - lower);
    let sign = gap.sign();
    let rule = |m: usize| -> Result<f64> {
        let terms = chebyshev_first_kind_angles(m)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&theta| {
                let lambda = c + h * theta.cos();
                let (d, s) = disc.value_and_slope(lambda)?;
                let f = (sign * d - 1.0).max(f64::MIN_POSITIVE);
                // The integral of delta' / |delta^2 - 1|^{1/2} over the gap is zero,
                // so lambda is centred to avoid cancelling O(lambda) terms.
                Ok(h * theta.sin() * (lambda - c) * (-sign * s) / (f * (f + 2.0)).sqrt())
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(2.0 / m as f64 * terms.iter().sum::<f64>())
    };
    // Rounding in `f` near the endpoints enters with weight ~ m / f_max.
    let m_crit = disc.monodromy(gap.crit, false)?;
    let f_max = (sign * m_crit.delta - 1.0).max(f64::MIN_POSITIVE);
    let noise = disc.noise(gap.crit, m_crit.error_estimate) / f_max;
    let mut m = 8;
    let mut last = rule(m)?;
    while m < 4096 {
        m *= 2;
        let next = rule(m)?;
        if (next - last).abs() <= (1e-12 + 4.0 * m as f64 * noise) * next.abs() {
            return Ok(next);
        }
        last = next;
    }
    Err(Error::Quadrature {
        gap: n,
        nodes: m,
        change: f64::NAN,
        value: last,
    })
}

/// Truncated moment `P_j = sum (pi n)^j A_n` with an extrapolated tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    pub j: i32,
    pub value: f64,
    pub tail: f64,
}

impl Moment {
    pub fn from_actions(j: i32, actions: &[f64]) -> Self {
        let terms: Vec<f64> = actions
            .iter()
            .enumerate()
            .map(|(i, a)| (PI * (i + 1) as f64).powi(j) * a)
            .collect();
        let value = terms.iter().sum();
        let nonzero: Vec<f64> = terms.iter().copied().filter(|t| *t > 0.0).collect();
        let tail = match nonzero.as_slice() {
            [.., a, b, c] => {
                let r = (c / a).sqrt();
                if r < 1.0 {
                    c * r / (1.0 - r)
                } else {
                    // No geometric decay to extrapolate: bound by the last terms.
                    a + b + c
                }
            }
            _ => 0.0,
        };
        Moment { j, value, tail }
    }

    pub fn warning(&self) -> bool {
        self.tail > TAIL_WARNING * self.value
    }
}

/// Truncation policy for [`ActionSpectrum::compute`].
#[derive(Debug, Clone, Copy)]
pub struct ActionOptions {
    /// Smallest number of gaps; raised to `2 N + 8` for `N` modes.
    pub n_min: usize,
    /// Doubling stops here even if the edge criterion is unmet.
    pub n_cap: usize,
    pub adaptive: bool,
}

impl Default for ActionOptions {
    fn default() -> Self {
        ActionOptions {
            n_min: 16,
            n_cap: 256,
            adaptive: true,
        }
    }
}

impl ActionOptions {
    pub fn fixed(n_max: usize) -> Self {
        ActionOptions {
            n_min: n_max,
            n_cap: n_max,
            adaptive: false,
        }
    }
}

/// Actions, moments and both real-line forms of `Q_0`.
#[derive(Debug, Clone)]
pub struct ActionSpectrum {
    pub band: BandStructure,
    pub gaps: Vec<GapIntegrals>,
    pub p_minus1: Moment,
    pub p1: Moment,
    pub p3: Moment,
    /// `(2 / pi) sum int_{g_n} v dz`.
    pub q0_gap: f64,
    /// `(2 / pi) sum pi n int_{g_n} v / z dz`.
    pub q0_weighted: f64,
    /// False when the cap stopped the search before the edge actions were negligible.
    pub edge_converged: bool,
}

impl ActionSpectrum {
    pub fn compute(psi: &TrigPotential, opts: &ActionOptions) -> Result<Self> {
        let mut n_max = if opts.adaptive {
            opts.n_min.max(2 * psi.modes() + 8)
        } else {
            opts.n_min
        };
        loop {
            let band = BandStructure::compute(psi, n_max)?;
            let gaps = (1..=n_max)
                .into_par_iter()
                .map(|n| gap_integrals(&band, n))
                .collect::<Result<Vec<_>>>()?;
            let edge_converged = edge_negligible(&gaps);
            if !opts.adaptive || edge_converged || 2 * n_max > opts.n_cap {
                return Ok(Self::assemble(band, gaps, edge_converged));
            }
            n_max *= 2;
        }
    }

    /// Builds the spectrum from an already resolved band structure.
    pub fn from_band(band: BandStructure) -> Result<Self> {
        let gaps = (1..=band.n_max())
            .into_par_iter()
            .map(|n| gap_integrals(&band, n))
            .collect::<Result<Vec<_>>>()?;
        let edge_converged = edge_negligible(&gaps);
        Ok(Self::assemble(band, gaps, edge_converged))
    }

    fn assemble(band: BandStructure, gaps: Vec<GapIntegrals>, edge_converged: bool) -> Self {
        let actions: Vec<f64> = gaps.iter().map(|g| g.action).collect();
        let q0_gap = 2.0 / PI * gaps.iter().map(|g| g.v_integral).sum::<f64>();
        let q0_weighted = 2.0 / PI * gaps.iter().map(|g| PI * g.n as f64 * g.v_over_z).sum::<f64>();
        ActionSpectrum {
            p_minus1: Moment::from_actions(-1, &actions),
            p1: Moment::from_actions(1, &actions),
            p3: Moment::from_actions(3, &actions),
            band,
            gaps,
            q0_gap,
            q0_weighted,
            edge_converged,
        }
    }

    pub fn n_max(&self) -> usize {
        self.gaps.len()
    }

    pub fn actions(&self) -> Vec<f64> {
        self.gaps.iter().map(|g| g.action).collect()
    }

    pub fn z_edges(&self) -> Vec<(f64, f64)> {
        self.gaps.iter().map(|g| (g.z_lower, g.z_upper)).collect()
    }

    pub fn moment(&self, j: i32) -> Moment {
        match j {
            -1 => self.p_minus1,
            1 => self.p1,
            3 => self.p3,
            _ => Moment::from_actions(j, &self.actions()),
        }
    }
}

fn edge_negligible(gaps: &[GapIntegrals]) -> bool {
    let a_max = gaps.iter().map(|g| g.action).fold(0.0, f64::max);
    let start = (3 * gaps.len()) / 4;
    gaps[start..].iter().all(|g| g.action <= EDGE_ACTION_RATIO * a_max)
}

/// Pointwise geometry of `v` on one gap.
#[derive(Debug, Clone, PartialEq)]
pub struct GapScan {
    pub n: usize,
    pub points: usize,
    /// `min (cosh v - 1) - (cosh v_n - 1)` over the scan, `v_n = |(z - z^-)(z - z^+)|^{1/2}`.
    pub lower_bound_margin: f64,
    /// Tolerance on `lower_bound_margin` from discriminant noise.
    pub lower_bound_tolerance: f64,
    /// `max v(z - s) - 2 v(z) + v(z + s)` over interior scan points.
    pub max_second_difference: f64,
    /// Tolerance on the second difference from the noise in `v`.
    pub concavity_tolerance: f64,
    /// Largest `v` on the scan.
    pub v_max: f64,
}

impl GapScan {
    pub fn lower_bound_holds(&self) -> bool {
        self.lower_bound_margin >= -self.lower_bound_tolerance
    }

    pub fn concave(&self) -> bool {
        self.max_second_difference <= self.concavity_tolerance
    }
}

/// Samples `v` at `points` equispaced interior points of momentum gap `n`.
pub fn scan_gap(band: &BandStructure, n: usize, points: usize) -> Result<GapScan> {
    let gap = band.gap(n).ok_or(Error::ClosedGap { gap: n })?;
    if !gap.open {
        return Err(Error::ClosedGap { gap: n });
    }
    let (lo, hi) = gap.z_edges();
    let step = (hi - lo) / (points + 1) as f64;
    let zs: Vec<f64> = (1..=points).map(|i| lo + step * i as f64).collect();
    let f = (1..=points)
        .into_par_iter()
        .map(|i| {
            let below = step * i as f64;
            excess(band, gap, zs[i - 1], below, step * (points + 1 - i) as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let noise = excess_noise(band, gap)?;
    let lower_bound_margin = zs
        .iter()
        .zip(&f)
        .enumerate()
        .map(|(i, (_, &f))| {
            let vn = (step * (i + 1) as f64 * step * (points - i) as f64).sqrt();
            f - 2.0 * (0.5 * vn).sinh().powi(2)
        })
        .fold(f64::INFINITY, f64::min);
    let v: Vec<f64> = f.iter().map(|&f| acosh1p(f.max(0.0))).collect();
    let dv: Vec<f64> = f
        .iter()
        .zip(&v)
        .map(|(&f, &v)| noise / v.sinh().max((2.0 * (f.max(0.0) + noise)).sqrt()))
        .collect();
    let mut max_second_difference = f64::NEG_INFINITY;
    let mut concavity_tolerance: f64 = 0.0;
    for i in 1..points.saturating_sub(1) {
        let d2 = v[i - 1] - 2.0 * v[i] + v[i + 1];
        let tol = 2.0 * (dv[i - 1] + 2.0 * dv[i] + dv[i + 1]);
        // Track the worst point relative to its own tolerance.
        if d2 - tol > max_second_difference - concavity_tolerance {
            max_second_difference = d2;
            concavity_tolerance = tol;
        }
    }
    Ok(GapScan {
        n,
        points,
        lower_bound_margin,
        lower_bound_tolerance: 2.0 * noise,
        max_second_difference,
        concavity_tolerance,
        v_max: v.iter().copied().fold(0.0, f64::max),
    })
}
