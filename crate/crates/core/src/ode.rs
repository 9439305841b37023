//! Fundamental matrix of `-y'' + V(x) y = lambda y` over one period.
//!
//! Integrated with the 6-stage Gauss-Legendre collocation method (order 12).
//! Gauss methods conserve quadratic invariants, so the Wronskian of the
//! computed fundamental system stays at 1 up to rounding. The
//! `lambda`-derivative is obtained by differentiating the discrete scheme,
//! which reuses the LU factorization of each step.

use std::sync::OnceLock;

use nalgebra::{ComplexField, Matrix2, SMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

const STAGES: usize = 6;
const ORDER: i32 = 2 * STAGES as i32;
const DIM: usize = 2 * STAGES;

/// Scalar types usable as spectral parameter.
pub trait Spectral: ComplexField<RealField = f64> + Copy {
    fn to_complex(self) -> Complex64;
}

impl Spectral for f64 {
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Spectral for Complex64 {
    fn to_complex(self) -> Complex64 {
        self
    }
}

struct Tableau {
    c: [f64; STAGES],
    a: [[f64; STAGES]; STAGES],
    b: [f64; STAGES],
}

fn tableau() -> &'static Tableau {
    static TABLEAU: OnceLock<Tableau> = OnceLock::new();
    TABLEAU.get_or_init(|| {
        let (x, w) = gauss_legendre(STAGES);
        let mut c = [0.0; STAGES];
        let mut b = [0.0; STAGES];
        for i in 0..STAGES {
            c[i] = 0.5 * (x[i] + 1.0);
            b[i] = 0.5 * w[i];
        }
        let lagrange = |j: usize, t: f64| {
            (0..STAGES)
                .filter(|&m| m != j)
                .map(|m| (t - c[m]) / (c[j] - c[m]))
                .product::<f64>()
        };
        // a_ij = int_0^{c_i} l_j(t) dt, exact with the same Gauss rule.
        let mut a = [[0.0; STAGES]; STAGES];
        for i in 0..STAGES {
            for j in 0..STAGES {
                a[i][j] = (0..STAGES).map(|k| c[i] * b[k] * lagrange(j, c[i] * c[k])).sum();
            }
        }
        Tableau { c, a, b }
    })
}

/// Fundamental matrix `[[theta, phi], [theta', phi']]` at `x = 1`, and
/// optionally its `lambda`-derivative.
#[derive(Debug, Clone, Copy)]
pub struct PeriodMap<T> {
    pub y: Matrix2<T>,
    pub dy: Option<Matrix2<T>>,
    pub steps: usize,
    /// Sum of accepted local error estimates, in units of `1 + |Y|`.
    pub error_estimate: f64,
}

/// Integration controls.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Local error tolerance per step, relative to `1 + |Y|`.
    pub tol: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            tol: 1e-14,
            min_step: 1e-10,
            max_steps: 200_000,
        }
    }
}

type Stages<T> = SMatrix<T, DIM, 2>;

struct Step<T> {
    y: Matrix2<T>,
    dy: Option<Matrix2<T>>,
}

fn real<T: Spectral>(v: f64) -> T {
    T::from_real(v)
}

fn collocation_step<T: Spectral>(
    v: &dyn Fn(f64) -> f64,
    lambda: T,
    x: f64,
    h: f64,
    y: &Matrix2<T>,
    dy: Option<&Matrix2<T>>,
) -> Option<Step<T>> {
    let tab = tableau();
    let mut shifted = [T::zero(); STAGES];
    for i in 0..STAGES {
        shifted[i] = real::<T>(v(x + tab.c[i] * h)) - lambda;
    }
    let mut m = SMatrix::<T, DIM, DIM>::identity();
    for i in 0..STAGES {
        for j in 0..STAGES {
            let ha = real::<T>(h * tab.a[i][j]);
            m[(2 * i, 2 * j + 1)] -= ha;
            m[(2 * i + 1, 2 * j)] -= ha * shifted[i];
        }
    }
    // A_i Z with A_i = [[0, 1], [V_i - lambda, 0]].
    let apply = |i: usize, z: &Matrix2<T>, out: &mut Stages<T>| {
        for col in 0..2 {
            out[(2 * i, col)] += z[(1, col)];
            out[(2 * i + 1, col)] += shifted[i] * z[(0, col)];
        }
    };
    let mut rhs = Stages::<T>::zeros();
    for i in 0..STAGES {
        apply(i, y, &mut rhs);
    }
    let lu = m.lu();
    let k = lu.solve(&rhs)?;
    let mut y_new = *y;
    for i in 0..STAGES {
        let hb = real::<T>(h * tab.b[i]);
        for r in 0..2 {
            for col in 0..2 {
                y_new[(r, col)] += hb * k[(2 * i + r, col)];
            }
        }
    }
    let dy_new = match dy {
        None => None,
        Some(dy) => {
            let mut rhs = Stages::<T>::zeros();
            for i in 0..STAGES {
                apply(i, dy, &mut rhs);
                // d/dlambda A = [[0, 0], [-1, 0]] acting on the stage value Z_i.
                for col in 0..2 {
                    let mut z0 = y[(0, col)];
                    for j in 0..STAGES {
                        z0 += real::<T>(h * tab.a[i][j]) * k[(2 * j, col)];
                    }
                    rhs[(2 * i + 1, col)] -= z0;
                }
            }
            let kd = lu.solve(&rhs)?;
            let mut out = *dy;
            for i in 0..STAGES {
                let hb = real::<T>(h * tab.b[i]);
                for r in 0..2 {
                    for col in 0..2 {
                        out[(r, col)] += hb * kd[(2 * i + r, col)];
                    }
                }
            }
            Some(out)
        }
    };
    Some(Step { y: y_new, dy: dy_new })
}

fn scaled_difference<T: Spectral>(a: &Matrix2<T>, b: &Matrix2<T>) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = (*x - *y).modulus() / (1.0 + y.modulus());
        worst = worst.max(d);
    }
    worst
}

/// Integrates the fundamental system of `-y'' + v(x) y = lambda y` from 0 to 1.
pub fn period_map<T: Spectral>(
    v: &dyn Fn(f64) -> f64,
    lambda: T,
    with_derivative: bool,
    opts: &OdeOptions,
) -> Result<PeriodMap<T>> {
    let fail = |x: f64| Error::Integrator {
        lambda: lambda.to_complex(),
        x,
    };
    let mut y = Matrix2::<T>::identity();
    let mut dy = with_derivative.then(Matrix2::<T>::zeros);
    let mut x = 0.0;
    let scale = lambda.modulus().sqrt() + 1.0;
    let mut h = (2.0 / scale).min(0.25);
    let mut steps = 0;
    let mut error_estimate = 0.0;
    let richardson = (2f64).powi(ORDER) - 1.0;
    loop {
        let last = 1.0 - x <= h;
        if last {
            h = 1.0 - x;
        }
        let full = collocation_step(v, lambda, x, h, &y, dy.as_ref()).ok_or_else(|| fail(x))?;
        let half = collocation_step(v, lambda, x, 0.5 * h, &y, dy.as_ref()).ok_or_else(|| fail(x))?;
        let two =
            collocation_step(v, lambda, x + 0.5 * h, 0.5 * h, &half.y, half.dy.as_ref()).ok_or_else(|| fail(x))?;
        let mut err = scaled_difference(&full.y, &two.y);
        if let (Some(a), Some(b)) = (&full.dy, &two.dy) {
            err = err.max(scaled_difference(a, b));
        }
        err /= richardson;
        if !err.is_finite() {
            return Err(fail(x));
        }
        if err <= opts.tol {
            y = two.y;
            dy = two.dy;
            x += h;
            steps += 1;
            error_estimate += err;
            if last {
                break;
            }
        }
        let factor = if err == 0.0 {
            4.0
        } else {
            (0.9 * (opts.tol / err).powf(1.0 / (ORDER as f64 + 1.0))).clamp(0.2, 4.0)
        };
        h *= factor;
        if h < opts.min_step || steps > opts.max_steps {
            return Err(fail(x));
        }
    }
    Ok(PeriodMap {
        y,
        dy,
        steps,
        error_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tableau_rows_integrate_constants() {
        let t = tableau();
        for i in 0..STAGES {
            let row: f64 = t.a[i].iter().sum();
            assert_relative_eq!(row, t.c[i], epsilon = 1e-15);
        }
        assert_relative_eq!(t.b.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn free_operator_matches_closed_form() {
        let zero = |_x: f64| 0.0;
        for lambda in [0.3, 9.8696, 100.0, 2500.0] {
            let m = period_map(&zero, lambda, true, &OdeOptions::default()).unwrap();
            let k: f64 = lambda.sqrt();
            assert_relative_eq!(m.y[(0, 0)], k.cos(), epsilon = 1e-12);
            assert_relative_eq!(m.y[(0, 1)], k.sin() / k, epsilon = 1e-12);
            assert_relative_eq!(m.y[(1, 0)], -k * k.sin(), epsilon = 1e-10);
            // d/dlambda cos(sqrt(lambda)) = -sin(k) / (2k)
            let dy = m.dy.unwrap();
            assert_relative_eq!(dy[(0, 0)], -k.sin() / (2.0 * k), epsilon = 1e-12);
        }
    }

    #[test]
    fn negative_and_complex_lambda() {
        let zero = |_x: f64| 0.0;
        let m = period_map(&zero, -4.0, false, &OdeOptions::default()).unwrap();
        assert_relative_eq!(m.y[(0, 0)], 2f64.cosh(), max_relative = 1e-13);
        let lam = Complex64::new(20.0, 5.0);
        let m = period_map(&zero, lam, false, &OdeOptions::default()).unwrap();
        let expect = lam.sqrt().cos();
        assert!((m.y[(0, 0)] - expect).norm() < 1e-11);
    }
}
