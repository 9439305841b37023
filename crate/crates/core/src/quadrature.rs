//! Gauss-type quadrature nodes.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Interior Chebyshev angles `theta_i = i pi / (m + 1)`, `i = 1..=m`, for
/// the second-kind rule `int sqrt(1-t^2) f(t) dt ~ pi/(m+1) sum sin^2(theta_i) f(cos theta_i)`.
/// With `m + 1` a power of two the node sets nest under doubling.
pub fn chebyshev_second_kind_angles(m: usize) -> impl Iterator<Item = f64> {
    (1..=m).map(move |i| i as f64 * PI / (m + 1) as f64)
}

/// Angles `(2i - 1) pi / (2m)` of the first-kind rule
/// `int f(t)/sqrt(1-t^2) dt ~ pi/m sum f(cos theta_i)`.
pub fn chebyshev_first_kind_angles(m: usize) -> impl Iterator<Item = f64> {
    (1..=m).map(move |i| (2 * i - 1) as f64 * PI / (2 * m) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-14, "n={n} deg={deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn second_kind_rule_on_semicircle_moment() {
        // int_{-1}^{1} sqrt(1-t^2) t^2 dt = pi/8
        let m = 15;
        let s: f64 = chebyshev_second_kind_angles(m)
            .map(|th| PI / (m + 1) as f64 * th.sin().powi(2) * th.cos().powi(2))
            .sum();
        assert_relative_eq!(s, PI / 8.0, max_relative = 1e-14);
    }

    #[test]
    fn first_kind_rule_on_arcsine_moment() {
        // int t^4 / sqrt(1-t^2) dt = 3 pi / 8
        let m = 8;
        let s: f64 = chebyshev_first_kind_angles(m)
            .map(|th| PI / m as f64 * th.cos().powi(4))
            .sum();
        assert_relative_eq!(s, 3.0 * PI / 8.0, max_relative = 1e-14);
    }
}
