//! Zero-mean, real, 1-periodic trigonometric polynomials.
//!
//! A potential is stored by its positive Fourier modes `c_1, ..., c_N`;
//! reality fixes `c_{-n} = conj(c_n)` and the mean `c_0` is identically zero.
//! The sequence norms follow the real-pair convention
//! `|f|_m^2 = sum_{n>=1} (2 pi n)^{2m} |f_n|^2`, which for the complex
//! coefficients stored here means `|f_n|^2 = 2 |c_n|^2`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Exponent `m` of the weight `(2 pi n)^{2m}` in a Sobolev-type norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevIndex(pub f64);

impl SobolevIndex {
    pub const H_MINUS_1: SobolevIndex = SobolevIndex(-1.0);
    pub const L2: SobolevIndex = SobolevIndex(0.0);
    pub const H1: SobolevIndex = SobolevIndex(1.0);
}

/// `sum_{|n| <= N, n != 0} c_n e^{i 2 pi n x}` with `c_{-n} = conj(c_n)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPotential {
    coeffs: Vec<Complex64>,
}

impl TrigPotential {
    /// Builds a potential from `c_1..c_N` (index 0 holds mode 1).
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        TrigPotential { coeffs }
    }

    pub fn zero() -> Self {
        TrigPotential { coeffs: Vec::new() }
    }

    /// Sum of `(n, c_n)` contributions; repeated modes accumulate.
    pub fn from_modes<I: IntoIterator<Item = (usize, Complex64)>>(modes: I) -> Self {
        let mut coeffs = Vec::new();
        for (n, c) in modes {
            assert!(n >= 1, "mode 0 is excluded from zero-mean potentials");
            if coeffs.len() < n {
                coeffs.resize(n, Complex64::new(0.0, 0.0));
            }
            coeffs[n - 1] += c;
        }
        TrigPotential { coeffs }
    }

    /// `amp * cos(2 pi n x)`.
    pub fn cosine(n: usize, amp: f64) -> Self {
        Self::from_modes([(n, Complex64::new(amp / 2.0, 0.0))])
    }

    /// `amp * sin(2 pi n x)`.
    pub fn sine(n: usize, amp: f64) -> Self {
        Self::from_modes([(n, Complex64::new(0.0, -amp / 2.0))])
    }

    /// Mode cutoff `N` (number of stored positive modes).
    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    /// Coefficient of `e^{i 2 pi n x}` for any integer `n`.
    pub fn coeff(&self, n: i64) -> Complex64 {
        let k = n.unsigned_abs() as usize;
        if n == 0 || k > self.coeffs.len() {
            return Complex64::new(0.0, 0.0);
        }
        let c = self.coeffs[k - 1];
        if n > 0 {
            c
        } else {
            c.conj()
        }
    }

    /// Point value `psi(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let step = Complex64::from_polar(1.0, 2.0 * PI * x);
        let mut rot = step;
        let mut acc = 0.0;
        for c in &self.coeffs {
            acc += c.re * rot.re - c.im * rot.im;
            rot *= step;
        }
        2.0 * acc
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::new(0.0, 2.0 * PI * (i + 1) as f64))
            .collect();
        TrigPotential { coeffs }
    }

    /// The zero-mean `q` with `q' = psi`.
    pub fn antiderivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c / Complex64::new(0.0, 2.0 * PI * (i + 1) as f64))
            .collect();
        TrigPotential { coeffs }
    }

    /// Keeps modes `|n| <= cutoff`.
    pub fn project(&self, cutoff: usize) -> Self {
        let keep = cutoff.min(self.coeffs.len());
        TrigPotential {
            coeffs: self.coeffs[..keep].to_vec(),
        }
    }

    /// Drops trailing modes whose modulus is below `rel * max |c_n|`.
    pub fn trimmed(&self, rel: f64) -> Self {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = rel * max;
        let keep = self.coeffs.iter().rposition(|c| c.norm() > cut).map_or(0, |i| i + 1);
        TrigPotential {
            coeffs: self.coeffs[..keep].to_vec(),
        }
    }

    /// `psi(x - shift)`.
    pub fn translate(&self, shift: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::from_polar(1.0, -2.0 * PI * (i + 1) as f64 * shift))
            .collect();
        TrigPotential { coeffs }
    }

    pub fn scale(&self, s: f64) -> Self {
        TrigPotential {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn sobolev_norm(&self, m: SobolevIndex) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (2.0 * PI * (i + 1) as f64).powf(2.0 * m.0) * 2.0 * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `(int_0^1 psi^2 dx)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.sobolev_norm(SobolevIndex::L2)
    }

    /// Norm of the zero-mean antiderivative.
    pub fn norm_h_minus_1(&self) -> f64 {
        self.sobolev_norm(SobolevIndex::H_MINUS_1)
    }

    /// `int_0^1 f g dx`.
    pub fn inner(&self, other: &TrigPotential) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| 2.0 * (a * b.conj()).re)
            .sum()
    }

    /// Samples `psi(j / m)` for `j = 0..m`.
    pub fn evaluate_grid(&self, m: usize) -> Result<Vec<f64>> {
        let needed = 2 * self.coeffs.len() + 1;
        if m < needed {
            return Err(Error::Aliasing {
                grid: m,
                modes: self.coeffs.len(),
                needed,
            });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (i, c) in self.coeffs.iter().enumerate() {
            buf[i + 1] = *c;
            buf[m - i - 1] = c.conj();
        }
        FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
        Ok(buf.into_iter().map(|z| z.re).collect())
    }

    /// Recovers modes `1..=n_modes` from equispaced samples; the mean is discarded.
    pub fn from_grid(samples: &[f64], n_modes: usize) -> Self {
        let m = samples.len();
        let mut buf: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let top = n_modes.min((m.saturating_sub(1)) / 2);
        let scale = 1.0 / m as f64;
        TrigPotential {
            coeffs: buf[1..=top].iter().map(|c| c * scale).collect(),
        }
    }

    /// Zero-mean part of `psi^2` together with its mean `int psi^2`.
    pub fn square(&self) -> (f64, TrigPotential) {
        let n = self.coeffs.len();
        if n == 0 {
            return (0.0, TrigPotential::zero());
        }
        let m = dealiased_grid(4 * n);
        let sq: Vec<f64> = self
            .evaluate_grid(m)
            .expect("grid sized for the product")
            .into_iter()
            .map(|v| v * v)
            .collect();
        let mean = sq.iter().sum::<f64>() / m as f64;
        (mean, TrigPotential::from_grid(&sq, 2 * n))
    }

    /// `1/2 int_0^1 (psi'^2 + 2 psi^3) dx`, exact for trigonometric polynomials.
    pub fn hamiltonian(&self) -> f64 {
        let n = self.coeffs.len();
        if n == 0 {
            return 0.0;
        }
        let gradient = self.sobolev_norm(SobolevIndex::H1).powi(2);
        let m = dealiased_grid(3 * n);
        let samples = self.evaluate_grid(m).expect("grid sized for the cubic");
        let cubic = samples.iter().map(|v| v * v * v).sum::<f64>() / m as f64;
        0.5 * (gradient + 2.0 * cubic)
    }

    /// Stable hex digest of the coefficient bits.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for c in &self.coeffs {
            h.update(c.re.to_bits().to_le_bytes());
            h.update(c.im.to_bits().to_le_bytes());
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn zip_with(&self, other: &TrigPotential, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        let coeffs = (0..n)
            .map(|i| {
                f(
                    self.coeffs.get(i).copied().unwrap_or(zero),
                    other.coeffs.get(i).copied().unwrap_or(zero),
                )
            })
            .collect();
        TrigPotential { coeffs }
    }
}

/// Smallest 5-smooth grid size `>= degree + 1`; the trapezoid rule on it is exact
/// for trigonometric polynomials of that degree.
pub fn dealiased_grid(degree: usize) -> usize {
    let mut m = (degree + 1).max(4);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

impl Add for &TrigPotential {
    type Output = TrigPotential;
    fn add(self, rhs: &TrigPotential) -> TrigPotential {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &TrigPotential {
    type Output = TrigPotential;
    fn sub(self, rhs: &TrigPotential) -> TrigPotential {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &TrigPotential {
    type Output = TrigPotential;
    fn neg(self) -> TrigPotential {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &TrigPotential {
    type Output = TrigPotential;
    fn mul(self, rhs: f64) -> TrigPotential {
        self.scale(rhs)
    }
}
