//! Discrete sine transform pair on the interior grid `z_j = j / (G + 1)`.
//!
//! The sine family `h_k = sqrt(2) sin(k pi z)`, `k = 1..=G`, is discretely
//! orthogonal on these nodes:
//! `sum_j sin(k pi z_j) sin(l pi z_j) = (G + 1) / 2 * delta_kl`,
//! so synthesis and analysis are exact inverses for trigonometric
//! polynomials of degree at most `G`.
//!
//! The fast path embeds both transforms in a complex FFT of length
//! `2 (G + 1)`; the naive path evaluates the sums directly and is kept as
//! the reference.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// A reusable FFT plan with scratch buffers for one grid size.
pub struct SineTransform {
    grid: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform").field("grid", &self.grid).finish()
    }
}

impl Clone for SineTransform {
    fn clone(&self) -> Self {
        SineTransform::new(self.grid)
    }
}

impl SineTransform {
    /// Plans the transform for `grid` interior nodes (`grid >= 1`).
    pub fn new(grid: usize) -> Self {
        assert!(grid >= 1, "grid must have at least one node");
        let len = 2 * (grid + 1);
        // Positive-exponent transform: V_n = sum_k c_k exp(+2 pi i k n / len).
        let fft = FftPlanner::new().plan_fft_inverse(len);
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        SineTransform {
            grid,
            fft,
            buf: vec![Complex64::new(0.0, 0.0); len],
            scratch,
        }
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    fn len(&self) -> usize {
        2 * (self.grid + 1)
    }

    /// Grid values of `sum_k coeffs[k-1] h_k`.
    pub fn synthesize(&mut self, coeffs: &[f64], values: &mut [f64]) {
        assert!(coeffs.len() <= self.grid && values.len() == self.grid);
        self.buf.fill(Complex64::new(0.0, 0.0));
        for (k, &a) in coeffs.iter().enumerate() {
            self.buf[k + 1] = Complex64::new(a, 0.0);
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (j, v) in values.iter_mut().enumerate() {
            *v = SQRT_2 * self.buf[j + 1].im;
        }
    }

    /// Grid values of `x = sum_k a_k h_k` and of its derivative
    /// `x' = sum_k a_k sqrt(2) k pi cos(k pi z)`, from one complex FFT.
    pub fn synthesize_with_derivative(
        &mut self,
        coeffs: &[f64],
        values: &mut [f64],
        derivs: &mut [f64],
    ) {
        assert!(coeffs.len() <= self.grid);
        assert!(values.len() == self.grid && derivs.len() == self.grid);
        let len = self.len();
        self.buf.fill(Complex64::new(0.0, 0.0));
        // Pack the cosine series (real part) and the sine series (imaginary
        // part) into one signal; both coefficient sets are real, so they
        // separate through the conjugate symmetry W_{len-n}.
        for (k, &a) in coeffs.iter().enumerate() {
            let kk = (k + 1) as f64;
            self.buf[k + 1] = Complex64::new(kk * PI * a, a);
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        for j in 0..self.grid {
            let n = j + 1;
            let w = self.buf[n];
            let w_mirror = self.buf[len - n];
            derivs[j] = SQRT_2 * 0.5 * (w.re + w_mirror.re);
            values[j] = SQRT_2 * 0.5 * (w_mirror.re - w.re);
        }
    }

    /// Sine coefficients `<f, h_m>` for `m = 1..=coeffs.len()` from grid
    /// values, exact when `f` is a sine polynomial of degree at most `grid`.
    pub fn analyze(&mut self, values: &[f64], coeffs: &mut [f64]) {
        assert!(values.len() == self.grid && coeffs.len() <= self.grid);
        self.buf.fill(Complex64::new(0.0, 0.0));
        for (j, &f) in values.iter().enumerate() {
            self.buf[j + 1] = Complex64::new(f, 0.0);
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = SQRT_2 / (self.grid + 1) as f64;
        for (m, c) in coeffs.iter_mut().enumerate() {
            *c = scale * self.buf[m + 1].im;
        }
    }
}

/// Direct `O(M G)` evaluation of the sine series on the grid.
pub fn synthesize_naive(coeffs: &[f64], grid: usize) -> Vec<f64> {
    let h = 1.0 / (grid + 1) as f64;
    (1..=grid)
        .map(|j| {
            let z = j as f64 * h;
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &a)| a * SQRT_2 * ((k + 1) as f64 * PI * z).sin())
                .sum()
        })
        .collect()
}

/// Direct evaluation of the derivative series on the grid.
pub fn synthesize_derivative_naive(coeffs: &[f64], grid: usize) -> Vec<f64> {
    let h = 1.0 / (grid + 1) as f64;
    (1..=grid)
        .map(|j| {
            let z = j as f64 * h;
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &a)| {
                    let kp = (k + 1) as f64 * PI;
                    a * SQRT_2 * kp * (kp * z).cos()
                })
                .sum()
        })
        .collect()
}

/// Direct discrete projection onto the first `m` sine modes.
pub fn analyze_naive(values: &[f64], m: usize) -> Vec<f64> {
    let grid = values.len();
    let h = 1.0 / (grid + 1) as f64;
    let scale = SQRT_2 / (grid + 1) as f64;
    (1..=m)
        .map(|k| {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(j, &f)| f * (k as f64 * PI * (j + 1) as f64 * h).sin())
                .sum();
            scale * s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(m: usize, seed: u64) -> Vec<f64> {
        // small LCG keeps the test free of generator dependencies
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..m)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn fast_matches_naive_synthesis() {
        for &(m, g) in &[(1, 1), (5, 7), (16, 47), (33, 100)] {
            let a = sample(m, g as u64);
            let mut plan = SineTransform::new(g);
            let mut v = vec![0.0; g];
            let mut d = vec![0.0; g];
            plan.synthesize(&a, &mut v);
            let vn = synthesize_naive(&a, g);
            let dn = synthesize_derivative_naive(&a, g);
            for j in 0..g {
                assert!((v[j] - vn[j]).abs() < 1e-12);
            }
            plan.synthesize_with_derivative(&a, &mut v, &mut d);
            for j in 0..g {
                assert!((v[j] - vn[j]).abs() < 1e-12);
                assert!((d[j] - dn[j]).abs() < 1e-10 * (m as f64));
            }
        }
    }

    #[test]
    fn fast_matches_naive_analysis() {
        let g = 40;
        let f = sample(g, 3);
        let mut plan = SineTransform::new(g);
        let mut c = vec![0.0; 25];
        plan.analyze(&f, &mut c);
        let cn = analyze_naive(&f, 25);
        for k in 0..25 {
            assert!((c[k] - cn[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn analysis_inverts_synthesis() {
        let g = 31;
        let a = sample(g, 9);
        let mut plan = SineTransform::new(g);
        let mut v = vec![0.0; g];
        plan.synthesize(&a, &mut v);
        let mut back = vec![0.0; g];
        plan.analyze(&v, &mut back);
        for k in 0..g {
            assert!((a[k] - back[k]).abs() < 1e-12);
        }
    }
}
