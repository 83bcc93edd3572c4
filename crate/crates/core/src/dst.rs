//! Type-I discrete sine transform in `y`, backed by an FFT of the odd
//! extension.

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::banded::Scalar;
use crate::error::{Error, Result};
use crate::grid::GridFunction2D;

/// Sine transform on `ny` intervals. Forward coefficients are
/// `c_k = 2 h sum_j f_j sin(k pi y_j)`, `k = 1..=modes`; the inverse
/// sums the truncated series at the nodes.
#[derive(Clone)]
pub struct SineTransform {
    ny: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform").field("ny", &self.ny).finish()
    }
}

impl SineTransform {
    pub fn new(ny: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * ny);
        Self { ny, fft }
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn max_modes(&self) -> usize {
        self.ny - 1
    }

    pub fn check_modes(&self, modes: usize) -> Result<()> {
        if modes == 0 || modes > self.max_modes() {
            return Err(Error::NyquistExceeded { modes, max: self.max_modes() });
        }
        Ok(())
    }

    /// `S_k = sum_{j=1}^{ny-1} v_j sin(pi j k / ny)` for `k = 0..ny`.
    fn sine_sums(&self, interior: impl Fn(usize) -> C64) -> Vec<C64> {
        let n = self.ny;
        let mut buf = vec![C64::new(0.0, 0.0); 2 * n];
        for j in 1..n {
            let v = interior(j);
            buf[j] = v;
            buf[2 * n - j] = -v;
        }
        self.fft.process(&mut buf);
        buf.truncate(n);
        let half_i = C64::new(0.0, 0.5);
        buf.iter().map(|y| half_i * y).collect()
    }

    /// Coefficients `c_1..=c_modes` of one `y`-profile of length `ny + 1`.
    pub fn forward<T: Scalar + Into<C64>>(&self, profile: &[T], modes: usize) -> Vec<C64> {
        let s = self.sine_sums(|j| profile[j].into());
        let scale = 2.0 / self.ny as f64;
        (1..=modes).map(|k| s[k] * scale).collect()
    }

    /// Node values `y_0..=y_ny` of `sum_k c_k sin(k pi y)`.
    pub fn inverse(&self, coeffs: &[C64]) -> Vec<C64> {
        let modes = coeffs.len();
        let s = self.sine_sums(|k| if k <= modes { coeffs[k - 1] } else { C64::new(0.0, 0.0) });
        let mut out = s;
        out[0] = C64::new(0.0, 0.0);
        out.push(C64::new(0.0, 0.0));
        out
    }
}

/// Per-`x` arrays of the first `modes` sine coefficients.
pub fn sine_transform<T: Scalar + Into<C64>>(field: &GridFunction2D<T>, modes: usize) -> Result<Vec<Vec<C64>>> {
    let t = SineTransform::new(field.ny);
    t.check_modes(modes)?;
    Ok((0..=field.nx).map(|i| t.forward(field.row(i), modes)).collect())
}

/// Rebuild a grid function from per-`x` coefficient arrays.
pub fn inverse_sine_transform(template: &GridFunction2D<C64>, coeffs: &[Vec<C64>]) -> GridFunction2D<C64> {
    let t = SineTransform::new(template.ny);
    let mut out = template.clone();
    for (i, c) in coeffs.iter().enumerate() {
        out.row_mut(i).copy_from_slice(&t.inverse(c));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Side;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_profile() {
        let g = GridFunction2D::<f64>::from_fn(Side::Infected, -1.0, 0.0, 8, 64, |x, y| (x + 2.0) * (PI * y).sin());
        let c = sine_transform(&g, 10).unwrap();
        for (i, ci) in c.iter().enumerate() {
            assert!((ci[0].re - (g.x(i) + 2.0)).abs() < 1e-13);
            for ck in &ci[1..] {
                assert!(ck.norm() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_field() {
        let g = GridFunction2D::<f64>::zeros(Side::Susceptible, 0.0, 1.0, 4, 16);
        for ci in sine_transform(&g, 15).unwrap() {
            assert!(ci.iter().all(|c| c.norm() == 0.0));
        }
    }

    #[test]
    fn two_mode_profile_on_fine_grid() {
        let g = GridFunction2D::<f64>::from_fn(Side::Susceptible, 0.0, 1.0, 2, 512, |_, y| {
            (2.0 * PI * y).sin() + 0.5 * (5.0 * PI * y).sin()
        });
        let c = &sine_transform(&g, 40).unwrap()[1];
        for (k, ck) in c.iter().enumerate() {
            let expect = match k + 1 {
                2 => 1.0,
                5 => 0.5,
                _ => 0.0,
            };
            assert!((ck - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn roundtrip_with_full_mode_count() {
        let ny = 32;
        let profile: Vec<f64> = (0..=ny).map(|j| if j == 0 || j == ny { 0.0 } else { ((j * 7919) % 13) as f64 - 6.0 }).collect();
        let t = SineTransform::new(ny);
        let back = t.inverse(&t.forward(&profile, ny - 1));
        for (a, b) in profile.iter().zip(&back) {
            assert!((a - b.re).abs() < 1e-12 && b.im.abs() < 1e-12);
        }
    }

    #[test]
    fn nyquist_guard() {
        let g = GridFunction2D::<f64>::zeros(Side::Infected, -1.0, 0.0, 4, 16);
        assert_eq!(sine_transform(&g, 16).unwrap_err(), Error::NyquistExceeded { modes: 16, max: 15 });
    }
}
