//! Discrete Fourier transform between `χ(ξ)` and the Wigner function.
//!
//! With `ξ = u + iv` and `α = (x + ip)/√2`, the kernel `exp(ξ†α - α†ξ)`
//! becomes `exp(i√2(u·p - v·x))` and
//!
//! ```text
//! W(x, p) = (2π)^{-2n} ∫ d^n u d^n v exp(i√2(u·p - v·x)) χ(u, v)
//! ```
//!
//! integrates to `2^{-n}` over `d^n x d^n p`. The transform is evaluated as a
//! separable Riemann sum, which is spectrally accurate for smooth `χ` that
//! has decayed at the grid edge.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{contract_axis, grid_len, swap_pairs, unravel, Axis, ChiGrid, Provenance};
use crate::error::{Error, Result};

/// `|χ|` allowed on the grid boundary before the transform refuses to run.
pub const BOUNDARY_THRESHOLD: f64 = 1e-6;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Wigner function on a product lattice, axes ordered `(x₀, p₀, x₁, p₁, …)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub axes: Vec<Axis>,
    pub values: Vec<f64>,
    /// `∫ W d^n x d^n p` implied by the kernel, `2^{-n}`.
    pub normalization: f64,
    /// `max |Im W| / max |Re W|` before the imaginary part was dropped.
    pub imag_residual: f64,
}

impl WignerGrid {
    pub fn modes(&self) -> usize {
        self.axes.len() / 2
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    fn cell(&self) -> f64 {
        self.axes.iter().map(|a| a.step).product()
    }

    /// Riemann sum of `W` over the lattice.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell()
    }

    /// Mean and variance of the marginal along `axis`, treating `W` as a weight.
    pub fn marginal_moments(&self, axis: usize) -> (f64, f64) {
        let shape = self.shape();
        let a = self.axes[axis];
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (i, w) in self.values.iter().enumerate() {
            let x = a.value(unravel(i, &shape)[axis]);
            s0 += w;
            s1 += w * x;
            s2 += w * x * x;
        }
        let mean = s1 / s0;
        (mean, s2 / s0 - mean * mean)
    }

    pub fn value_at_origin(&self) -> f64 {
        self.values[(self.values.len() - 1) / 2]
    }
}

fn kernel(rows: &Axis, cols: &Axis, sign: f64, scale: f64) -> Vec<C64> {
    let mut k = Vec::with_capacity(rows.points * cols.points);
    for o in 0..rows.points {
        let y = rows.value(o);
        for i in 0..cols.points {
            k.push(C64::from_polar(scale, sign * std::f64::consts::SQRT_2 * y * cols.value(i)));
        }
    }
    k
}

/// Transforms a complete, boundary-decayed `χ` grid.
///
/// `alpha_axes` gives the output lattice `(x₀, p₀, …)`; by default each
/// quadrature reuses the lattice of its conjugate `ξ` coordinate.
pub fn wigner_transform(grid: &ChiGrid, alpha_axes: Option<Vec<Axis>>) -> Result<WignerGrid> {
    if !grid.is_complete() {
        return Err(Error::InvalidGrid("grid has unsampled points; run hermitian_fill first".into()));
    }
    let max_boundary = grid.boundary_max();
    if max_boundary > BOUNDARY_THRESHOLD {
        return Err(Error::BoundaryDecay { max_boundary, threshold: BOUNDARY_THRESHOLD });
    }
    let modes = grid.modes();
    let xi_axes = grid.axes();
    let alpha = match alpha_axes {
        Some(a) => {
            if a.len() != 2 * modes {
                return Err(Error::DimensionMismatch { expected: 2 * modes, got: a.len() });
            }
            grid_len(&a)?;
            a
        }
        None => (0..modes).flat_map(|m| [xi_axes[2 * m + 1], xi_axes[2 * m]]).collect(),
    };

    let mut data = grid.values().to_vec();
    let mut shape = grid.shape();
    for m in 0..modes {
        let (u, v) = (xi_axes[2 * m], xi_axes[2 * m + 1]);
        let (x, p) = (alpha[2 * m], alpha[2 * m + 1]);
        // u → p with e^{+i√2 up}, v → x with e^{-i√2 vx}
        let (d, s) = contract_axis(&data, &shape, 2 * m, &kernel(&p, &u, 1.0, u.step / TWO_PI), p.points);
        let (d, s) = contract_axis(&d, &s, 2 * m + 1, &kernel(&x, &v, -1.0, v.step / TWO_PI), x.points);
        data = d;
        shape = s;
    }
    let (data, _) = swap_pairs(&data, &shape);

    let max_re = data.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let max_im = data.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok(WignerGrid {
        axes: alpha,
        values: data.iter().map(|z| z.re).collect(),
        normalization: 0.5f64.powi(modes as i32),
        imag_residual: if max_re > 0.0 { max_im / max_re } else { max_im },
    })
}

/// `χ(u, v) = 2^n ∫ d^n x d^n p exp(-i√2(u·p - v·x)) W(x, p)` on `xi_axes`.
pub fn inverse_wigner(w: &WignerGrid, xi_axes: Vec<Axis>) -> Result<ChiGrid> {
    let modes = w.modes();
    if xi_axes.len() != 2 * modes {
        return Err(Error::DimensionMismatch { expected: 2 * modes, got: xi_axes.len() });
    }
    grid_len(&xi_axes)?;
    let mut data: Vec<C64> = w.values.iter().map(|&v| C64::new(v, 0.0)).collect();
    let mut shape = w.shape();
    for m in 0..modes {
        let (x, p) = (w.axes[2 * m], w.axes[2 * m + 1]);
        let (u, v) = (xi_axes[2 * m], xi_axes[2 * m + 1]);
        // x → v with e^{+i√2 vx}, p → u with e^{-i√2 up}
        let (d, s) = contract_axis(&data, &shape, 2 * m, &kernel(&v, &x, 1.0, 2.0 * x.step), v.points);
        let (d, s) = contract_axis(&d, &s, 2 * m + 1, &kernel(&u, &p, -1.0, p.step), u.points);
        data = d;
        shape = s;
    }
    let (data, _) = swap_pairs(&data, &shape);
    let n = data.len();
    ChiGrid::new(xi_axes, data, vec![true; n], None, Provenance::Exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian_field::{GaussianFieldState, ModeKind, ModeSet};
    use std::f64::consts::PI;

    /// Closed-form Gaussian integral of the kernel: `2^{-n}` times the
    /// normalised Gaussian with covariance `V/2`.
    fn gaussian_w(v: &nalgebra::Matrix2<f64>, x: f64, p: f64) -> f64 {
        let c = v * 0.5;
        let inv = c.try_inverse().unwrap();
        let r = nalgebra::Vector2::new(x, p);
        0.5 * (-0.5 * (r.transpose() * inv * r)[0]).exp() / (TWO_PI * c.determinant().sqrt())
    }

    fn single(kind: ModeKind) -> GaussianFieldState {
        GaussianFieldState::single(kind).unwrap()
    }

    #[test]
    fn vacuum_matches_closed_form() {
        let grid = ChiGrid::exact(&single(ModeKind::Vacuum), ChiGrid::square_axes(1, 6.0, 129).unwrap()).unwrap();
        let w = wigner_transform(&grid, None).unwrap();
        assert!(w.imag_residual <= 1e-8);
        assert_eq!(w.normalization, 0.5);
        assert!((w.value_at_origin() / w.integral() - 1.0 / PI).abs() < 1e-4 / PI);
        let v = ModeKind::Vacuum.covariance();
        let peak = gaussian_w(&v, 0.0, 0.0);
        let shape = w.shape();
        for (i, val) in w.values.iter().enumerate() {
            let idx = unravel(i, &shape);
            let (x, p) = (w.axes[0].value(idx[0]), w.axes[1].value(idx[1]));
            assert!((val - gaussian_w(&v, x, p)).abs() <= 1e-4 * peak);
        }
        assert!((w.integral() / w.normalization - 1.0).abs() < 0.02);
    }

    #[test]
    fn thermal_and_squeezed_variances() {
        let th = ChiGrid::exact(&single(ModeKind::Thermal { n: 1.0 }), ChiGrid::square_axes(1, 6.0, 129).unwrap()).unwrap();
        let alpha = vec![Axis::symmetric(10.0, 201).unwrap(); 2];
        let w = wigner_transform(&th, Some(alpha.clone())).unwrap();
        let vac = ChiGrid::exact(&single(ModeKind::Vacuum), ChiGrid::square_axes(1, 6.0, 129).unwrap()).unwrap();
        let w0 = wigner_transform(&vac, Some(alpha)).unwrap();
        let ratio = w.marginal_moments(0).1 / w0.marginal_moments(0).1;
        assert!((ratio / 3.0 - 1.0).abs() < 1e-3, "{ratio}");

        let sq = single(ModeKind::Squeezed { r: 1.0, theta: 0.0 });
        let axes = vec![Axis::symmetric(2.0, 81).unwrap(), Axis::symmetric(16.0, 161).unwrap()];
        let g = ChiGrid::exact(&sq, axes).unwrap();
        let alpha = vec![Axis::symmetric(2.0, 101).unwrap(), Axis::symmetric(14.0, 141).unwrap()];
        let w = wigner_transform(&g, Some(alpha)).unwrap();
        let (vx, vp) = (w.marginal_moments(0).1, w.marginal_moments(1).1);
        assert!((vp / vx / 4f64.exp() - 1.0).abs() < 1e-3, "{}", vp / vx);
        assert!(w.imag_residual <= 1e-8);
    }

    #[test]
    fn refuses_undecayed_grid() {
        let grid = ChiGrid::exact(&single(ModeKind::Vacuum), ChiGrid::square_axes(1, 3.0, 31).unwrap()).unwrap();
        assert!(matches!(wigner_transform(&grid, None), Err(Error::BoundaryDecay { .. })));
    }

    #[test]
    fn round_trip_recovers_chi() {
        for kind in [ModeKind::Vacuum, ModeKind::Thermal { n: 0.5 }] {
            let state = single(kind);
            let axes = ChiGrid::square_axes(1, 6.0, 257).unwrap();
            let grid = ChiGrid::exact(&state, axes.clone()).unwrap();
            let w = wigner_transform(&grid, None).unwrap();
            let back = inverse_wigner(&w, axes).unwrap();
            for i in 0..grid.len() {
                if grid.point(i)[0].norm() <= 3.0 {
                    assert!((back.values()[i] - grid.values()[i]).norm() <= 1e-4, "{:?}", grid.point(i));
                }
            }
        }
    }

    #[test]
    fn two_mode_product() {
        let modes = ModeSet::new(1, 2.0 * PI, 1.0, vec![vec![1], vec![2]]).unwrap();
        let state = GaussianFieldState::new(modes, vec![ModeKind::Vacuum, ModeKind::Thermal { n: 1.0 }]).unwrap();
        let grid = ChiGrid::exact(&state, ChiGrid::square_axes(2, 6.0, 33).unwrap()).unwrap();
        let w = wigner_transform(&grid, None).unwrap();
        assert_eq!(w.normalization, 0.25);
        assert!((w.integral() / w.normalization - 1.0).abs() < 0.02);
        let ratio = w.marginal_moments(2).1 / w.marginal_moments(0).1;
        assert!((ratio / 3.0 - 1.0).abs() < 0.02, "{ratio}");
        assert!(w.imag_residual <= 1e-8);
    }
}
