//! Mean-zero Gaussian fit: for each mode, weighted least squares of
//! `-2 ln|χ|` against `u² V_pp - 2uv V_xp + v² V_xx` on the plane where all
//! other displacements vanish.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector3};

use super::{ChiGrid, Provenance};
use crate::error::{Error, Result};
use crate::gaussian_field::{GaussianFieldState, ModeKind, ModeSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Points with `|χ|` below this are dropped (their logarithm is noise-dominated).
    pub min_abs: f64,
}

impl FitOptions {
    pub fn for_grid(grid: &ChiGrid) -> Self {
        match grid.provenance() {
            Provenance::Exact => FitOptions { min_abs: 1e-8 },
            Provenance::Sampled { .. } => FitOptions { min_abs: 0.1 },
        }
    }
}

/// Fitted covariance of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFit {
    pub covariance: Matrix2<f64>,
    /// Covariance of the estimates `(V_pp, V_xp, V_xx)`, from the weighted normal matrix.
    pub param_covariance: Matrix3<f64>,
    pub points_used: usize,
    /// Weighted root-mean-square residual (unit weights for exact grids).
    pub residual: f64,
    /// `V` positive definite and `det V ≥ 1` (within `1e-9`).
    pub physical: bool,
}

impl ModeFit {
    /// `n = (√det V - 1)/2`, the thermal occupation of the symplectic eigenvalue.
    pub fn thermal_occupation(&self) -> f64 {
        0.5 * (self.covariance.determinant().max(0.0).sqrt() - 1.0)
    }

    /// First-order standard error of [`Self::thermal_occupation`].
    pub fn thermal_occupation_stderr(&self) -> f64 {
        let v = &self.covariance;
        let det = v.determinant();
        if det <= 0.0 {
            return f64::INFINITY;
        }
        // ∂n/∂(V_pp, V_xp, V_xx) with det = V_pp V_xx - V_xp²
        let k = 0.25 / det.sqrt();
        let grad = Vector3::new(k * v[(0, 0)], -2.0 * k * v[(0, 1)], k * v[(1, 1)]);
        (grad.transpose() * self.param_covariance * grad)[(0, 0)].max(0.0).sqrt()
    }

    /// Standard errors of `(V_pp, V_xp, V_xx)`.
    pub fn param_stderr(&self) -> [f64; 3] {
        [0, 1, 2].map(|j| self.param_covariance[(j, j)].sqrt())
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let e = self.covariance.symmetric_eigenvalues();
        let (a, b) = (e[0].min(e[1]), e[0].max(e[1]));
        [a, b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFit {
    pub modes: Vec<ModeFit>,
    /// Set when any mode's covariance is unphysical, typically from
    /// undersampling or shot noise.
    pub flagged: bool,
}

impl GaussianFit {
    /// Nearest named state: thermal if isotropic, squeezed if pure.
    pub fn to_state(&self, modes: ModeSet, tol: f64) -> Result<GaussianFieldState> {
        let kinds = self
            .modes
            .iter()
            .map(|m| {
                let v = m.covariance;
                let c = 0.5 * (v[(0, 0)] + v[(1, 1)]);
                let sc = 0.5 * (v[(1, 1)] - v[(0, 0)]);
                let ss = -v[(0, 1)];
                let s = sc.hypot(ss);
                if s <= tol {
                    let n = 0.5 * (c - 1.0);
                    return if n.abs() <= tol { Ok(ModeKind::Vacuum) } else { Ok(ModeKind::Thermal { n: n.max(0.0) }) };
                }
                if (v.determinant() - 1.0).abs() <= tol {
                    return Ok(ModeKind::Squeezed { r: 0.5 * s.asinh(), theta: ss.atan2(sc) });
                }
                Err(Error::Fit(format!("covariance {v:?} is neither thermal nor pure squeezed")))
            })
            .collect::<Result<Vec<_>>>()?;
        GaussianFieldState::new(modes, kinds)
    }
}

/// Fits a mean-zero Gaussian covariance to every mode of `grid`.
pub fn gaussian_fit(grid: &ChiGrid, opts: Option<FitOptions>) -> Result<GaussianFit> {
    let opts = opts.unwrap_or_else(|| FitOptions::for_grid(grid));
    let fits = (0..grid.modes()).map(|m| fit_mode(grid, m, &opts)).collect::<Result<Vec<_>>>()?;
    let flagged = fits.iter().any(|f| !f.physical);
    Ok(GaussianFit { modes: fits, flagged })
}

fn fit_mode(grid: &ChiGrid, mode: usize, opts: &FitOptions) -> Result<ModeFit> {
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    let mut reductions = Vec::new();
    let (shots, sin2) = match grid.provenance() {
        Provenance::Sampled { shots, theta } => (shots as f64, theta.sin().powi(2)),
        Provenance::Exact => (f64::INFINITY, 1.0),
    };
    for i in 0..grid.len() {
        if !grid.present()[i] {
            continue;
        }
        let xi = grid.point(i);
        if xi.iter().enumerate().any(|(k, z)| k != mode && z.norm() != 0.0) || xi[mode].norm() == 0.0 {
            continue;
        }
        let z = grid.values()[i];
        let a = z.norm();
        if a < opts.min_abs {
            continue;
        }
        let (u, v) = (xi[mode].re, xi[mode].im);
        rows.push([u * u, -2.0 * u * v, v * v]);
        // Re χ̂ and Im χ̂ carry binomial variances (1 - Re²χ)/M and (1 - Im²χ)/M
        // (over sin²θ), so E[-2 ln|χ̂|] ≈ -2 ln|χ| - cos(2 arg χ)/M
        targets.push(-2.0 * a.ln() + (z.re * z.re - z.im * z.im) / (a * a * shots));
        // a single readout has stderr² = (2 - sin²θ|χ̂|²)/(M sin²θ); Hermitian
        // averaging of a measured pair lowers it by about one half
        reductions.push(grid.stderr().map(|s| s[i].powi(2) * shots * sin2 / (2.0 - sin2 * a * a)));
    }
    if rows.len() < 3 {
        return Err(Error::Fit(format!("mode {mode}: only {} usable points", rows.len())));
    }
    let k = rows.len();
    let solve = |weights: &[f64]| -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
        let a = DMatrix::from_fn(k, 3, |r, c| rows[r][c] * weights[r].sqrt());
        let b = DVector::from_fn(k, |r, _| targets[r] * weights[r].sqrt());
        let x = a.clone().svd(true, true).solve(&b, 1e-14).map_err(|e| Error::Fit(e.to_string()))?;
        Ok((a, b, x))
    };
    // σ(-2 ln|χ|) ≈ 2σ_r/|χ| with σ_r the noise along χ, which is real for a
    // mean-zero Gaussian: σ_r² = (1 - sin²θ|χ|²)/(M sin²θ). The first pass takes
    // |χ| from the data, the second from the first-pass model, so that the
    // weights do not correlate with the noise.
    let weight = |r: usize, abs: f64| {
        reductions[r].map_or(1.0, |red| {
            let var = ((1.0 - sin2 * abs * abs) / (shots * sin2)).max(1.0 / (shots * shots)) * red;
            abs * abs / (4.0 * var)
        })
    };
    let first: Vec<f64> = (0..k).map(|r| weight(r, (-0.5 * targets[r]).exp())).collect();
    let (mut a, mut b, mut x) = solve(&first)?;
    if grid.stderr().is_some() {
        let model: Vec<f64> = (0..k)
            .map(|r| weight(r, (-0.5 * (rows[r][0] * x[0] + rows[r][1] * x[1] + rows[r][2] * x[2])).exp()))
            .collect();
        (a, b, x) = solve(&model)?;
    }
    let resid = &a * &x - &b;
    let residual = (resid.norm_squared() / k as f64).sqrt();

    let normal = a.transpose() * &a;
    let cov_params = normal.try_inverse().ok_or_else(|| Error::Fit(format!("mode {mode}: degenerate sample geometry")))?;
    // exact weights for sampled grids, residual-scaled for exact ones
    let sigma2 = if grid.stderr().is_some() { 1.0 } else { resid.norm_squared() / (k.saturating_sub(3).max(1)) as f64 };
    let param_covariance = Matrix3::from_fn(|r, c| cov_params[(r, c)] * sigma2);

    let (v_pp, v_xp, v_xx) = (x[0], x[1], x[2]);
    let covariance = Matrix2::new(v_xx, v_xp, v_xp, v_pp);
    let physical = v_xx > 0.0 && v_pp > 0.0 && covariance.determinant() >= 1.0 - 1e-9;
    Ok(ModeFit { covariance, param_covariance, points_used: k, residual, physical })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian_field::ModeKind;
    use num_complex::Complex64 as C64;

    fn single(kind: ModeKind) -> GaussianFieldState {
        GaussianFieldState::single(kind).unwrap()
    }

    #[test]
    fn exact_thermal() {
        let grid = ChiGrid::exact(&single(ModeKind::Thermal { n: 1.0 }), ChiGrid::square_axes(1, 3.0, 31).unwrap()).unwrap();
        let fit = gaussian_fit(&grid, None).unwrap();
        assert!(!fit.flagged);
        let v = fit.modes[0].covariance;
        assert!((v - Matrix2::new(3.0, 0.0, 0.0, 3.0)).abs().max() <= 1e-8, "{v}");
        assert!((fit.modes[0].thermal_occupation() - 1.0).abs() < 1e-8);
        let back = fit.to_state(ModeSet::single(1, 1.0).unwrap(), 1e-6).unwrap();
        assert!(matches!(back.kind(0).unwrap(), ModeKind::Thermal { n } if (n - 1.0).abs() < 1e-8));
    }

    #[test]
    fn exact_squeezed() {
        let sq = single(ModeKind::Squeezed { r: 1.0, theta: 0.0 });
        let grid = ChiGrid::exact(&sq, ChiGrid::square_axes(1, 3.0, 31).unwrap()).unwrap();
        let fit = gaussian_fit(&grid, None).unwrap();
        let [lo, hi] = fit.modes[0].eigenvalues();
        assert!((lo - (-2f64).exp()).abs() <= 1e-6 && (hi - 2f64.exp()).abs() <= 1e-6);
        let back = fit.to_state(ModeSet::single(1, 1.0).unwrap(), 1e-6).unwrap();
        assert!(matches!(back.kind(0).unwrap(), ModeKind::Squeezed { r, theta } if (r - 1.0).abs() < 1e-6 && theta.abs() < 1e-6));
    }

    #[test]
    fn unphysical_fit_is_flagged() {
        // |χ| decaying slower than vacuum cannot come from a quantum state
        let axes = ChiGrid::square_axes(1, 2.0, 21).unwrap();
        let grid = ChiGrid::from_fn(axes, |xi| Ok(C64::new((-0.1 * xi[0].norm_sqr()).exp(), 0.0))).unwrap();
        let fit = gaussian_fit(&grid, None).unwrap();
        assert!(fit.flagged);
        assert!(!fit.modes[0].physical);
    }

    #[test]
    fn sampled_thermal_within_five_percent() {
        let th = single(ModeKind::Thermal { n: 1.0 });
        let axes = ChiGrid::square_axes(1, 1.5, 31).unwrap();
        let (grid, _) = ChiGrid::sampled(&th, axes, std::f64::consts::FRAC_PI_2, 100_000, 3, false).unwrap();
        let fit = gaussian_fit(&grid, None).unwrap();
        let n = fit.modes[0].thermal_occupation();
        assert!((n - 1.0).abs() < 0.05, "{n}");
        assert!(fit.modes[0].thermal_occupation_stderr() < 0.05);
    }

    #[test]
    fn too_few_points() {
        let axes = ChiGrid::square_axes(1, 20.0, 3).unwrap();
        let grid = ChiGrid::exact(&single(ModeKind::Vacuum), axes).unwrap();
        assert!(matches!(gaussian_fit(&grid, None), Err(Error::Fit(_))));
    }
}
