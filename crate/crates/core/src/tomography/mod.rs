//! Reconstruction from characteristic-function samples: grids, Hermitian
//! completion, Wigner transform, finite-difference moments and Gaussian fits.

mod fit;
mod moments;
mod wigner;

pub use fit::{gaussian_fit, FitOptions, GaussianFit, ModeFit};
pub use moments::{moments_fd, ChiFn, ChiSource, MomentEstimate};
pub use wigner::{inverse_wigner, wigner_transform, WignerGrid, BOUNDARY_THRESHOLD};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_field::{char_analytic, DisplacementVector, GaussianFieldState};
use crate::ramsey_readout::{readout_from_chi, ReadoutRecord};

/// Largest grid accepted, `64⁴` points.
pub const MAX_GRID_POINTS: usize = 64 * 64 * 64 * 64;

/// Uniform axis with an odd number of points centred on zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub points: usize,
    pub step: f64,
}

impl Axis {
    pub fn new(points: usize, step: f64) -> Result<Self> {
        let axis = Axis { points, step };
        axis.validate()?;
        Ok(axis)
    }

    /// Axis covering `[-extent, extent]` with `points` samples.
    pub fn symmetric(extent: f64, points: usize) -> Result<Self> {
        if points < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points per axis, got {points}")));
        }
        Self::new(points, extent / ((points - 1) / 2) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("axis needs an odd point count to contain the origin, got {}", self.points)));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidGrid(format!("axis step must be positive, got {}", self.step)));
        }
        Ok(())
    }

    pub fn half(&self) -> usize {
        (self.points - 1) / 2
    }

    pub fn extent(&self) -> f64 {
        self.half() as f64 * self.step
    }

    pub fn value(&self, k: usize) -> f64 {
        (k as f64 - self.half() as f64) * self.step
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.value(k)).collect()
    }

    /// Index of the sample at `x`, if `x` lies on the lattice.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let t = x / self.step + self.half() as f64;
        let k = t.round();
        if (t - k).abs() > 1e-9 || k < 0.0 || k >= self.points as f64 {
            return None;
        }
        Some(k as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    /// Ramsey readout with `shots` per basis at preparation angle `theta`.
    Sampled { shots: u64, theta: f64 },
}

/// `χ` sampled on a product lattice, axes ordered `(Re ξ₀, Im ξ₀, Re ξ₁, …)`,
/// row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiGrid {
    axes: Vec<Axis>,
    values: Vec<C64>,
    present: Vec<bool>,
    stderr: Option<Vec<f64>>,
    provenance: Provenance,
}

pub(crate) fn grid_len(axes: &[Axis]) -> Result<usize> {
    for a in axes {
        a.validate()?;
    }
    let len = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.points));
    match len {
        Some(n) if n <= MAX_GRID_POINTS => Ok(n),
        _ => Err(Error::InvalidGrid(format!("grid exceeds {MAX_GRID_POINTS} points"))),
    }
}

pub(crate) fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for d in (0..shape.len()).rev() {
        idx[d] = flat % shape[d];
        flat /= shape[d];
    }
    idx
}

pub(crate) fn ravel(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

impl ChiGrid {
    pub fn new(axes: Vec<Axis>, values: Vec<C64>, present: Vec<bool>, stderr: Option<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        if axes.is_empty() || !axes.len().is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("need two axes per mode, got {}", axes.len())));
        }
        let n = grid_len(&axes)?;
        if values.len() != n || present.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: values.len().min(present.len()) });
        }
        if let Some(s) = &stderr {
            if s.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: s.len() });
            }
        }
        Ok(ChiGrid { axes, values, present, stderr, provenance })
    }

    /// Square grid with the same axis for every real coordinate.
    pub fn square_axes(modes: usize, extent: f64, points: usize) -> Result<Vec<Axis>> {
        Ok(vec![Axis::symmetric(extent, points)?; 2 * modes])
    }

    /// Fills every point from `f`, in parallel.
    pub fn from_fn<F>(axes: Vec<Axis>, f: F) -> Result<Self>
    where
        F: Fn(&[C64]) -> Result<C64> + Sync,
    {
        let n = grid_len(&axes)?;
        let shape: Vec<usize> = axes.iter().map(|a| a.points).collect();
        let values = (0..n)
            .into_par_iter()
            .map(|i| f(&point_of(&axes, &unravel(i, &shape))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes, values, vec![true; n], None, Provenance::Exact)
    }

    /// Exact `χ` of `state`.
    pub fn exact(state: &GaussianFieldState, axes: Vec<Axis>) -> Result<Self> {
        check_modes(state, &axes)?;
        Self::from_fn(axes, |xi| char_analytic(state, &DisplacementVector::new(xi.to_vec())?))
    }

    /// Simulated Ramsey readout at every point (or only the canonical half).
    ///
    /// The flat grid index is the RNG stream, so the result does not depend on
    /// thread count or evaluation order.
    pub fn sampled(
        state: &GaussianFieldState,
        axes: Vec<Axis>,
        theta: f64,
        shots: u64,
        seed: u64,
        half_only: bool,
    ) -> Result<(Self, Vec<ReadoutRecord>)> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        check_modes(state, &axes)?;
        let n = grid_len(&axes)?;
        let shape: Vec<usize> = axes.iter().map(|a| a.points).collect();
        let wanted: Vec<usize> = (0..n).filter(|&i| !half_only || in_half(&unravel(i, &shape), &shape)).collect();
        let records = wanted
            .par_iter()
            .map(|&i| {
                let xi = DisplacementVector::new(point_of(&axes, &unravel(i, &shape)))?;
                let chi = char_analytic(state, &xi)?;
                readout_from_chi(chi, xi, theta, shots, seed, i as u64)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut values = vec![C64::new(0.0, 0.0); n];
        let mut present = vec![false; n];
        let mut stderr = vec![0.0; n];
        for (&i, rec) in wanted.iter().zip(&records) {
            values[i] = rec.chi_est;
            present[i] = true;
            stderr[i] = rec.chi_stderr();
        }
        let grid = Self::new(axes, values, present, Some(stderr), Provenance::Sampled { shots, theta })?;
        Ok((grid, records))
    }

    pub fn modes(&self) -> usize {
        self.axes.len() / 2
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn present(&self) -> &[bool] {
        &self.present
    }

    pub fn stderr(&self) -> Option<&[f64]> {
        self.stderr.as_deref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_complete(&self) -> bool {
        self.present.iter().all(|&p| p)
    }

    /// Displacement vector of flat index `i`.
    pub fn point(&self, i: usize) -> Vec<C64> {
        point_of(&self.axes, &unravel(i, &self.shape()))
    }

    /// Flat index of the sample at `xi`, if it lies on the lattice.
    pub fn index_of(&self, xi: &[C64]) -> Option<usize> {
        if xi.len() != self.modes() {
            return None;
        }
        let mut idx = Vec::with_capacity(self.axes.len());
        for (m, z) in xi.iter().enumerate() {
            idx.push(self.axes[2 * m].index_of(z.re)?);
            idx.push(self.axes[2 * m + 1].index_of(z.im)?);
        }
        Some(ravel(&idx, &self.shape()))
    }

    /// Index of `-ξ` for the point at flat index `i`.
    pub fn mirror(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    /// Value at `xi` if sampled.
    pub fn value_at(&self, xi: &[C64]) -> Option<C64> {
        let i = self.index_of(xi)?;
        self.present[i].then(|| self.values[i])
    }

    pub fn origin_index(&self) -> usize {
        (self.len() - 1) / 2
    }

    /// Largest `|χ|` among sampled points on the outer boundary.
    pub fn boundary_max(&self) -> f64 {
        let shape = self.shape();
        (0..self.len())
            .filter(|&i| self.present[i])
            .filter(|&i| unravel(i, &shape).iter().zip(&shape).any(|(&k, &n)| k == 0 || k == n - 1))
            .map(|i| self.values[i].norm())
            .fold(0.0, f64::max)
    }
}

fn check_modes(state: &GaussianFieldState, axes: &[Axis]) -> Result<()> {
    if axes.len() != 2 * state.len() {
        return Err(Error::DimensionMismatch { expected: 2 * state.len(), got: axes.len() });
    }
    Ok(())
}

fn point_of(axes: &[Axis], idx: &[usize]) -> Vec<C64> {
    (0..axes.len() / 2)
        .map(|m| C64::new(axes[2 * m].value(idx[2 * m]), axes[2 * m + 1].value(idx[2 * m + 1])))
        .collect()
}

/// Canonical half: first non-zero centred coordinate positive, plus the origin.
fn in_half(idx: &[usize], shape: &[usize]) -> bool {
    for (&k, &n) in idx.iter().zip(shape) {
        let half = (n - 1) / 2;
        if k != half {
            return k > half;
        }
    }
    true
}

/// Completes a half-sampled grid using `χ(-ξ) = χ(ξ)*`.
///
/// Pairs sampled on both sides are replaced by `(χ(ξ) + χ(-ξ)*)/2`, so the
/// output is exactly Hermitian.
pub fn hermitian_fill(grid: &ChiGrid) -> Result<ChiGrid> {
    let n = grid.len();
    let mut values = grid.values.clone();
    let mut stderr = grid.stderr.clone();
    for i in 0..=grid.origin_index() {
        let j = grid.mirror(i);
        let (v, s) = match (grid.present[i], grid.present[j]) {
            (true, true) => {
                let v = 0.5 * (grid.values[i] + grid.values[j].conj());
                let s = grid.stderr.as_ref().map(|s| 0.5 * (s[i].powi(2) + s[j].powi(2)).sqrt());
                (v, s)
            }
            (true, false) => (grid.values[i], grid.stderr.as_ref().map(|s| s[i])),
            (false, true) => (grid.values[j].conj(), grid.stderr.as_ref().map(|s| s[j])),
            (false, false) => {
                return Err(Error::NotHalfSpace(format!(
                    "neither {:?} nor its mirror is sampled",
                    grid.point(i)
                )))
            }
        };
        values[i] = v;
        values[j] = v.conj();
        if let (Some(out), Some(s)) = (stderr.as_mut(), s) {
            out[i] = s;
            out[j] = s;
        }
    }
    ChiGrid::new(grid.axes.clone(), values, vec![true; n], stderr, grid.provenance)
}

/// Applies `kernel` (`n_out × n_in`, row-major) along `axis` of a row-major tensor.
pub(crate) fn contract_axis(data: &[C64], shape: &[usize], axis: usize, kernel: &[C64], n_out: usize) -> (Vec<C64>, Vec<usize>) {
    let n_in = shape[axis];
    let post: usize = shape[axis + 1..].iter().product();
    let mut out_shape = shape.to_vec();
    out_shape[axis] = n_out;
    let total: usize = out_shape.iter().product();
    let mut out = vec![C64::new(0.0, 0.0); total];
    out.par_chunks_mut(post).enumerate().for_each(|(row, chunk)| {
        let (a, o) = (row / n_out, row % n_out);
        let base = a * n_in * post;
        for i in 0..n_in {
            let k = kernel[o * n_in + i];
            let src = &data[base + i * post..base + (i + 1) * post];
            for (dst, s) in chunk.iter_mut().zip(src) {
                *dst += k * s;
            }
        }
    });
    (out, out_shape)
}

/// Swaps axes `2m` and `2m + 1` for every mode.
pub(crate) fn swap_pairs<T: Copy + Send + Sync>(data: &[T], shape: &[usize]) -> (Vec<T>, Vec<usize>) {
    let mut out_shape = shape.to_vec();
    for m in 0..shape.len() / 2 {
        out_shape.swap(2 * m, 2 * m + 1);
    }
    let out = (0..data.len())
        .into_par_iter()
        .map(|o| {
            let mut idx = unravel(o, &out_shape);
            for m in 0..idx.len() / 2 {
                idx.swap(2 * m, 2 * m + 1);
            }
            data[ravel(&idx, shape)]
        })
        .collect();
    (out, out_shape)
}
