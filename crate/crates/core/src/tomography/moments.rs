//! Symmetric-ordered moments `(-1)^q ∂_ξ^p ∂_{ξ*}^q χ |₀` by central
//! differences of Wirtinger derivatives, `∂_ξ = ½(∂_u - i∂_v)`, with one
//! Richardson step `(4·D(h/2) - D(h))/3`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use super::ChiGrid;
use crate::error::{Error, Result};
use crate::gaussian_field::{char_analytic, DisplacementVector, GaussianFieldState};

/// Anything that can be evaluated at a displacement vector.
pub trait ChiSource {
    fn modes(&self) -> usize;
    fn chi_at(&self, xi: &[C64]) -> Result<C64>;
    /// Standard error of the value at `xi`, for sampled sources.
    fn stderr_at(&self, _xi: &[C64]) -> Option<f64> {
        None
    }
    /// Checks that `step` is a usable stencil spacing and `reach` steps stay inside the source.
    fn check_step(&self, step: f64, reach: i32) -> Result<()>;
}

/// Wraps a closure `ξ ↦ χ(ξ)` over `modes` modes.
pub struct ChiFn<F>(pub usize, pub F);

impl<F: Fn(&[C64]) -> Result<C64>> ChiSource for ChiFn<F> {
    fn modes(&self) -> usize {
        self.0
    }

    fn chi_at(&self, xi: &[C64]) -> Result<C64> {
        (self.1)(xi)
    }

    fn check_step(&self, step: f64, _reach: i32) -> Result<()> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::StencilOutOfGrid(format!("step must be positive, got {step}")));
        }
        Ok(())
    }
}

impl ChiSource for GaussianFieldState {
    fn modes(&self) -> usize {
        self.len()
    }

    fn chi_at(&self, xi: &[C64]) -> Result<C64> {
        char_analytic(self, &DisplacementVector::new(xi.to_vec())?)
    }

    fn check_step(&self, step: f64, reach: i32) -> Result<()> {
        ChiFn(0, |_: &[C64]| Ok(C64::new(0.0, 0.0))).check_step(step, reach)
    }
}

impl ChiSource for ChiGrid {
    fn modes(&self) -> usize {
        ChiGrid::modes(self)
    }

    fn chi_at(&self, xi: &[C64]) -> Result<C64> {
        self.value_at(xi)
            .ok_or_else(|| Error::StencilOutOfGrid(format!("no sample at {xi:?}")))
    }

    fn stderr_at(&self, xi: &[C64]) -> Option<f64> {
        let i = self.index_of(xi)?;
        self.stderr().map(|s| s[i])
    }

    fn check_step(&self, step: f64, reach: i32) -> Result<()> {
        for a in self.axes() {
            let ratio = step / a.step;
            if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 {
                return Err(Error::StencilOutOfGrid(format!(
                    "half-step {step} is not a multiple of the grid step {}",
                    a.step
                )));
            }
            if reach as f64 * step > a.extent() * (1.0 + 1e-12) {
                return Err(Error::StencilOutOfGrid(format!(
                    "stencil reaches {} beyond the grid extent {}",
                    reach as f64 * step,
                    a.extent()
                )));
            }
        }
        Ok(())
    }
}

/// Result of [`moments_fd`].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub value: C64,
    /// Shot-noise error bar propagated to first order (sampled sources only).
    pub error_bar: Option<f64>,
    /// Size of the Richardson correction, a proxy for the discretization error.
    pub richardson_correction: f64,
    pub warning: Option<String>,
}

/// Central stencil for the `k`-th derivative, offsets in units of the step.
fn stencil(k: u32) -> &'static [(i32, f64)] {
    match k {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        _ => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients of `∂_u^{p+q-j} ∂_v^j` in `(-1)^q ∂_ξ^p ∂_{ξ*}^q`.
fn wirtinger_expansion(p: u32, q: u32) -> Vec<C64> {
    let i = C64::new(0.0, 1.0);
    let left: Vec<C64> = (0..=p).map(|j| (-i).powu(j) * binomial(p, j)).collect();
    let right: Vec<C64> = (0..=q).map(|j| i.powu(j) * binomial(q, j)).collect();
    let mut out = vec![C64::new(0.0, 0.0); (p + q + 1) as usize];
    for (a, l) in left.iter().enumerate() {
        for (b, r) in right.iter().enumerate() {
            out[a + b] += l * r;
        }
    }
    let scale = if q.is_multiple_of(2) { 1.0 } else { -1.0 } * 0.5f64.powi((p + q) as i32);
    out.iter().map(|c| c * scale).collect()
}

/// Weights on the half-step lattice for one finite-difference estimate at
/// `step = 2^level · (h/2)`.
fn functional(p: u32, q: u32, level: i32) -> BTreeMap<(i32, i32), C64> {
    let order = p + q;
    let mut out = BTreeMap::new();
    for (j, c) in wirtinger_expansion(p, q).into_iter().enumerate() {
        let (ku, kv) = (order - j as u32, j as u32);
        for &(a, wa) in stencil(ku) {
            for &(b, wb) in stencil(kv) {
                *out.entry((a << level, b << level)).or_insert(C64::new(0.0, 0.0)) += c * wa * wb;
            }
        }
    }
    out
}

/// Symmetric-ordered moment `⟨{a†^p a^q}_sym⟩` of `mode` from `src`.
pub fn moments_fd<S: ChiSource + ?Sized>(src: &S, mode: usize, p: u32, q: u32, h: f64) -> Result<MomentEstimate> {
    if p + q > 4 {
        return Err(Error::MomentOrder(p + q));
    }
    if mode >= src.modes() {
        return Err(Error::ModeIndex { index: mode, len: src.modes() });
    }
    let half = 0.5 * h;
    let reach = if p + q >= 3 { 4 } else { 2 };
    src.check_step(half, reach)?;

    let order = (p + q) as i32;
    let coarse = functional(p, q, 1);
    let fine = functional(p, q, 0);
    let scale_coarse = h.powi(-order);
    let scale_fine = half.powi(-order);

    let mut cache: BTreeMap<(i32, i32), (C64, Option<f64>)> = BTreeMap::new();
    for &key in coarse.keys().chain(fine.keys()) {
        if cache.contains_key(&key) {
            continue;
        }
        let mut xi = vec![C64::new(0.0, 0.0); src.modes()];
        xi[mode] = C64::new(key.0 as f64 * half, key.1 as f64 * half);
        cache.insert(key, (src.chi_at(&xi)?, src.stderr_at(&xi)));
    }
    let apply = |f: &BTreeMap<(i32, i32), C64>, s: f64| f.iter().map(|(k, w)| w * cache[k].0 * s).sum::<C64>();
    let d_coarse = apply(&coarse, scale_coarse);
    let d_fine = apply(&fine, scale_fine);
    let value = (d_fine * 4.0 - d_coarse) / 3.0;

    // the extrapolated estimate is linear in the samples
    let mut weights: BTreeMap<(i32, i32), C64> = BTreeMap::new();
    for (k, w) in &fine {
        *weights.entry(*k).or_insert(C64::new(0.0, 0.0)) += w * (4.0 * scale_fine / 3.0);
    }
    for (k, w) in &coarse {
        *weights.entry(*k).or_insert(C64::new(0.0, 0.0)) -= w * (scale_coarse / 3.0);
    }
    let error_bar = if cache.values().any(|(_, s)| s.is_some()) {
        let var: f64 = weights.iter().map(|(k, w)| w.norm_sqr() * cache[k].1.unwrap_or(0.0).powi(2)).sum();
        Some(var.sqrt())
    } else {
        None
    };
    let richardson_correction = (value - d_fine).norm();
    let warning = error_bar.and_then(|e| {
        (e > 0.1 * value.norm().max(1.0)).then(|| format!("step {h} is below the shot-noise floor: error bar {e:.3e}"))
    });
    Ok(MomentEstimate { value, error_bar, richardson_correction, warning })
}
