//! Qubit-state-conditioned field displacement produced by the repeated
//! `[τ - π - τ - π]` pulse segment.
//!
//! For `N` segments the two branches of the evolution combine into
//! `U_g† U_e = D(ξ_k)` with
//!
//! ```text
//! ξ_k = -4 λ η̃_k(τ) F̃*(k) / (ω_k τ) · sin(N ω_k τ) tan(ω_k τ / 2) · e^{i N ω_k τ}
//! η̃_k(τ) = ∫_0^τ η(s) ds / sqrt(2 Lⁿ ω_k),   F̃(k) = ∫ dⁿx F(x) e^{i k·x}.
//! ```
//!
//! The product `sin(Nx) tan(x/2)` is evaluated as `2 sin²(x/2) · U_{N-1}(cos x)`
//! (Chebyshev polynomial of the second kind), which is finite for every `x`,
//! so `τ = π/ω_k` never touches `tan(π/2)`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_field::{DisplacementVector, ModeSet};
use crate::quadrature;

/// Absolute tolerance for switching-function quadrature.
pub const SWITCHING_QUAD_TOL: f64 = 1e-12;

/// Spatial profile of the detector coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmearingFunction {
    /// `F(x) = exp(-|x|²/2σ²) / (2πσ²)^{n/2}`, normalised to one.
    SphericalGaussian { sigma: f64 },
    /// Point-like detector, `F̃ ≡ 1`.
    Delta,
    /// Tabulated radial profile `F(r)`, linearly interpolated and zero beyond
    /// the last radius.
    Custom { radii: Vec<f64>, values: Vec<f64> },
    /// `u_k + v_k` weighted profile of a condensate impurity; see
    /// [`crate::bec_analogue`].
    Bogoliubov { base: Box<SmearingFunction>, g_rho0: f64, atom_mass: f64 },
}

impl SmearingFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            SmearingFunction::SphericalGaussian { sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::UnsupportedSmearing(format!("sigma must be positive, got {sigma}")));
                }
            }
            SmearingFunction::Delta => {}
            SmearingFunction::Custom { radii, values } => {
                if radii.len() < 2 || radii.len() != values.len() {
                    return Err(Error::UnsupportedSmearing("custom profile needs >= 2 (radius, value) pairs".into()));
                }
                if radii[0] != 0.0 || !radii.windows(2).all(|w| w[1] > w[0]) || radii.iter().any(|r| !r.is_finite()) {
                    return Err(Error::UnsupportedSmearing("custom radii must start at 0 and increase strictly".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::UnsupportedSmearing("custom profile has non-finite values".into()));
                }
            }
            SmearingFunction::Bogoliubov { base, g_rho0, atom_mass } => {
                if !(g_rho0.is_finite() && *g_rho0 >= 0.0 && atom_mass.is_finite() && *atom_mass > 0.0) {
                    return Err(Error::UnsupportedSmearing("Bogoliubov weight needs g_rho0 >= 0 and atom_mass > 0".into()));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    /// Total spatial integral `∫ dⁿx F = F̃(0)`.
    pub fn normalization(&self, spatial_dim: usize) -> Result<f64> {
        match self {
            // the Bogoliubov weight vanishes at k = 0; report the base profile
            SmearingFunction::Bogoliubov { base, .. } => base.normalization(spatial_dim),
            _ => Ok(smearing_ft(self, &vec![0.0; spatial_dim], spatial_dim)?.re),
        }
    }
}

fn radial_interp(radii: &[f64], values: &[f64], r: f64) -> f64 {
    if r >= radii[radii.len() - 1] {
        return 0.0;
    }
    let i = radii.partition_point(|&x| x <= r) - 1;
    let t = (r - radii[i]) / (radii[i + 1] - radii[i]);
    values[i] + t * (values[i + 1] - values[i])
}

/// `F̃(k) = ∫ dⁿx F(x) e^{i k·x}`.
pub fn smearing_ft(f: &SmearingFunction, k: &[f64], spatial_dim: usize) -> Result<C64> {
    if k.len() != spatial_dim || !(1..=3).contains(&spatial_dim) {
        return Err(Error::DimensionMismatch { expected: spatial_dim, got: k.len() });
    }
    f.validate()?;
    let k2: f64 = k.iter().map(|x| x * x).sum();
    let kn = k2.sqrt();
    match f {
        SmearingFunction::SphericalGaussian { sigma } => Ok(C64::new((-0.5 * sigma * sigma * k2).exp(), 0.0)),
        SmearingFunction::Delta => Ok(C64::new(1.0, 0.0)),
        SmearingFunction::Custom { radii, values } => {
            let kernel: Box<dyn Fn(f64) -> f64> = match spatial_dim {
                // even profile on the line
                1 => Box::new(move |r: f64| 2.0 * (kn * r).cos()),
                3 => Box::new(move |r: f64| {
                    let x = kn * r;
                    let sinc = if x.abs() < 1e-4 { 1.0 - x * x / 6.0 } else { x.sin() / x };
                    4.0 * PI * r * r * sinc
                }),
                _ => {
                    return Err(Error::UnsupportedSmearing(
                        "tabulated radial profiles are supported in 1 and 3 dimensions".into(),
                    ))
                }
            };
            let mut total = 0.0;
            for w in radii.windows(2) {
                total += quadrature::integrate(|r| kernel(r) * radial_interp(radii, values, r), w[0], w[1], 1e-13)?;
            }
            Ok(C64::new(total, 0.0))
        }
        SmearingFunction::Bogoliubov { base, g_rho0, atom_mass } => {
            let w = crate::bec_analogue::bogoliubov_weight_raw(kn, *g_rho0, *atom_mass)?;
            Ok(smearing_ft(base, k, spatial_dim)? * w)
        }
    }
}

/// Temporal profile `η(s)` of the coupling inside one segment window `[0, τ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SwitchingFunction {
    Constant { value: f64 },
    /// `η(s) = exp(-(s - center)² / (2 width²))`.
    Gaussian { center: f64, width: f64 },
    /// Tabulated samples, linearly interpolated; must cover `[0, τ]`.
    Custom { times: Vec<f64>, values: Vec<f64> },
}

impl SwitchingFunction {
    /// `η(s) = exp(-(s - T/2)² / (T²/72))`, i.e. a Gaussian of width `T/12`
    /// centred in a window of length `T`.
    pub fn gaussian_window(total: f64) -> Self {
        SwitchingFunction::Gaussian { center: 0.5 * total, width: total / 12.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SwitchingFunction::Constant { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return Err(Error::InvalidSwitching(format!("constant must be finite and >= 0, got {value}")));
                }
            }
            SwitchingFunction::Gaussian { center, width } => {
                if !(center.is_finite() && width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidSwitching(format!("gaussian needs finite center and width > 0, got {center}, {width}")));
                }
            }
            SwitchingFunction::Custom { times, values } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(Error::InvalidSwitching("custom table needs >= 2 (time, value) pairs".into()));
                }
                if !times.windows(2).all(|w| w[1] > w[0]) || times.iter().any(|t| !t.is_finite()) {
                    return Err(Error::InvalidSwitching("custom times must increase strictly".into()));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidSwitching("custom values must be finite and >= 0".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            SwitchingFunction::Constant { value } => *value,
            SwitchingFunction::Gaussian { center, width } => (-(s - center).powi(2) / (2.0 * width * width)).exp(),
            SwitchingFunction::Custom { times, values } => {
                if s < times[0] || s > times[times.len() - 1] {
                    return 0.0;
                }
                let i = (times.partition_point(|&t| t <= s) - 1).min(times.len() - 2);
                let t = (s - times[i]) / (times[i + 1] - times[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
        }
    }

    /// `∫_0^τ η(s) ds`.
    pub fn integral(&self, tau: f64) -> Result<f64> {
        self.validate()?;
        match self {
            SwitchingFunction::Constant { value } => Ok(value * tau),
            SwitchingFunction::Gaussian { .. } => quadrature::integrate(|s| self.eval(s), 0.0, tau, SWITCHING_QUAD_TOL),
            SwitchingFunction::Custom { times, .. } => {
                let last = times[times.len() - 1];
                if times[0] > 0.0 || last < tau {
                    return Err(Error::InvalidSwitching(format!(
                        "table covers [{}, {last}], not [0, {tau}]",
                        times[0]
                    )));
                }
                // exact trapezoid of the piecewise-linear interpolant
                let mut knots: Vec<f64> = times.iter().copied().filter(|&t| t > 0.0 && t < tau).collect();
                knots.insert(0, 0.0);
                knots.push(tau);
                Ok(knots.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (self.eval(w[0]) + self.eval(w[1]))).sum())
            }
        }
    }
}

/// `η̃_k(τ) = ∫_0^τ η(s) ds / sqrt(2 Lⁿ ω_k)`.
pub fn switching_integral(eta: &SwitchingFunction, tau: f64, omega: f64, box_side: f64, spatial_dim: usize) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidSchedule(format!("tau must be positive, got {tau}")));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidSchedule(format!("omega must be positive, got {omega}")));
    }
    Ok(eta.integral(tau)? / (2.0 * box_side.powi(spatial_dim as i32) * omega).sqrt())
}

/// The `[τ - π - τ - π]^N` sequence and its coupling profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub lambda: f64,
    pub tau: f64,
    #[serde(rename = "N")]
    pub segments: u32,
    pub smearing: SmearingFunction,
    pub switching: SwitchingFunction,
}

impl PulseSchedule {
    pub fn new(lambda: f64, tau: f64, segments: u32, smearing: SmearingFunction, switching: SwitchingFunction) -> Result<Self> {
        let s = PulseSchedule { lambda, tau, segments, smearing, switching };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::InvalidSchedule(format!("lambda must be finite, got {}", self.lambda)));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidSchedule(format!("tau must be positive, got {}", self.tau)));
        }
        if self.segments < 1 {
            return Err(Error::InvalidSchedule("N must be at least 1".into()));
        }
        self.smearing.validate()?;
        self.switching.validate()
    }

    /// Total protocol time `T = 2Nτ`.
    pub fn total_time(&self) -> f64 {
        2.0 * self.segments as f64 * self.tau
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        PulseSchedule { tau, ..self.clone() }
    }

    pub fn with_segments(&self, segments: u32) -> Self {
        PulseSchedule { segments, ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: PulseSchedule = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }
}

/// `sin(N x) tan(x/2)`, finite at `x = (2m+1)π`.
pub fn sin_tan_product(x: f64, n: u32) -> f64 {
    let s = x.sin();
    let ratio = if s.abs() >= 0.1 {
        (n as f64 * x).sin() / s
    } else {
        // U_{N-1}(cos x) by the three-term recurrence
        let c = x.cos();
        let (mut prev, mut cur) = (0.0, 1.0);
        for _ in 1..n {
            let next = 2.0 * c * cur - prev;
            prev = cur;
            cur = next;
        }
        cur
    };
    2.0 * (0.5 * x).sin().powi(2) * ratio
}

/// Displacement from already-evaluated ingredients.
pub fn displacement_from_parts(lambda: f64, eta_tilde: f64, ft: C64, omega: f64, tau: f64, segments: u32) -> C64 {
    let x = omega * tau;
    let amplitude = -4.0 * lambda * eta_tilde / x * sin_tan_product(x, segments);
    ft.conj() * amplitude * C64::from_polar(1.0, segments as f64 * x)
}

/// `ξ_k(τ, N)` for one mode of `modes`.
pub fn displacement_param(sched: &PulseSchedule, modes: &ModeSet, mode: usize) -> Result<C64> {
    sched.validate()?;
    if mode >= modes.len() {
        return Err(Error::ModeIndex { index: mode, len: modes.len() });
    }
    let omega = modes.omega(mode);
    let eta = switching_integral(&sched.switching, sched.tau, omega, modes.box_side(), modes.spatial_dim())?;
    let ft = smearing_ft(&sched.smearing, &modes.wave_vector(mode), modes.spatial_dim())?;
    Ok(displacement_from_parts(sched.lambda, eta, ft, omega, sched.tau, sched.segments))
}

/// `ξ_k(τ, N)` for every mode.
pub fn displacement_vector(sched: &PulseSchedule, modes: &ModeSet) -> Result<DisplacementVector> {
    let xs = (0..modes.len()).map(|i| displacement_param(sched, modes, i)).collect::<Result<Vec<_>>>()?;
    DisplacementVector::new(xs)
}

/// One closed curve of reachable displacements at fixed `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldCurve {
    pub segments: u32,
    pub points: Vec<(f64, C64)>,
}

/// Sweeps `τ` for each segment count, tracing the reachable `ξ_k` curves.
pub fn reachable_manifold(
    template: &PulseSchedule,
    modes: &ModeSet,
    mode: usize,
    segment_counts: &[u32],
    tau_grid: &[f64],
) -> Result<Vec<ManifoldCurve>> {
    if segment_counts.is_empty() {
        return Err(Error::EmptyGrid("segment counts"));
    }
    if tau_grid.is_empty() {
        return Err(Error::EmptyGrid("tau grid"));
    }
    if tau_grid[0] <= 0.0 || !tau_grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidSchedule("tau grid must be positive and strictly increasing".into()));
    }
    segment_counts
        .iter()
        .map(|&n| {
            let sched = template.with_segments(n);
            let points = tau_grid
                .iter()
                .map(|&tau| Ok((tau, displacement_param(&sched.with_tau(tau), modes, mode)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(ManifoldCurve { segments: n, points })
        })
        .collect()
}
