//! Auxiliary-qubit preparation, Ramsey encoding and Pauli readout.
//!
//! Basis ordering is `(|e⟩, |g⟩)` so that `σ_z|e⟩ = +|e⟩`. After the rotation
//! `R(θ, 0)|g⟩ = cos(θ/2)|g⟩ - i sin(θ/2)|e⟩` and the conditioned field
//! evolution, the qubit is left in
//!
//! ```text
//! ρ_q = ½[1 - cos θ σ_z + sin θ (Im χ σ_x + Re χ σ_y)]
//! ```
//!
//! so `⟨σ_y⟩ + i⟨σ_x⟩ = sin θ · χ(ξ)`.

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_field::{char_analytic, DisplacementVector, GaussianFieldState};

/// Slack allowed on `|b| ≤ 1` and `|χ| ≤ 1` for rounding.
pub const BLOCH_SLACK: f64 = 1e-12;

/// Worst-case variance of the χ estimator per unit `1/M`
/// (`σ_x` plus `σ_y`, each at most `1/M`).
pub const SHOT_CONSTANT: f64 = 2.0;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn sigma_x() -> Matrix2<C64> {
    Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn sigma_y() -> Matrix2<C64> {
    Matrix2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
}

pub fn sigma_z() -> Matrix2<C64> {
    Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

pub const EXCITED: usize = 0;
pub const GROUND: usize = 1;

/// `R(θ, φ) = cos(θ/2) I - i sin(θ/2) [cos φ σ_x + sin φ σ_y]`.
pub fn rotate(theta: f64, phi: f64) -> Matrix2<C64> {
    let (h_sin, h_cos) = (0.5 * theta).sin_cos();
    let axis = sigma_x() * c(phi.cos(), 0.0) + sigma_y() * c(phi.sin(), 0.0);
    Matrix2::identity() * c(h_cos, 0.0) - axis * c(0.0, h_sin)
}

/// Qubit state as a Bloch vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub bloch: [f64; 3],
}

impl QubitState {
    pub fn new(bloch: [f64; 3]) -> Result<Self> {
        if bloch.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("Bloch vector"));
        }
        let norm = bloch.iter().map(|b| b * b).sum::<f64>().sqrt();
        if norm > 1.0 + BLOCH_SLACK {
            return Err(Error::InvalidState(format!("Bloch vector length {norm} exceeds 1")));
        }
        Ok(QubitState { bloch })
    }

    pub fn ground() -> Self {
        QubitState { bloch: [0.0, 0.0, -1.0] }
    }

    pub fn purity_radius(&self) -> f64 {
        self.bloch.iter().map(|b| b * b).sum::<f64>().sqrt()
    }

    /// `ρ = ½(I + b·σ)`.
    pub fn density_matrix(&self) -> Matrix2<C64> {
        let [x, y, z] = self.bloch;
        (Matrix2::identity() + sigma_x() * c(x, 0.0) + sigma_y() * c(y, 0.0) + sigma_z() * c(z, 0.0)) * c(0.5, 0.0)
    }

    pub fn from_density_matrix(rho: &Matrix2<C64>) -> Result<Self> {
        let tr = |m: Matrix2<C64>| (rho * m).trace().re;
        Self::new([tr(sigma_x()), tr(sigma_y()), tr(sigma_z())])
    }

    pub fn expectation(&self, basis: Basis) -> f64 {
        self.bloch[basis as usize]
    }
}

/// Final qubit state for rotation angle `theta` and field value `chi`.
pub fn final_qubit_state(theta: f64, chi: C64) -> Result<QubitState> {
    if chi.norm() > 1.0 + BLOCH_SLACK {
        return Err(Error::ChiOutOfRange(chi.norm()));
    }
    let s = theta.sin();
    QubitState::new([s * chi.im, s * chi.re, -theta.cos()])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X = 0,
    Y = 1,
    Z = 2,
}

/// Sample mean of `M` single-shot `±1` outcomes and its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Counter-based generator for one grid point and basis.
///
/// Streams are disjoint for distinct `stream` values under the same `seed`,
/// so results do not depend on the order in which grid points are processed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `shots` projective measurements of `basis`.
pub fn sample_shots<R: Rng + ?Sized>(qs: &QubitState, basis: Basis, shots: u64, rng: &mut R) -> Result<ShotEstimate> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let p_plus = (0.5 * (1.0 + qs.expectation(basis))).clamp(0.0, 1.0);
    let ups = Binomial::new(shots, p_plus)
        .map_err(|e| Error::InvalidState(format!("binomial sampler: {e}")))?
        .sample(rng);
    let m = shots as f64;
    let mean = (2.0 * ups as f64 - m) / m;
    let stderr = ((1.0 - mean * mean).max(0.0) / m).sqrt();
    Ok(ShotEstimate { mean, stderr })
}

/// Seeded convenience wrapper around [`sample_shots`].
pub fn sample_shots_seeded(qs: &QubitState, basis: Basis, shots: u64, seed: u64, stream: u64) -> Result<ShotEstimate> {
    sample_shots(qs, basis, shots, &mut stream_rng(seed, stream))
}

/// `(⟨σ_y⟩ + i⟨σ_x⟩) / sin θ`.
pub fn estimate_chi(est_sx: f64, est_sy: f64, theta: f64) -> Result<C64> {
    let s = theta.sin();
    if s.abs() < 1e-12 {
        return Err(Error::NoInformation(s));
    }
    Ok(c(est_sy, est_sx) / s)
}

/// Shots per basis needed for a target error `Δχ`: `ceil(2/Δχ²)`.
pub fn required_shots(target_error: f64) -> Result<u64> {
    if !(target_error.is_finite() && target_error > 0.0) {
        return Err(Error::NonPositiveTarget(target_error));
    }
    let x = SHOT_CONSTANT / (target_error * target_error);
    let nearest = x.round();
    // absorb representation error of decimal targets like 0.1
    if (x - nearest).abs() <= 1e-9 * nearest {
        Ok(nearest as u64)
    } else {
        Ok(x.ceil() as u64)
    }
}

/// One simulated readout at a single displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutRecord {
    pub xi: DisplacementVector,
    pub theta: f64,
    /// Shots per basis; 0 means exact expectation values.
    pub shots: u64,
    pub est_sx: f64,
    pub est_sy: f64,
    pub stderr_sx: f64,
    pub stderr_sy: f64,
    pub chi_est: C64,
    pub seed: u64,
}

impl ReadoutRecord {
    /// Standard error of `chi_est`, `sqrt(Δσ_x² + Δσ_y²)/|sin θ|`.
    pub fn chi_stderr(&self) -> f64 {
        (self.stderr_sx.powi(2) + self.stderr_sy.powi(2)).sqrt() / self.theta.sin().abs()
    }
}

/// Runs the full Ramsey sequence against `state` at displacement `xi`.
///
/// `stream` identifies the grid point; the X and Y bases draw from streams
/// `2·stream` and `2·stream + 1` with separate shot budgets.
pub fn simulate_readout(
    state: &GaussianFieldState,
    xi: &DisplacementVector,
    theta: f64,
    shots: u64,
    seed: u64,
    stream: u64,
) -> Result<ReadoutRecord> {
    let chi = char_analytic(state, xi)?;
    readout_from_chi(chi, xi.clone(), theta, shots, seed, stream)
}

/// As [`simulate_readout`], for an already-known `χ`.
pub fn readout_from_chi(chi: C64, xi: DisplacementVector, theta: f64, shots: u64, seed: u64, stream: u64) -> Result<ReadoutRecord> {
    let qs = final_qubit_state(theta, chi)?;
    let (sx, sy) = if shots == 0 {
        (
            ShotEstimate { mean: qs.expectation(Basis::X), stderr: 0.0 },
            ShotEstimate { mean: qs.expectation(Basis::Y), stderr: 0.0 },
        )
    } else {
        (
            sample_shots_seeded(&qs, Basis::X, shots, seed, 2 * stream)?,
            sample_shots_seeded(&qs, Basis::Y, shots, seed, 2 * stream + 1)?,
        )
    };
    let chi_est = estimate_chi(sx.mean, sy.mean, theta)?;
    Ok(ReadoutRecord {
        xi,
        theta,
        shots,
        est_sx: sx.mean,
        est_sy: sy.mean,
        stderr_sx: sx.stderr,
        stderr_sy: sy.stderr,
        chi_est,
        seed,
    })
}
