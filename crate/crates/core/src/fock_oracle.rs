//! Brute-force check layer: truncated Fock-space matrices and dense matrix
//! exponentials, independent of every closed form used elsewhere.
//!
//! All operator comparisons are made modulo a global phase and on the
//! low-lying block of the truncated space (the lower half), where truncation
//! artefacts at the top level have not propagated.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_field::{GaussianFieldState, ModeKind, ModeSet};
use crate::pulse_protocol::{displacement_param, smearing_ft, switching_integral, PulseSchedule};
use crate::ramsey_readout::{rotate, QubitState, EXCITED, GROUND};

/// Maximum population allowed in the top two Fock levels.
pub const LEAK_TOL: f64 = 1e-8;
/// Maximum distance between `U_g†U_e` and the best-fit displacement.
pub const DISPLACEMENT_RESIDUAL_TOL: f64 = 1e-6;
pub const MIN_CUTOFF: usize = 8;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Ladder operators of one mode truncated to `dim` Fock levels.
#[derive(Debug, Clone)]
pub struct TruncatedMode {
    dim: usize,
    a: DMatrix<C64>,
    ad: DMatrix<C64>,
    num: DMatrix<C64>,
}

impl TruncatedMode {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::TruncationLeak(format!("cutoff {dim} is below 2")));
        }
        let a = DMatrix::from_fn(dim, dim, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { zero() });
        let ad = a.adjoint();
        let num = DMatrix::from_fn(dim, dim, |i, j| if i == j { C64::new(i as f64, 0.0) } else { zero() });
        Ok(TruncatedMode { dim, a, ad, num })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> &DMatrix<C64> {
        &self.a
    }

    pub fn ad(&self) -> &DMatrix<C64> {
        &self.ad
    }

    pub fn number(&self) -> &DMatrix<C64> {
        &self.num
    }

    /// `exp(ξ a† - ξ* a)` by dense exponential of the truncated generator.
    pub fn displacement(&self, xi: C64) -> DMatrix<C64> {
        (&self.ad * xi - &self.a * xi.conj()).exp()
    }

    /// `exp(i y a†a)`.
    pub fn rotation(&self, y: f64) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| if i == j { C64::from_polar(1.0, y * i as f64) } else { zero() })
    }

    /// `exp(½(ζ* a² - ζ a†²))`.
    pub fn squeeze(&self, zeta: C64) -> DMatrix<C64> {
        let a2 = &self.a * &self.a;
        let ad2 = &self.ad * &self.ad;
        ((a2 * zeta.conj() - ad2 * zeta) * C64::new(0.5, 0.0)).exp()
    }

    pub fn low_block(&self) -> usize {
        self.dim / 2
    }
}

/// Top-left `n × n` block.
fn block(m: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    m.view((0, 0), (n, n)).into_owned()
}

/// `min_φ ‖a - e^{iφ} b‖_F`.
pub fn phase_aligned_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let inner: C64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if inner.norm() > 0.0 { inner / inner.norm() } else { C64::new(1.0, 0.0) };
    (a - b * phase).norm()
}

/// Population in the top two levels reached from the low block.
fn leak(m: &DMatrix<C64>) -> f64 {
    let d = m.nrows();
    (0..d / 2)
        .map(|j| (d - 2..d).map(|i| m[(i, j)].norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    (u.adjoint() * u - DMatrix::identity(u.nrows(), u.ncols())).norm()
}

/// Per-segment data of one mode: `ωτ` and `c = λη̃F̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ModeDrive {
    omega: f64,
    tau: f64,
    coupling: C64,
    segments: u32,
}

fn mode_drive(sched: &PulseSchedule, modes: &ModeSet, mode: usize) -> Result<ModeDrive> {
    sched.validate()?;
    if mode >= modes.len() {
        return Err(Error::ModeIndex { index: mode, len: modes.len() });
    }
    let omega = modes.omega(mode);
    let eta = switching_integral(&sched.switching, sched.tau, omega, modes.box_side(), modes.spatial_dim())?;
    let ft = smearing_ft(&sched.smearing, &modes.wave_vector(mode), modes.spatial_dim())?;
    Ok(ModeDrive { omega, tau: sched.tau, coupling: ft * (sched.lambda * eta), segments: sched.segments })
}

/// Dense operators of one `[τ - π - τ - π]` segment.
#[derive(Debug, Clone)]
pub struct SegmentOperators {
    pub cutoff: usize,
    pub v_g: DMatrix<C64>,
    pub v_e: DMatrix<C64>,
    pub u_g: DMatrix<C64>,
    pub u_e: DMatrix<C64>,
    /// `ε = λη̃F̃*/(ωτ)`.
    pub epsilon: C64,
    /// Largest unitarity defect of `u_g`, `u_e`.
    pub unitarity_defect: f64,
    /// Distance of `u_g` from `D†(ε) e^{-2iωτ a†a} D(2ε e^{iωτ}) D†(ε)`.
    pub form_defect: f64,
}

fn segment_from_drive(drive: &ModeDrive, mode: &TruncatedMode) -> SegmentOperators {
    let x = drive.omega * drive.tau;
    let free = mode.number() * C64::new(x, 0.0);
    let lin = mode.a() * drive.coupling + mode.ad() * drive.coupling.conj();
    let v_e = &free + &lin;
    let v_g = &free - &lin;
    let minus_i = C64::new(0.0, -1.0);
    let exp_e = (&v_e * minus_i).exp();
    let exp_g = (&v_g * minus_i).exp();
    let u_g = &exp_e * &exp_g;
    let u_e = &exp_g * &exp_e;

    let epsilon = drive.coupling.conj() / x;
    let d_eps = mode.displacement(epsilon);
    let expected = d_eps.adjoint() * mode.rotation(-2.0 * x) * mode.displacement(epsilon * C64::from_polar(2.0, x)) * d_eps.adjoint();
    let n = mode.low_block();
    let form_defect = phase_aligned_distance(&block(&u_g, n), &block(&expected, n));
    let unitarity_defect = unitarity_defect(&u_g).max(unitarity_defect(&u_e));
    SegmentOperators { cutoff: mode.dim(), v_g, v_e, u_g, u_e, epsilon, unitarity_defect, form_defect }
}

/// Builds the single-segment unitaries for `mode` at Fock cutoff `dim`.
pub fn build_segment(sched: &PulseSchedule, modes: &ModeSet, mode: usize, dim: usize) -> Result<SegmentOperators> {
    if dim < MIN_CUTOFF {
        return Err(Error::TruncationLeak(format!("cutoff {dim} is below the minimum {MIN_CUTOFF}")));
    }
    let drive = mode_drive(sched, modes, mode)?;
    let seg = segment_from_drive(&drive, &TruncatedMode::new(dim)?);
    let worst = leak(&seg.u_g).max(leak(&seg.u_e));
    if worst >= LEAK_TOL {
        return Err(Error::TruncationLeak(format!("boundary population {worst:.2e} at cutoff {dim}")));
    }
    Ok(seg)
}

/// Outcome of [`verify_displacement_identity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementCheck {
    pub cutoff: usize,
    pub xi_closed: C64,
    pub xi_fock: C64,
    /// `|ξ_fock - ξ_closed|`.
    pub defect: f64,
    /// Distance of `U_g†U_e` from `D(ξ_fock)` on the low block, modulo phase.
    pub residual: f64,
    pub segment_form_defect: f64,
    pub leak: f64,
}

/// `(u_g†)^N u_e^N` for the `mode`, with the displacement read off its first column.
pub fn verify_displacement_identity(sched: &PulseSchedule, modes: &ModeSet, mode: usize, dim: usize) -> Result<DisplacementCheck> {
    let seg = build_segment(sched, modes, mode, dim)?;
    let n = sched.segments as usize;
    let big_ug_dag = power(&seg.u_g.adjoint(), n);
    let big_ue = power(&seg.u_e, n);
    let m = big_ug_dag * big_ue;
    let leak = leak(&m);
    if leak >= LEAK_TOL {
        return Err(Error::TruncationLeak(format!("boundary population {leak:.2e} at cutoff {dim}")));
    }
    // ⟨0|D(ξ)|0⟩ = e^{-|ξ|²/2}, ⟨1|D(ξ)|0⟩ = ξ e^{-|ξ|²/2}
    let xi_fock = m[(1, 0)] / m[(0, 0)];
    let tm = TruncatedMode::new(dim)?;
    let nb = tm.low_block();
    let residual = phase_aligned_distance(&block(&m, nb), &block(&tm.displacement(xi_fock), nb));
    if residual > DISPLACEMENT_RESIDUAL_TOL {
        return Err(Error::NotDisplacement(residual));
    }
    let xi_closed = displacement_param(sched, modes, mode)?;
    Ok(DisplacementCheck {
        cutoff: dim,
        xi_closed,
        xi_fock,
        defect: (xi_fock - xi_closed).norm(),
        residual,
        segment_form_defect: seg.form_defect,
        leak,
    })
}

fn power(m: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..n {
        out = &out * m;
    }
    out
}

/// Cutoff heuristic `(4|ξ| + 4)²`, never below [`MIN_CUTOFF`].
pub fn suggested_cutoff(xi: C64) -> usize {
    ((4.0 * xi.norm() + 4.0).powi(2).ceil() as usize).max(MIN_CUTOFF)
}

/// `[D(x) e^{iy a†a}]^N` against `D(x (1 - e^{iNy})/(1 - e^{iy})) e^{iNy a†a}`,
/// modulo global phase, on the low block.
pub fn verify_displacement_composition(x: C64, y: f64, n: u32, dim: usize) -> Result<f64> {
    let tm = TruncatedMode::new(dim)?;
    let lhs = power(&(tm.displacement(x) * tm.rotation(y)), n as usize);
    let denom = C64::new(1.0, 0.0) - C64::from_polar(1.0, y);
    let total = if denom.norm() < 1e-12 {
        x * n as f64
    } else {
        x * (C64::new(1.0, 0.0) - C64::from_polar(1.0, n as f64 * y)) / denom
    };
    let rhs = tm.displacement(total) * tm.rotation(n as f64 * y);
    let nb = tm.low_block();
    Ok(phase_aligned_distance(&block(&lhs, nb), &block(&rhs, nb)))
}

/// Truncated density matrix of a single-mode state.
pub fn density_matrix(kind: &ModeKind, dim: usize) -> Result<DMatrix<C64>> {
    match *kind {
        ModeKind::Vacuum => Ok(DMatrix::from_fn(dim, dim, |i, j| if i == 0 && j == 0 { C64::new(1.0, 0.0) } else { zero() })),
        ModeKind::Thermal { n } => {
            let tail = (n / (n + 1.0)).powi(dim as i32) / (n + 1.0);
            if tail >= 1e-10 {
                return Err(Error::TruncationLeak(format!("thermal tail {tail:.2e} at cutoff {dim}")));
            }
            let q = n / (n + 1.0);
            Ok(DMatrix::from_fn(dim, dim, |i, j| if i == j { C64::new(q.powi(i as i32) / (n + 1.0), 0.0) } else { zero() }))
        }
        ModeKind::Squeezed { r, theta } => {
            let tm = TruncatedMode::new(dim)?;
            let mut vac = DVector::from_element(dim, zero());
            vac[0] = C64::new(1.0, 0.0);
            let psi = tm.squeeze(C64::from_polar(r, theta)) * vac;
            let edge = psi[dim - 1].norm().max(psi[dim - 2].norm());
            if edge >= 1e-8 {
                return Err(Error::TruncationLeak(format!("squeezed boundary amplitude {edge:.2e} at cutoff {dim}")));
            }
            Ok(&psi * psi.adjoint())
        }
    }
}

/// `Tr[ρ D(ξ)]` in the truncated space.
pub fn chi_fock(state: &GaussianFieldState, xi: C64, dim: usize) -> Result<C64> {
    if state.len() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: state.len() });
    }
    let rho = density_matrix(&state.kind(0)?, dim)?;
    let d = TruncatedMode::new(dim)?.displacement(xi);
    Ok((rho * d).trace())
}

/// Runs rotation, `N` conditioned segments with `-iσ_x` π pulses and a
/// partial trace in the explicit `2D`-dimensional qubit ⊗ field space.
pub fn joint_bloch(state: &GaussianFieldState, sched: &PulseSchedule, theta: f64, dim: usize) -> Result<QubitState> {
    if state.len() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: state.len() });
    }
    let seg = build_segment(sched, state.modes(), 0, dim)?;
    let minus_i = C64::new(0.0, -1.0);
    let half_e = (&seg.v_e * minus_i).exp();
    let half_g = (&seg.v_g * minus_i).exp();
    let joint = 2 * dim;
    let conditioned = |ue: &DMatrix<C64>, ug: &DMatrix<C64>| {
        let mut m = DMatrix::from_element(joint, joint, zero());
        m.view_mut((EXCITED * dim, EXCITED * dim), (dim, dim)).copy_from(ue);
        m.view_mut((GROUND * dim, GROUND * dim), (dim, dim)).copy_from(ug);
        m
    };
    let lift = |q: &Matrix2<C64>| q.kronecker(&DMatrix::<C64>::identity(dim, dim));
    let pi_pulse = Matrix2::new(zero(), minus_i, minus_i, zero());
    // first half of a segment runs V_g on |g⟩; the π pulse swaps the branches
    let first = conditioned(&half_g, &half_e);
    let flip = lift(&pi_pulse);
    let segment = &flip * &first * &flip * &first;
    let total = power(&segment, sched.segments as usize) * lift(&rotate(theta, 0.0));

    let mut q0 = Matrix2::from_element(zero());
    q0[(GROUND, GROUND)] = C64::new(1.0, 0.0);
    let rho0 = q0.kronecker(&density_matrix(&state.kind(0)?, dim)?);
    let rho = &total * rho0 * total.adjoint();
    let mut rq = Matrix2::from_element(zero());
    for s in 0..2 {
        for t in 0..2 {
            rq[(s, t)] = (0..dim).map(|k| rho[(s * dim + k, t * dim + k)]).sum();
        }
    }
    QubitState::from_density_matrix(&rq)
}

/// One structured oracle record, as consumed by tests and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub inputs: serde_json::Value,
    pub cutoff: usize,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    pub fn new(name: &str, inputs: serde_json::Value, cutoff: usize, defect: f64, tolerance: f64) -> Self {
        OracleReport { name: name.to_string(), inputs, cutoff, defect, tolerance, pass: defect <= tolerance }
    }
}
