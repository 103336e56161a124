//! Mean-zero Gaussian states of a free scalar field on an n-torus.
//!
//! Every state is stored as one 2×2 covariance matrix per mode in the
//! quadrature convention `x = (a + a†)/√2`, `p = -i(a - a†)/√2`, normalised so
//! the vacuum has `V = I`. The characteristic function
//! `χ(ξ) = Tr[ρ D(ξ)]`, `D(ξ) = exp(ξ a† - ξ* a)`, is evaluated from the
//! quadratic form
//!
//! ```text
//! χ(ξ) = exp[-½ Σ_k ξ_kᵀ (Ω V_k Ωᵀ) ξ_k],   ξ_k = (Re ξ_k, Im ξ_k)ᵀ,   Ω = [[0, 1], [-1, 0]].
//! ```
//!
//! For squeezed states `S(ζ) = exp[½(ζ* a² - ζ a†²)]`, `ζ = r e^{iθ}`, the
//! quadratic form expands to
//!
//! ```text
//! χ(ξ) = exp[-½ (cosh 2r |ξ|² + sinh 2r Re[e^{iθ} ξ*²])]
//! ```
//!
//! with a **plus** sign in front of `sinh 2r`. The opposite sign sometimes
//! quoted for this formula does not match `Tr[ρ D(ξ)]`; the truncated-Fock
//! oracle in [`crate::fock_oracle`] settles it (see the acceptance suite).

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dispersion relation attached to a [`ModeSet`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dispersion {
    /// `ω_k = sqrt(m² + |k|²)` with the mode set's `mass`.
    #[default]
    Relativistic,
    /// Bogoliubov excitations of a condensate, `ω_k = sqrt(E_k (E_k + 2gρ₀))`,
    /// `E_k = k²/(2 m_B)`.
    Bogoliubov { g_rho0: f64, atom_mass: f64 },
}

impl Dispersion {
    fn is_relativistic(&self) -> bool {
        matches!(self, Dispersion::Relativistic)
    }

    pub fn omega(&self, mass: f64, k_norm: f64) -> f64 {
        match *self {
            Dispersion::Relativistic => (mass * mass + k_norm * k_norm).sqrt(),
            Dispersion::Bogoliubov { g_rho0, atom_mass } => {
                crate::bec_analogue::bogoliubov_omega(k_norm, g_rho0, atom_mass)
            }
        }
    }
}

/// Discrete field modes `k = 2π j / L` on an n-torus of side `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    spatial_dim: usize,
    box_side: f64,
    mass: f64,
    dispersion: Dispersion,
    indices: Vec<Vec<i64>>,
}

impl ModeSet {
    pub fn new(spatial_dim: usize, box_side: f64, mass: f64, indices: Vec<Vec<i64>>) -> Result<Self> {
        Self::with_dispersion(spatial_dim, box_side, mass, Dispersion::Relativistic, indices)
    }

    pub fn with_dispersion(
        spatial_dim: usize,
        box_side: f64,
        mass: f64,
        dispersion: Dispersion,
        indices: Vec<Vec<i64>>,
    ) -> Result<Self> {
        if !(1..=3).contains(&spatial_dim) {
            return Err(Error::InvalidModeSet(format!("spatial_dim must be 1, 2 or 3, got {spatial_dim}")));
        }
        if !(box_side.is_finite() && box_side > 0.0) {
            return Err(Error::InvalidModeSet(format!("box_side must be positive, got {box_side}")));
        }
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::InvalidModeSet(format!("mass must be non-negative, got {mass}")));
        }
        if let Dispersion::Bogoliubov { g_rho0, atom_mass } = dispersion {
            if !(g_rho0.is_finite() && g_rho0 >= 0.0 && atom_mass.is_finite() && atom_mass > 0.0) {
                return Err(Error::InvalidModeSet("Bogoliubov dispersion needs g_rho0 >= 0 and atom_mass > 0".into()));
            }
        }
        if indices.is_empty() {
            return Err(Error::InvalidModeSet("no modes".into()));
        }
        for (i, j) in indices.iter().enumerate() {
            if j.len() != spatial_dim {
                return Err(Error::InvalidModeSet(format!(
                    "mode {i} has {} components, expected {spatial_dim}",
                    j.len()
                )));
            }
            if indices[..i].contains(j) {
                return Err(Error::InvalidModeSet(format!("duplicate mode index {j:?}")));
            }
        }
        let set = ModeSet { spatial_dim, box_side, mass, dispersion, indices };
        for i in 0..set.len() {
            let w = set.omega(i);
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidModeSet(format!(
                    "mode {:?} has non-positive frequency {w}",
                    set.indices[i]
                )));
            }
        }
        Ok(set)
    }

    /// One massless mode `j = (1, 0, ...)` in a box of side `2π/ω`, so that
    /// `|k| = ω_k = omega`.
    pub fn single(spatial_dim: usize, omega: f64) -> Result<Self> {
        let mut j = vec![0; spatial_dim];
        j[0] = 1;
        Self::new(spatial_dim, 2.0 * PI / omega, 0.0, vec![j])
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn spatial_dim(&self) -> usize {
        self.spatial_dim
    }

    pub fn box_side(&self) -> f64 {
        self.box_side
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn dispersion(&self) -> Dispersion {
        self.dispersion
    }

    pub fn indices(&self) -> &[Vec<i64>] {
        &self.indices
    }

    pub fn wave_vector(&self, mode: usize) -> Vec<f64> {
        self.indices[mode]
            .iter()
            .map(|&j| 2.0 * PI * j as f64 / self.box_side)
            .collect()
    }

    pub fn k_norm(&self, mode: usize) -> f64 {
        self.wave_vector(mode).iter().map(|k| k * k).sum::<f64>().sqrt()
    }

    pub fn omega(&self, mode: usize) -> f64 {
        self.dispersion.omega(self.mass, self.k_norm(mode))
    }

    fn check(&self, mode: usize) -> Result<()> {
        if mode >= self.len() {
            return Err(Error::ModeIndex { index: mode, len: self.len() });
        }
        Ok(())
    }
}

/// State of a single mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ModeKind {
    Vacuum,
    /// Thermal occupation `n = 1/(e^{βω} - 1)`.
    Thermal { n: f64 },
    /// Squeezed vacuum with `ζ = r e^{iθ}`.
    Squeezed { r: f64, theta: f64 },
}

impl ModeKind {
    pub fn thermal_from_beta(beta: f64, omega: f64) -> Self {
        ModeKind::Thermal { n: 1.0 / (beta * omega).exp_m1() }
    }

    fn validated(self) -> Result<Self> {
        match self {
            ModeKind::Vacuum => Ok(self),
            ModeKind::Thermal { n } => {
                if n.is_finite() && n >= 0.0 {
                    Ok(self)
                } else {
                    Err(Error::InvalidState(format!("thermal occupation must be finite and >= 0, got {n}")))
                }
            }
            ModeKind::Squeezed { r, theta } => {
                if !(r.is_finite() && r >= 0.0 && theta.is_finite()) {
                    return Err(Error::InvalidState(format!("squeezing needs finite r >= 0, got r = {r}, theta = {theta}")));
                }
                Ok(ModeKind::Squeezed { r, theta: theta.rem_euclid(2.0 * PI) })
            }
        }
    }

    pub fn covariance(&self) -> Matrix2<f64> {
        match *self {
            ModeKind::Vacuum => Matrix2::identity(),
            ModeKind::Thermal { n } => Matrix2::identity() * (2.0 * n + 1.0),
            ModeKind::Squeezed { r, theta } => {
                let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
                Matrix2::new(
                    c - theta.cos() * s,
                    -theta.sin() * s,
                    -theta.sin() * s,
                    c + theta.cos() * s,
                )
            }
        }
    }

    /// Second-moment table `(⟨a a†⟩, ⟨a† a⟩, ⟨a a⟩, ⟨a† a†⟩)` in closed form.
    pub fn second_moments(&self) -> SecondMoments {
        match *self {
            ModeKind::Vacuum => SecondMoments { a_ad: 1.0, ad_a: 0.0, a_a: C64::new(0.0, 0.0), ad_ad: C64::new(0.0, 0.0) },
            ModeKind::Thermal { n } => SecondMoments { a_ad: n + 1.0, ad_a: n, a_a: C64::new(0.0, 0.0), ad_ad: C64::new(0.0, 0.0) },
            ModeKind::Squeezed { r, theta } => {
                let cs = r.cosh() * r.sinh();
                SecondMoments {
                    a_ad: r.cosh().powi(2),
                    ad_a: r.sinh().powi(2),
                    a_a: -cs * C64::from_polar(1.0, theta),
                    ad_ad: -cs * C64::from_polar(1.0, -theta),
                }
            }
        }
    }
}

/// `⟨a a†⟩`, `⟨a† a⟩`, `⟨a a⟩`, `⟨a† a†⟩` for one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMoments {
    pub a_ad: f64,
    pub ad_a: f64,
    pub a_a: C64,
    pub ad_ad: C64,
}

impl SecondMoments {
    /// Reads the table off a covariance matrix.
    pub fn from_covariance(v: &Matrix2<f64>) -> Self {
        let tr = (v[(0, 0)] + v[(1, 1)]) / 4.0;
        let a_a = C64::new(v[(0, 0)] - v[(1, 1)], 2.0 * v[(0, 1)]) / 4.0;
        SecondMoments { a_ad: tr + 0.5, ad_a: tr - 0.5, a_a, ad_ad: a_a.conj() }
    }
}

/// Complex displacement amplitudes `ξ_k`, one per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementVector(Vec<C64>);

impl DisplacementVector {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("displacement vector"));
        }
        Ok(DisplacementVector(values))
    }

    pub fn zeros(len: usize) -> Self {
        DisplacementVector(vec![C64::new(0.0, 0.0); len])
    }

    pub fn single(xi: C64) -> Self {
        DisplacementVector(vec![xi])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn neg(&self) -> Self {
        DisplacementVector(self.0.iter().map(|z| -z).collect())
    }
}

impl std::ops::Index<usize> for DisplacementVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

/// Product Gaussian state over a [`ModeSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFieldState {
    modes: ModeSet,
    kinds: Vec<ModeKind>,
}

impl GaussianFieldState {
    pub fn new(modes: ModeSet, kinds: Vec<ModeKind>) -> Result<Self> {
        if kinds.len() != modes.len() {
            return Err(Error::DimensionMismatch { expected: modes.len(), got: kinds.len() });
        }
        let kinds = kinds.into_iter().map(ModeKind::validated).collect::<Result<Vec<_>>>()?;
        Ok(GaussianFieldState { modes, kinds })
    }

    pub fn vacuum(modes: ModeSet) -> Self {
        let kinds = vec![ModeKind::Vacuum; modes.len()];
        GaussianFieldState { modes, kinds }
    }

    /// Thermal (KMS) state at inverse temperature `beta`.
    pub fn thermal_beta(modes: ModeSet, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidState(format!("beta must be positive, got {beta}")));
        }
        let kinds = (0..modes.len()).map(|i| ModeKind::thermal_from_beta(beta, modes.omega(i))).collect();
        Self::new(modes, kinds)
    }

    /// Single-mode shortcut with `ω = 1`.
    pub fn single(kind: ModeKind) -> Result<Self> {
        Self::new(ModeSet::single(1, 1.0)?, vec![kind])
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn kinds(&self) -> &[ModeKind] {
        &self.kinds
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kind(&self, mode: usize) -> Result<ModeKind> {
        self.modes.check(mode)?;
        Ok(self.kinds[mode])
    }

    /// The mean vector; always zero for the states modelled here.
    pub fn mean(&self) -> Vec<f64> {
        vec![0.0; 2 * self.len()]
    }

    pub fn to_document(&self) -> StateDocument {
        StateDocument {
            spatial_dim: self.modes.spatial_dim,
            box_side: self.modes.box_side,
            mass: self.modes.mass,
            dispersion: self.modes.dispersion,
            modes: self
                .modes
                .indices
                .iter()
                .zip(&self.kinds)
                .map(|(j, kind)| ModeDocument { j: j.clone(), kind: *kind })
                .collect(),
        }
    }

    pub fn from_document(doc: StateDocument) -> Result<Self> {
        let (indices, kinds): (Vec<_>, Vec<_>) = doc.modes.into_iter().map(|m| (m.j, m.kind)).unzip();
        let modes = ModeSet::with_dispersion(doc.spatial_dim, doc.box_side, doc.mass, doc.dispersion, indices)?;
        Self::new(modes, kinds)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(text)?)
    }
}

/// On-disk form of a [`GaussianFieldState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    pub spatial_dim: usize,
    pub box_side: f64,
    pub mass: f64,
    #[serde(default, skip_serializing_if = "Dispersion::is_relativistic")]
    pub dispersion: Dispersion,
    pub modes: Vec<ModeDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDocument {
    pub j: Vec<i64>,
    #[serde(flatten)]
    pub kind: ModeKind,
}

/// Covariance matrix `V_k` of one mode.
pub fn covariance(state: &GaussianFieldState, mode: usize) -> Result<Matrix2<f64>> {
    Ok(state.kind(mode)?.covariance())
}

/// `ξᵀ (Ω V Ωᵀ) ξ` for one mode, with `ξ = (Re ξ, Im ξ)`.
pub fn symplectic_form(v: &Matrix2<f64>, xi: C64) -> f64 {
    let (u, w) = (xi.re, xi.im);
    u * u * v[(1, 1)] - 2.0 * u * w * v[(0, 1)] + w * w * v[(0, 0)]
}

/// Characteristic function from the covariance quadratic form.
pub fn char_analytic(state: &GaussianFieldState, xi: &DisplacementVector) -> Result<C64> {
    if xi.len() != state.len() {
        return Err(Error::DimensionMismatch { expected: state.len(), got: xi.len() });
    }
    let exponent: f64 = state
        .kinds
        .iter()
        .zip(xi.as_slice())
        .map(|(kind, &z)| symplectic_form(&kind.covariance(), z))
        .sum();
    Ok(C64::new((-0.5 * exponent).exp(), 0.0))
}

/// Characteristic function from the per-kind exponential closed forms.
///
/// Independent of the covariance route; used to cross-check [`char_analytic`].
pub fn char_closed_form(state: &GaussianFieldState, xi: &DisplacementVector) -> Result<C64> {
    if xi.len() != state.len() {
        return Err(Error::DimensionMismatch { expected: state.len(), got: xi.len() });
    }
    let mut exponent = 0.0;
    for (kind, &z) in state.kinds.iter().zip(xi.as_slice()) {
        exponent += match *kind {
            ModeKind::Vacuum => z.norm_sqr(),
            ModeKind::Thermal { n } => z.norm_sqr() * (2.0 * n + 1.0),
            ModeKind::Squeezed { r, theta } => {
                let cross = (C64::from_polar(1.0, theta) * z.conj() * z.conj()).re;
                (2.0 * r).cosh() * z.norm_sqr() + (2.0 * r).sinh() * cross
            }
        };
    }
    Ok(C64::new((-0.5 * exponent).exp(), 0.0))
}

/// One term `coeff · (a_mode†)^creation (a_mode)^annihilation` of a field operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorTerm {
    pub mode: usize,
    pub creation: u32,
    pub annihilation: u32,
    pub coeff: C64,
}

/// Hermitian operator given as a sum of [`OperatorTerm`]s.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldOperator {
    pub terms: Vec<OperatorTerm>,
}

impl FieldOperator {
    /// `Σ_k (μ_k a_k + μ_k* a_k†)`.
    pub fn linear(coeffs: &[(usize, C64)]) -> Self {
        let terms = coeffs
            .iter()
            .flat_map(|&(mode, mu)| {
                [
                    OperatorTerm { mode, creation: 0, annihilation: 1, coeff: mu },
                    OperatorTerm { mode, creation: 1, annihilation: 0, coeff: mu.conj() },
                ]
            })
            .collect();
        FieldOperator { terms }
    }

    /// Quadrature `x_k = (a_k + a_k†)/√2`.
    pub fn position(mode: usize) -> Self {
        Self::linear(&[(mode, C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))])
    }

    /// The Hermitian generator `Ô = i Σ (ξ a† - ξ* a)`, so that `D(ξ) = e^{-iÔ}`.
    pub fn displacement_generator(xi: &DisplacementVector) -> Self {
        let coeffs: Vec<_> = xi
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, &z)| (k, -C64::i() * z.conj()))
            .collect();
        Self::linear(&coeffs)
    }
}

/// `⟨Ô²⟩` for a Hermitian operator linear in the mode operators.
///
/// For mean-zero Gaussian states this fixes `⟨e^{-iÔ}⟩ = e^{-½⟨Ô²⟩}`.
pub fn gaussian_expectation(state: &GaussianFieldState, op: &FieldOperator) -> Result<f64> {
    let n = state.len();
    let mut mu = vec![C64::new(0.0, 0.0); n];
    let mut nu = vec![C64::new(0.0, 0.0); n];
    for t in &op.terms {
        state.modes.check(t.mode)?;
        match (t.creation, t.annihilation) {
            (0, 1) => mu[t.mode] += t.coeff,
            (1, 0) => nu[t.mode] += t.coeff,
            (c, a) => {
                return Err(Error::NonQuadratic(format!(
                    "term (a†)^{c} a^{a} on mode {} is not linear in the quadratures",
                    t.mode
                )))
            }
        }
    }
    for k in 0..n {
        let scale = mu[k].norm().max(nu[k].norm()).max(1.0);
        if (nu[k] - mu[k].conj()).norm() > 1e-12 * scale {
            return Err(Error::NonQuadratic(format!("operator is not Hermitian on mode {k}")));
        }
    }
    // modes are uncorrelated, so only same-mode pairs contribute
    let total: C64 = (0..n)
        .map(|k| {
            let m = state.kinds[k].second_moments();
            mu[k] * mu[k] * m.a_a + nu[k] * nu[k] * m.ad_ad + mu[k] * nu[k] * (m.a_ad + m.ad_a)
        })
        .sum();
    Ok(total.re)
}

/// Symmetric-ordered moment `⟨[(a†)^p a^q]_S⟩` of one mode, by Wick contraction.
pub fn moments_analytic(state: &GaussianFieldState, mode: usize, p: u32, q: u32) -> Result<C64> {
    if p + q > 4 {
        return Err(Error::MomentOrder(p + q));
    }
    let m = state.kind(mode)?.second_moments();
    Ok(wick_symmetric(&m, p, q))
}

pub(crate) fn wick_symmetric(m: &SecondMoments, p: u32, q: u32) -> C64 {
    // symmetric ordering pairs a† with a through (⟨a a†⟩ + ⟨a† a⟩)/2
    let sym = C64::new(0.5 * (m.a_ad + m.ad_a), 0.0);
    let ops: Vec<bool> = std::iter::repeat_n(true, p as usize)
        .chain(std::iter::repeat_n(false, q as usize))
        .collect();
    fn pairings(ops: &[bool], sym: C64, aa: C64, adad: C64) -> C64 {
        match ops.split_first() {
            None => C64::new(1.0, 0.0),
            Some((&first, rest)) => {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..rest.len() {
                    let weight = match (first, rest[i]) {
                        (true, true) => adad,
                        (false, false) => aa,
                        _ => sym,
                    };
                    let remaining: Vec<bool> = rest.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &b)| b).collect();
                    acc += weight * pairings(&remaining, sym, aa, adad);
                }
                acc
            }
        }
    }
    if ops.len() % 2 == 1 {
        return C64::new(0.0, 0.0);
    }
    pairings(&ops, sym, m.a_a, m.ad_ad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn covariance_examples() {
        let th = GaussianFieldState::single(ModeKind::Thermal { n: 1.0 }).unwrap();
        assert_eq!(covariance(&th, 0).unwrap(), Matrix2::new(3.0, 0.0, 0.0, 3.0));
        let vac = GaussianFieldState::single(ModeKind::Vacuum).unwrap();
        assert_eq!(covariance(&vac, 0).unwrap(), Matrix2::identity());
        let sq = GaussianFieldState::single(ModeKind::Squeezed { r: 1.0, theta: 0.0 }).unwrap();
        let v = covariance(&sq, 0).unwrap();
        assert!(close(v[(0, 0)], (-2.0f64).exp(), 1e-14));
        assert!(close(v[(1, 1)], 2.0f64.exp(), 1e-14));
        assert_eq!(v[(0, 1)], 0.0);
        assert!(matches!(covariance(&sq, 1), Err(Error::ModeIndex { index: 1, len: 1 })));
    }

    #[test]
    fn squeezed_covariance_is_pure() {
        for &(r, theta) in &[(0.3, 1.1), (1.0, 0.0), (2.0, 5.0)] {
            let v = ModeKind::Squeezed { r, theta }.covariance();
            assert!(close(v.determinant(), 1.0, 1e-10));
            assert_eq!(v[(0, 1)], v[(1, 0)]);
        }
    }

    #[test]
    fn char_examples() {
        let th = GaussianFieldState::single(ModeKind::Thermal { n: 1.0 }).unwrap();
        let xi = DisplacementVector::single(C64::new(0.5, 0.0));
        let chi = char_analytic(&th, &xi).unwrap();
        assert!(close(chi.re, (-0.375f64).exp(), 1e-15));
        assert!(close(chi.re, 0.687289, 1e-6));
        assert_eq!(char_analytic(&th, &DisplacementVector::zeros(1)).unwrap(), C64::new(1.0, 0.0));

        let two = GaussianFieldState::new(
            ModeSet::new(1, 2.0 * PI, 0.0, vec![vec![1], vec![2]]).unwrap(),
            vec![ModeKind::Thermal { n: 1.0 }; 2],
        )
        .unwrap();
        let xi2 = DisplacementVector::new(vec![C64::new(0.5, 0.0); 2]).unwrap();
        let chi2 = char_analytic(&two, &xi2).unwrap();
        assert!(close(chi2.re, chi.re * chi.re, 1e-15));
        assert!(close(chi2.re, 0.472367, 1e-6));
        assert!(matches!(
            char_analytic(&two, &xi),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn expectation_examples() {
        let x = FieldOperator::position(0);
        let th = GaussianFieldState::single(ModeKind::Thermal { n: 1.0 }).unwrap();
        let vac = GaussianFieldState::single(ModeKind::Vacuum).unwrap();
        let sq = GaussianFieldState::single(ModeKind::Squeezed { r: 1.0, theta: 0.0 }).unwrap();
        // ⟨x²⟩ = V_xx / 2
        assert!(close(gaussian_expectation(&th, &x).unwrap(), 1.5, 1e-14));
        assert!(close(gaussian_expectation(&vac, &x).unwrap(), 0.5, 1e-14));
        assert!(close(gaussian_expectation(&sq, &x).unwrap(), 0.5 * (-2.0f64).exp(), 1e-14));
        // ⟨(a + a†)²⟩ = V_xx
        let field = FieldOperator::linear(&[(0, C64::new(1.0, 0.0))]);
        assert!(close(gaussian_expectation(&th, &field).unwrap(), 3.0, 1e-14));
        assert!(close(gaussian_expectation(&vac, &field).unwrap(), 1.0, 1e-14));
        assert!(close(gaussian_expectation(&sq, &field).unwrap(), 0.135335, 1e-6));
    }

    #[test]
    fn expectation_rejects_non_linear_and_non_hermitian() {
        let th = GaussianFieldState::single(ModeKind::Thermal { n: 1.0 }).unwrap();
        let number = FieldOperator {
            terms: vec![OperatorTerm { mode: 0, creation: 1, annihilation: 1, coeff: C64::new(1.0, 0.0) }],
        };
        assert!(matches!(gaussian_expectation(&th, &number), Err(Error::NonQuadratic(_))));
        let lopsided = FieldOperator {
            terms: vec![OperatorTerm { mode: 0, creation: 0, annihilation: 1, coeff: C64::new(1.0, 0.0) }],
        };
        assert!(matches!(gaussian_expectation(&th, &lopsided), Err(Error::NonQuadratic(_))));
    }

    #[test]
    fn expectation_reproduces_chi() {
        let sq = GaussianFieldState::single(ModeKind::Squeezed { r: 0.7, theta: 1.3 }).unwrap();
        let xi = DisplacementVector::single(C64::new(0.4, -0.3));
        let o2 = gaussian_expectation(&sq, &FieldOperator::displacement_generator(&xi)).unwrap();
        let chi = char_analytic(&sq, &xi).unwrap();
        assert!(close((-0.5 * o2).exp(), chi.re, 1e-14));
    }

    #[test]
    fn second_moment_table_matches_covariance() {
        for kind in [
            ModeKind::Vacuum,
            ModeKind::Thermal { n: 2.5 },
            ModeKind::Squeezed { r: 0.8, theta: 2.0 },
        ] {
            let a = kind.second_moments();
            let b = SecondMoments::from_covariance(&kind.covariance());
            assert!(close(a.a_ad, b.a_ad, 1e-12) && close(a.ad_a, b.ad_a, 1e-12));
            assert!((a.a_a - b.a_a).norm() < 1e-12 && (a.ad_ad - b.ad_ad).norm() < 1e-12);
        }
    }

    #[test]
    fn moment_examples() {
        let th = GaussianFieldState::single(ModeKind::Thermal { n: 1.0 }).unwrap();
        assert!((moments_analytic(&th, 0, 1, 1).unwrap() - 1.5).norm() < 1e-15);
        let vac = GaussianFieldState::single(ModeKind::Vacuum).unwrap();
        assert_eq!(moments_analytic(&vac, 0, 2, 0).unwrap(), C64::new(0.0, 0.0));
        let sq = GaussianFieldState::single(ModeKind::Squeezed { r: 1.0, theta: 0.0 }).unwrap();
        assert!((moments_analytic(&sq, 0, 2, 0).unwrap() + 0.5 * 2.0f64.sinh()).norm() < 1e-14);
        assert!(matches!(moments_analytic(&th, 0, 3, 2), Err(Error::MomentOrder(5))));
        // fourth order: ⟨[a†² a²]_S⟩ = 2 S² + |⟨a²⟩|²
        let s = 1.5;
        assert!((moments_analytic(&th, 0, 2, 2).unwrap() - 2.0 * s * s).norm() < 1e-14);
        assert_eq!(moments_analytic(&th, 0, 2, 1).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn mode_set_validation() {
        assert!(ModeSet::new(1, 1.0, 0.0, vec![vec![0]]).is_err());
        assert!(ModeSet::new(1, 1.0, 0.5, vec![vec![0]]).is_ok());
        assert!(ModeSet::new(2, 1.0, 0.5, vec![vec![1, 0], vec![1, 0]]).is_err());
        assert!(ModeSet::new(4, 1.0, 0.5, vec![vec![1, 0, 0, 0]]).is_err());
        assert!(ModeSet::new(2, 1.0, 0.5, vec![vec![1]]).is_err());
        let m = ModeSet::new(3, 2.0, 1.0, vec![vec![1, -2, 0]]).unwrap();
        assert_eq!(m.wave_vector(0), vec![PI, -2.0 * PI, 0.0]);
        assert!(close(m.omega(0), (1.0 + 5.0 * PI * PI).sqrt(), 1e-14));
    }

    #[test]
    fn state_validation() {
        assert!(GaussianFieldState::single(ModeKind::Thermal { n: -0.1 }).is_err());
        assert!(GaussianFieldState::single(ModeKind::Squeezed { r: -1.0, theta: 0.0 }).is_err());
        let s = GaussianFieldState::single(ModeKind::Squeezed { r: 1.0, theta: -PI / 2.0 }).unwrap();
        match s.kinds()[0] {
            ModeKind::Squeezed { theta, .. } => assert!(close(theta, 1.5 * PI, 1e-15)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn document_round_trip() {
        let modes = ModeSet::new(2, 3.0, 0.2, vec![vec![1, 0], vec![0, -1], vec![2, 2]]).unwrap();
        let state = GaussianFieldState::new(
            modes,
            vec![ModeKind::Vacuum, ModeKind::Thermal { n: 0.5 }, ModeKind::Squeezed { r: 0.3, theta: 1.0 }],
        )
        .unwrap();
        let text = state.to_json().unwrap();
        assert!(text.contains("\"spatial_dim\"") && text.contains("\"params\""));
        assert_eq!(GaussianFieldState::from_json(&text).unwrap(), state);
        let parsed = GaussianFieldState::from_json(
            r#"{"spatial_dim":1,"box_side":6.283185307179586,"mass":0.0,
               "modes":[{"j":[1],"kind":"thermal","params":{"n":1.0}},{"j":[2],"kind":"vacuum"}]}"#,
        )
        .unwrap();
        assert_eq!(parsed.kinds(), &[ModeKind::Thermal { n: 1.0 }, ModeKind::Vacuum]);
    }

    #[test]
    fn beta_constructor() {
        let modes = ModeSet::single(1, 1.0).unwrap();
        let s = GaussianFieldState::thermal_beta(modes, 2.0f64.ln()).unwrap();
        match s.kinds()[0] {
            ModeKind::Thermal { n } => assert!(close(n, 1.0, 1e-14)),
            _ => unreachable!(),
        }
    }
}
