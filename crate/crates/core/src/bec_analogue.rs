//! Impurity qubit in a Bose–Einstein condensate, mapped onto the scalar-field
//! protocol.
//!
//! The impurity couples through `Σ_s g_s ρ̂(r_A)|s⟩⟨s|`. Splitting
//! `g_s = ½(g_e + g_g) ± ½(g_e - g_g)` leaves a state-independent density
//! shift (a common phase on both branches, dropped) and a `σ_z` coupling of
//! strength `½(g_e - g_g)√ρ₀` to the density fluctuations. Each Bogoliubov
//! mode enters with weight `u_k + v_k = sqrt(E_k/ω_k)`, which plays the role
//! of the smearing transform, so the mapped problem runs through
//! [`crate::pulse_protocol::displacement_param`] unchanged.
//!
//! The dispersion `ω_k = sqrt(E_k (E_k + 2gρ₀))`, `E_k = k²/2m_B`, lives in
//! [`bogoliubov_omega`] alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_field::{Dispersion, ModeSet};
use crate::pulse_protocol::{PulseSchedule, SmearingFunction};

/// Condensate and impurity parameters (natural units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BecParams {
    pub rho0: f64,
    pub g_g: f64,
    pub g_e: f64,
    /// Interaction energy `gρ₀`.
    pub g_rho0: f64,
    #[serde(rename = "m_B")]
    pub m_b: f64,
    /// Impurity transition frequency; drops out in the interaction picture.
    pub omega0: f64,
}

impl BecParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho0.is_finite() && self.rho0 > 0.0) {
            return Err(Error::InvalidBec(format!("rho0 must be positive, got {}", self.rho0)));
        }
        if !(self.g_g.is_finite() && self.g_e.is_finite() && self.omega0.is_finite()) {
            return Err(Error::InvalidBec("couplings and omega0 must be finite".into()));
        }
        if !(self.g_rho0.is_finite() && self.g_rho0 > 0.0 && self.m_b.is_finite() && self.m_b > 0.0) {
            return Err(Error::InvalidBec("g_rho0 and m_B must be positive for a finite healing length".into()));
        }
        Ok(())
    }

    /// `ξ_h = 1/sqrt(2 m_B gρ₀)`.
    pub fn healing_length(&self) -> f64 {
        1.0 / (2.0 * self.m_b * self.g_rho0).sqrt()
    }

    /// `c = sqrt(gρ₀/m_B)`.
    pub fn sound_speed(&self) -> f64 {
        (self.g_rho0 / self.m_b).sqrt()
    }

    /// `½(g_e - g_g)√ρ₀`.
    pub fn effective_coupling(&self) -> f64 {
        0.5 * (self.g_e - self.g_g) * self.rho0.sqrt()
    }

    pub fn dispersion(&self) -> Dispersion {
        Dispersion::Bogoliubov { g_rho0: self.g_rho0, atom_mass: self.m_b }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: BecParams = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }
}

/// Bogoliubov dispersion `sqrt(E_k (E_k + 2gρ₀))`.
pub fn bogoliubov_omega(k: f64, g_rho0: f64, atom_mass: f64) -> f64 {
    let e = k * k / (2.0 * atom_mass);
    (e * (e + 2.0 * g_rho0)).sqrt()
}

pub(crate) fn bogoliubov_weight_raw(k: f64, g_rho0: f64, atom_mass: f64) -> Result<f64> {
    if k == 0.0 {
        return Err(Error::InvalidBec("the k = 0 mode has no Bogoliubov weight".into()));
    }
    let e = k * k / (2.0 * atom_mass);
    Ok((e / bogoliubov_omega(k, g_rho0, atom_mass)).sqrt())
}

/// `u_k + v_k = sqrt(E_k/ω_k)`.
pub fn bogoliubov_weight(k: f64, params: &BecParams) -> Result<f64> {
    params.validate()?;
    bogoliubov_weight_raw(k, params.g_rho0, params.m_b)
}

/// Result of [`map_to_protocol`].
#[derive(Debug, Clone, PartialEq)]
pub struct MappedProtocol {
    pub schedule: PulseSchedule,
    pub modes: ModeSet,
    /// Set when `g_e = g_g`: the qubit-dependent coupling vanishes and no
    /// characteristic-function information reaches the qubit.
    pub no_signal: bool,
}

/// Builds the scalar-field schedule and mode set equivalent to the impurity.
///
/// `template` supplies `τ`, `N`, the switching function and the impurity's own
/// localisation profile (`Delta` for a point-like impurity); its `lambda` is
/// replaced by the effective coupling.
pub fn map_to_protocol(
    params: &BecParams,
    spatial_dim: usize,
    box_side: f64,
    indices: Vec<Vec<i64>>,
    template: &PulseSchedule,
) -> Result<MappedProtocol> {
    params.validate()?;
    if let Some(j) = indices.iter().find(|j| j.iter().all(|&c| c == 0)) {
        return Err(Error::InvalidBec(format!("mode list contains k = 0 ({j:?})")));
    }
    let modes = ModeSet::with_dispersion(spatial_dim, box_side, 0.0, params.dispersion(), indices)?;
    let schedule = PulseSchedule::new(
        params.effective_coupling(),
        template.tau,
        template.segments,
        SmearingFunction::Bogoliubov {
            base: Box::new(template.smearing.clone()),
            g_rho0: params.g_rho0,
            atom_mass: params.m_b,
        },
        template.switching.clone(),
    )?;
    Ok(MappedProtocol { schedule, modes, no_signal: params.g_e == params.g_g })
}
