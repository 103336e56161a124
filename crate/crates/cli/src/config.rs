use std::path::PathBuf;

use cftomo::bec_analogue::BecParams;
use cftomo::gaussian_field::{GaussianFieldState, ModeSet, StateDocument};
use cftomo::pulse_protocol::{PulseSchedule, SmearingFunction, SwitchingFunction};
use cftomo::tomography::{Axis, ChiGrid};
use cftomo::Result;
use serde::{Deserialize, Serialize};

/// Everything a subcommand needs. Read from one JSON file, then patched by
/// command-line flags; the resolved value is written into every output header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_state")]
    pub state: StateDocument,
    #[serde(default = "default_schedule")]
    pub schedule: PulseSchedule,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub manifold: ManifoldSpec,
    /// Shots per basis; 0 means exact expectation values.
    #[serde(default)]
    pub shots: u64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: usize,
    /// `χ` on a rectangular grid instead of along the reachable manifold.
    #[serde(default)]
    pub scan: ScanKind,
    #[serde(default)]
    pub moments: MomentSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bec: Option<BecSpec>,
    /// Previously written chi-grid file to use instead of the state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    #[default]
    Manifold,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub extent: f64,
    pub points: usize,
    /// Wigner output lattice; defaults to the conjugate `ξ` lattice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_extent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_points: Option<usize>,
    /// Sample only the canonical half and complete by Hermitian symmetry.
    #[serde(default)]
    pub half: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { extent: 6.0, points: 129, alpha_extent: None, alpha_points: None, half: false }
    }
}

impl GridSpec {
    pub fn axes(&self, modes: usize) -> Result<Vec<Axis>> {
        ChiGrid::square_axes(modes, self.extent, self.points)
    }

    pub fn alpha_axes(&self, modes: usize) -> Result<Option<Vec<Axis>>> {
        match (self.alpha_extent, self.alpha_points) {
            (None, None) => Ok(None),
            (e, p) => Ok(Some(ChiGrid::square_axes(modes, e.unwrap_or(self.extent), p.unwrap_or(self.points))?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub segments: Vec<u32>,
    /// Upper end of the `τ` sweep; defaults to one period `2π/ω`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_max: Option<f64>,
    pub tau_points: usize,
}

impl Default for ManifoldSpec {
    fn default() -> Self {
        ManifoldSpec { segments: vec![1, 4, 5, 6, 7, 8, 9, 10], tau_max: None, tau_points: 400 }
    }
}

impl ManifoldSpec {
    /// `τ_i = i·τ_max/n` for `i = 1..=n`.
    pub fn tau_grid(&self, omega: f64) -> Vec<f64> {
        let tau_max = self.tau_max.unwrap_or(2.0 * std::f64::consts::PI / omega);
        (1..=self.tau_points).map(|i| i as f64 * tau_max / self.tau_points as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSpec {
    /// `(p, q)` pairs; all with `p + q ≤ 4` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<(u32, u32)>>,
    pub h: f64,
}

impl Default for MomentSpec {
    fn default() -> Self {
        MomentSpec { orders: None, h: 0.01 }
    }
}

impl MomentSpec {
    pub fn orders(&self) -> Vec<(u32, u32)> {
        self.orders.clone().unwrap_or_else(|| (0..=4).flat_map(|p| (0..=4 - p).map(move |q| (p, q))).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub cutoff: usize,
    /// Random schedules drawn for the displacement-identity check.
    pub draws: usize,
    pub tolerance: f64,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec { cutoff: 40, draws: 20, tolerance: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BecSpec {
    pub params: BecParams,
    pub spatial_dim: usize,
    pub box_side: f64,
    pub modes: Vec<Vec<i64>>,
}

fn default_state() -> StateDocument {
    GaussianFieldState::vacuum(ModeSet::single(1, 1.0).expect("valid default mode")).to_document()
}

fn default_schedule() -> PulseSchedule {
    PulseSchedule {
        lambda: 0.01,
        tau: 1.0,
        segments: 1,
        smearing: SmearingFunction::Delta,
        switching: SwitchingFunction::Constant { value: 1.0 },
    }
}

fn default_theta() -> f64 {
    std::f64::consts::FRAC_PI_2
}
