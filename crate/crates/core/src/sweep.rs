//! Pump-strength sweeps of the steady state: extracted field magnitudes and
//! the order parameters of the matching broken-symmetry ground state.

use serde::{Deserialize, Serialize};

use crate::effective::{build_v_quant, ground_state};
use crate::error::Result;
use crate::hilbert::{DensityState, LatticeSpec};
use crate::meanfield::PeriodicGrid;
use crate::model::{build_hamiltonian, PhysicalParams};
use crate::observables::wigner::{extract_field, wigner, WignerOptions};
use crate::observables::{self, Mode};
use crate::quantum::check_truncation;
use crate::steady::{steady_state, SteadyOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub eta_min: f64,
    pub eta_max: f64,
    pub points: usize,
    pub steady: SteadyOptions,
    pub wigner_points: usize,
    /// Grid size of the ground-state problem.
    pub grid_points: usize,
    /// Phases `(φ₊, φ₋)` used to break the symmetry of the effective potential.
    pub phases: (f64, f64),
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            eta_min: 0.0,
            eta_max: 24.0,
            points: 13,
            steady: SteadyOptions::default(),
            wigner_points: 101,
            grid_points: 256,
            phases: (0.0, 0.0),
        }
    }
}

impl SweepConfig {
    pub fn etas(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.eta_min];
        }
        let step = (self.eta_max - self.eta_min) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.eta_min + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eta: f64,
    pub abs_alpha_plus_q: f64,
    pub abs_alpha_minus_q: f64,
    pub abs_theta_plus_gs: f64,
    pub abs_theta_minus_gs: f64,
    pub residual: f64,
    pub boundary_momentum: f64,
    pub boundary_plus: f64,
    pub boundary_minus: f64,
    pub n_plus: f64,
    pub n_minus: f64,
    /// Largest `|⟨a_±⟩|` and `|Θ_±|` of the steady state itself.
    pub symmetric_residual: f64,
    /// Largest off-diagonal Fock element of the reduced mode states.
    pub mode_coherence: f64,
    pub annulus_plus: bool,
    pub annulus_minus: bool,
    pub degenerate: bool,
    pub converge_time: f64,
}

pub const SWEEP_COLUMNS: [&str; 17] = [
    "eta",
    "abs_alpha_plus_q",
    "abs_alpha_minus_q",
    "abs_theta_plus_gs",
    "abs_theta_minus_gs",
    "residual",
    "boundary_momentum",
    "boundary_plus",
    "boundary_minus",
    "n_plus",
    "n_minus",
    "symmetric_residual",
    "mode_coherence",
    "annulus_plus",
    "annulus_minus",
    "degenerate",
    "converge_time",
];

impl SweepRow {
    pub fn values(&self) -> Vec<f64> {
        let b = |x: bool| if x { 1.0 } else { 0.0 };
        vec![
            self.eta,
            self.abs_alpha_plus_q,
            self.abs_alpha_minus_q,
            self.abs_theta_plus_gs,
            self.abs_theta_minus_gs,
            self.residual,
            self.boundary_momentum,
            self.boundary_plus,
            self.boundary_minus,
            self.n_plus,
            self.n_minus,
            self.symmetric_residual,
            self.mode_coherence,
            b(self.annulus_plus),
            b(self.annulus_minus),
            b(self.degenerate),
            self.converge_time,
        ]
    }
}

/// Field analysis of a steady state.
pub struct PointAnalysis {
    pub row: SweepRow,
    pub rho: DensityState,
}

/// Analyses one steady state at pump strength `params.eta`.
pub fn analyse_point(
    spec: &LatticeSpec,
    params: &PhysicalParams,
    cfg: &SweepConfig,
    initial: Option<&DensityState>,
) -> Result<PointAnalysis> {
    let h = build_hamiltonian(spec, params)?;
    let ss = steady_state(&h, spec, params.kappa, &cfg.steady, initial)?;
    let rho = ss.rho_ss;
    let wopts = WignerOptions {
        points: cfg.wigner_points,
        half_width: None,
    };
    let mut mags = [0.0; 2];
    let mut annulus = [false; 2];
    let mut coherence: f64 = 0.0;
    let mut symmetric: f64 = 0.0;
    let mut photons = [0.0; 2];
    for (i, mode) in [Mode::Plus, Mode::Minus].into_iter().enumerate() {
        let red = observables::reduced_mode(&rho, mode)?;
        let m = red.matrix();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if r != c {
                    coherence = coherence.max(m[(r, c)].norm());
                }
            }
        }
        let field = extract_field(&wigner(&red, &wopts, Some(mode))?)?;
        mags[i] = field.magnitude;
        annulus[i] = field.is_annulus;
        let (a, n) = observables::field_moments(&rho, mode)?;
        photons[i] = n;
        symmetric = symmetric.max(a.norm());
    }
    let order = observables::order_parameters(&rho, spec)?;
    symmetric = symmetric.max(order.theta_plus.norm()).max(order.theta_minus.norm());
    let grid = PeriodicGrid::new(spec.angle(), cfg.grid_points)?;
    let v = build_v_quant(&grid, mags[0], mags[1], cfg.phases, params)?;
    let gs = ground_state(&grid, &v)?;
    let trunc = check_truncation(&rho, spec);
    let row = SweepRow {
        eta: params.eta,
        abs_alpha_plus_q: mags[0],
        abs_alpha_minus_q: mags[1],
        abs_theta_plus_gs: gs.theta_plus.norm(),
        abs_theta_minus_gs: gs.theta_minus.norm(),
        residual: ss.residual,
        boundary_momentum: trunc.momentum,
        boundary_plus: trunc.plus,
        boundary_minus: trunc.minus,
        n_plus: photons[0],
        n_minus: photons[1],
        symmetric_residual: symmetric,
        mode_coherence: coherence,
        annulus_plus: annulus[0],
        annulus_minus: annulus[1],
        degenerate: ss.degenerate,
        converge_time: ss.time,
    };
    Ok(PointAnalysis { row, rho })
}

/// Sweeps `η` in increasing order, warm-starting each point from the
/// previous steady state.
pub fn run_sweep(spec: &LatticeSpec, base: &PhysicalParams, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(cfg.points);
    let mut previous: Option<DensityState> = None;
    for eta in cfg.etas() {
        let params = base.with_eta(eta);
        let point = analyse_point(spec, &params, cfg, previous.as_ref())?;
        rows.push(point.row);
        previous = Some(point.rho);
    }
    Ok(rows)
}

/// First `η` at which the given column becomes nonzero.
pub fn onset(rows: &[SweepRow], field: impl Fn(&SweepRow) -> f64) -> Option<f64> {
    rows.iter().find(|r| field(r) > 0.0).map(|r| r.eta)
}
