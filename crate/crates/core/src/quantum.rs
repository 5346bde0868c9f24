//! Time integration of the master equation with observable recording.

use serde::{Deserialize, Serialize};

use crate::blocks::BlockLiouvillian;
use crate::error::{Error, Result};
use crate::hilbert::{DensityState, LatticeSpec, Operator};
use crate::integrate::{DormandPrince, Stats, Tolerances};
use crate::model::cavity_jumps;
use crate::observables::{self, Mode};

/// Trace drift that aborts an evolution.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    /// Initial step in 1/ω_rec.
    pub dt: f64,
    pub t_final: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Observable sampling period.
    pub record_interval: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 4.0,
            rel_tol: 1e-7,
            abs_tol: 1e-9,
            record_interval: 0.05,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.t_final > 0.0
            && self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.record_interval > 0.0
            && [self.dt, self.t_final, self.rel_tol, self.abs_tol, self.record_interval]
                .iter()
                .all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid integrator config {self:?}")))
        }
    }

    /// Sample instants `0, Δ, 2Δ, …, t_final`.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = (self.t_final / self.record_interval - 1e-9).ceil() as usize;
        let mut times: Vec<f64> = (0..n).map(|k| k as f64 * self.record_interval).collect();
        times.push(self.t_final);
        times
    }
}

/// Time series of named observables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub series: Vec<(String, Vec<f64>)>,
    pub snapshots: Vec<(f64, DensityState)>,
    pub stats: Option<Stats>,
}

impl Trajectory {
    pub fn new(names: &[&str]) -> Self {
        Self {
            series: names.iter().map(|n| (n.to_string(), Vec::new())).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, t: f64, values: &[f64]) {
        assert_eq!(values.len(), self.series.len());
        if let Some(&last) = self.times.last() {
            assert!(t > last, "trajectory times must increase");
        }
        self.times.push(t);
        for ((_, s), v) in self.series.iter_mut().zip(values) {
            s.push(*v);
        }
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.series
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.as_slice())
    }

    pub fn names(&self) -> Vec<&str> {
        self.series.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Value of a series at the sample closest to `t`.
    pub fn at(&self, name: &str, t: f64) -> Option<f64> {
        let series = self.get(name)?;
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
            .0;
        Some(series[k])
    }

    pub fn final_state(&self) -> Option<&DensityState> {
        self.snapshots.last().map(|(_, s)| s)
    }
}

/// Populations near the edges of the truncated space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationReport {
    /// Population in the two outermost momentum shells on each side.
    pub momentum: f64,
    /// Population of the highest Fock level of each mode.
    pub plus: f64,
    pub minus: f64,
}

impl TruncationReport {
    pub fn max(&self) -> f64 {
        self.momentum.max(self.plus).max(self.minus)
    }
}

pub fn check_truncation(rho: &DensityState, spec: &LatticeSpec) -> TruncationReport {
    let m = rho.matrix();
    let mut report = TruncationReport {
        momentum: 0.0,
        plus: 0.0,
        minus: 0.0,
    };
    let edge = spec.n_max.saturating_sub(1) as i64;
    for i in 0..spec.dim() {
        let (n, np, nm) = spec.quantum_numbers(i);
        let p = m[(i, i)].re;
        if n.abs() >= edge.max(1) {
            report.momentum += p;
        }
        if np == spec.cut_plus {
            report.plus += p;
        }
        if nm == spec.cut_minus {
            report.minus += p;
        }
    }
    report
}

/// Column names of the quantum trajectory CSV.
pub const QUANTUM_COLUMNS: [&str; 14] = [
    "p_mean",
    "n_plus",
    "n_minus",
    "log_negativity",
    "abs_alpha_plus",
    "abs_alpha_minus",
    "abs_theta_plus",
    "abs_theta_minus",
    "abs_bunching",
    "boundary_momentum",
    "boundary_plus",
    "boundary_minus",
    "trace",
    "min_eigenvalue",
];

/// Evaluates every [`QUANTUM_COLUMNS`] entry for one state.
pub fn record(rho: &DensityState, spec: &LatticeSpec) -> Result<Vec<f64>> {
    let mom = observables::momentum_stats(rho, spec)?;
    let (ap, np) = observables::field_moments(rho, Mode::Plus)?;
    let (am, nm) = observables::field_moments(rho, Mode::Minus)?;
    let order = observables::order_parameters(rho, spec)?;
    let trunc = check_truncation(rho, spec);
    Ok(vec![
        mom.mean,
        np,
        nm,
        observables::log_negativity(rho),
        ap.norm(),
        am.norm(),
        order.theta_plus.norm(),
        order.theta_minus.norm(),
        order.bunching_plus.norm(),
        trunc.momentum,
        trunc.plus,
        trunc.minus,
        rho.trace().re,
        rho.min_eigenvalue(),
    ])
}

/// Integrates the master equation from `rho0`, recording observables every
/// `record_interval` and keeping the final state as a snapshot.
pub fn evolve(
    rho0: &DensityState,
    h: &Operator,
    spec: &LatticeSpec,
    kappa: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    evolve_with(rho0, h, spec, kappa, cfg, &[])
}

/// As [`evolve`], additionally storing full states at the listed times.
pub fn evolve_with(
    rho0: &DensityState,
    h: &Operator,
    spec: &LatticeSpec,
    kappa: f64,
    cfg: &IntegratorConfig,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    cfg.validate()?;
    if rho0.dims() != spec.dims().as_slice() || h.dims() != spec.dims().as_slice() {
        return Err(Error::DimensionMismatch {
            expected: spec.dims(),
            found: rho0.dims().to_vec(),
        });
    }
    let jumps = cavity_jumps(spec, kappa);
    let liou = BlockLiouvillian::new(h, &jumps, rho0);
    let mut y = liou.flatten(rho0.matrix());
    let mut traj = Trajectory::new(&QUANTUM_COLUMNS);
    let mut dp = DormandPrince::new(
        liou.len(),
        cfg.dt,
        Tolerances {
            rel: cfg.rel_tol,
            abs: cfg.abs_tol,
        },
    );
    let mut t = 0.0;
    let trace0 = liou.trace(&y).re;
    let samples = cfg.sample_times();
    for &ts in &samples {
        dp.advance(
            |_, y, dy| liou.apply(y, dy),
            &mut t,
            &mut y,
            ts,
            |time, y| {
                liou.symmetrize(y);
                let drift = (liou.trace(y).re - trace0).abs();
                if drift > TRACE_DRIFT_LIMIT {
                    return Err(Error::TraceDrift {
                        time,
                        drift,
                        limit: TRACE_DRIFT_LIMIT,
                    });
                }
                Ok(())
            },
        )?;
        let rho = liou.unflatten(&y);
        traj.push(ts, &record(&rho, spec)?);
        if snapshot_times.iter().any(|&s| (s - ts).abs() < 1e-12) {
            traj.snapshots.push((ts, rho.clone()));
        }
        if ts == cfg.t_final && traj.snapshots.last().is_none_or(|(s, _)| *s != ts) {
            traj.snapshots.push((ts, rho));
        }
    }
    traj.stats = Some(dp.stats);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{make_lattice, RationalAngle};
    use crate::model::{build_hamiltonian, PhysicalParams};

    #[test]
    fn sample_times_cover_interval() {
        let cfg = IntegratorConfig {
            t_final: 1.0,
            record_interval: 0.3,
            ..Default::default()
        };
        let t = cfg.sample_times();
        assert_eq!(t.len(), 5);
        assert_eq!(*t.last().unwrap(), 1.0);
        let cfg = IntegratorConfig {
            t_final: 1.0,
            record_interval: 0.25,
            ..Default::default()
        };
        assert_eq!(cfg.sample_times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn vacuum_is_stationary_without_hamiltonian() {
        let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 3, 2, 2).unwrap();
        let h = Operator::zeros(spec.dims());
        let rho0 = DensityState::ground(&spec);
        let cfg = IntegratorConfig {
            t_final: 1.0,
            record_interval: 0.25,
            ..Default::default()
        };
        let traj = evolve(&rho0, &h, &spec, 10.0, &cfg).unwrap();
        assert_eq!(traj.final_state().unwrap(), &rho0);
    }

    #[test]
    fn photon_decays_at_twice_kappa() {
        let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 2, 2, 1).unwrap();
        let h = Operator::zeros(spec.dims());
        let p = 0.7;
        let mut m = nalgebra::DMatrix::zeros(spec.dim(), spec.dim());
        let one = spec.index(0, 1, 0).unwrap();
        let vac = spec.index(0, 0, 0).unwrap();
        m[(one, one)] = num_complex::Complex64::new(p, 0.0);
        m[(vac, vac)] = num_complex::Complex64::new(1.0 - p, 0.0);
        let rho0 = DensityState::new(spec.dims(), m).unwrap();
        let kappa = 1.5;
        let cfg = IntegratorConfig {
            t_final: 1.0,
            record_interval: 0.1,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            dt: 1e-3,
        };
        let traj = evolve(&rho0, &h, &spec, kappa, &cfg).unwrap();
        for (t, n) in traj.times.iter().zip(traj.get("n_plus").unwrap()) {
            let want = p * (-2.0 * kappa * t).exp();
            assert!((n - want).abs() <= 1e-6 * want, "t = {t}: {n} vs {want}");
        }
    }

    #[test]
    fn truncation_report_edges() {
        let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 4, 3, 3).unwrap();
        assert_eq!(check_truncation(&DensityState::ground(&spec), &spec).max(), 0.0);
        let top = DensityState::basis(spec.dims(), spec.index(0, 3, 0).unwrap());
        assert_eq!(check_truncation(&top, &spec).plus, 1.0);
        let edge = DensityState::basis(spec.dims(), spec.index(-3, 0, 0).unwrap());
        assert_eq!(check_truncation(&edge, &spec).momentum, 1.0);
        let inner = DensityState::basis(spec.dims(), spec.index(2, 0, 0).unwrap());
        assert_eq!(check_truncation(&inner, &spec).momentum, 0.0);
    }

    #[test]
    fn symmetric_initial_state_keeps_zero_field() {
        let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 5, 3, 3).unwrap();
        let params = PhysicalParams {
            eta: 12.0,
            u0: -1.0,
            delta_c: -10.0,
            kappa: 10.0,
            angle: spec.angle(),
        };
        let h = build_hamiltonian(&spec, &params).unwrap();
        let cfg = IntegratorConfig {
            t_final: 0.5,
            record_interval: 0.1,
            ..Default::default()
        };
        let traj = evolve(&DensityState::ground(&spec), &h, &spec, params.kappa, &cfg).unwrap();
        for name in ["abs_alpha_plus", "abs_alpha_minus", "abs_theta_plus", "abs_theta_minus"] {
            assert!(traj.get(name).unwrap().iter().all(|v| *v <= 1e-8), "{name}");
        }
        assert!(traj.get("n_plus").unwrap().last().unwrap() > &0.01);
    }
}
