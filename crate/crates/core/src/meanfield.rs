//! Mean-field model: a single-particle wavefunction on the unit cell coupled
//! to two classical field amplitudes.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{LatticeSpec, RationalAngle};
use crate::model::PhysicalParams;
use crate::quantum::{Trajectory, QUANTUM_COLUMNS};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Uniform periodic grid over one unit cell with cached FFT plans.
#[derive(Clone)]
pub struct PeriodicGrid {
    angle: RationalAngle,
    q: f64,
    length: f64,
    x: Vec<f64>,
    k: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("angle", &self.angle)
            .field("points", &self.x.len())
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.angle == other.angle && self.x.len() == other.x.len()
    }
}

impl PeriodicGrid {
    /// `points` must be a power of two.
    pub fn new(angle: RationalAngle, points: usize) -> Result<Self> {
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size {points} is not a power of two >= 4"
            )));
        }
        // The cell is fixed by the lattice; the momentum cutoff is irrelevant.
        let spec = crate::hilbert::make_lattice(angle, 2, 0, 0)?;
        Ok(Self::from_spec(&spec, points))
    }

    fn from_spec(spec: &LatticeSpec, points: usize) -> Self {
        let q = spec.momentum_quantum_f64();
        let length = spec.cell_length();
        let x = (0..points).map(|j| j as f64 * length / points as f64).collect();
        let k = (0..points)
            .map(|m| {
                let m = if m < points / 2 { m as i64 } else { m as i64 - points as i64 };
                q * m as f64
            })
            .collect();
        let mut planner = FftPlanner::new();
        Self {
            angle: spec.angle(),
            q,
            length,
            x,
            k,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        }
    }

    pub fn angle(&self) -> RationalAngle {
        self.angle
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.len() as f64
    }

    pub fn momentum_quantum(&self) -> f64 {
        self.q
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Wave numbers in FFT order.
    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn fft(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    /// Inverse transform including the `1/N` normalization.
    pub fn ifft(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    /// `∫ |ψ|² e^{iκx} dx` by the rectangle rule, exact for band-limited
    /// integrands on a periodic grid.
    pub fn density_moment(&self, psi: &[Complex64], wavenumber: f64) -> Complex64 {
        let dx = self.dx();
        psi.iter()
            .zip(&self.x)
            .map(|(p, x)| p.norm_sqr() * Complex64::from_polar(1.0, wavenumber * x))
            .sum::<Complex64>()
            * dx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState {
    pub grid: PeriodicGrid,
    pub psi: Vec<Complex64>,
    pub alpha_plus: Complex64,
    pub alpha_minus: Complex64,
}

impl MeanFieldState {
    /// Flat wavefunction with both amplitudes set to `seed`.
    pub fn seeded(grid: PeriodicGrid, seed: Complex64) -> Self {
        let amp = 1.0 / grid.length().sqrt();
        let psi = vec![Complex64::new(amp, 0.0); grid.len()];
        Self {
            grid,
            psi,
            alpha_plus: seed,
            alpha_minus: seed,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|p| p.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn normalize(&mut self) {
        let s = 1.0 / self.norm_sqr().sqrt();
        self.psi.iter_mut().for_each(|p| *p *= s);
    }

    /// Probabilities of the plane waves `e^{ikx}` on the grid, in FFT order.
    pub fn momentum_distribution(&self) -> Vec<f64> {
        let mut hat = self.psi.clone();
        self.grid.fft(&mut hat);
        let total: f64 = hat.iter().map(|z| z.norm_sqr()).sum();
        hat.iter().map(|z| z.norm_sqr() / total).collect()
    }

    /// `⟨p̂⟩`, evaluated spectrally.
    pub fn momentum_mean(&self) -> f64 {
        self.momentum_distribution()
            .iter()
            .zip(self.grid.k())
            .map(|(w, k)| w * k)
            .sum()
    }

    /// Weight in the two outermost momentum shells of the grid.
    pub fn boundary_weight(&self) -> f64 {
        let n = self.grid.len() as i64;
        self.momentum_distribution()
            .iter()
            .enumerate()
            .filter(|(m, _)| {
                let m = *m as i64;
                let m = if m < n / 2 { m } else { m - n };
                m.abs() >= n / 2 - 1
            })
            .map(|(_, w)| w)
            .sum()
    }

    /// Shift the wavefunction by `steps` grid points and rotate the
    /// amplitudes so that the shifted state is an equally valid solution.
    pub fn translated(&self, steps: usize) -> Self {
        let n = self.grid.len();
        let steps = steps % n;
        let delta = steps as f64 * self.grid.dx();
        let s = self.grid.angle().sin();
        let mut psi = vec![Complex64::new(0.0, 0.0); n];
        for (j, p) in self.psi.iter().enumerate() {
            psi[(j + steps) % n] = *p;
        }
        Self {
            grid: self.grid.clone(),
            psi,
            alpha_plus: self.alpha_plus * Complex64::from_polar(1.0, -delta * (1.0 - s)),
            alpha_minus: self.alpha_minus * Complex64::from_polar(1.0, delta * (1.0 + s)),
        }
    }
}

/// `(B₊, B₋, Θ₊, Θ₋)` with `B_± = ⟨e^{±2ikx}⟩`, `Θ₊ = ⟨e^{ikx(1−sin φ)}⟩` and
/// `Θ₋ = ⟨e^{−ikx(1+sin φ)}⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldOrder {
    pub bunching_plus: Complex64,
    pub bunching_minus: Complex64,
    pub theta_plus: Complex64,
    pub theta_minus: Complex64,
}

pub fn mf_orderparams(state: &MeanFieldState) -> MeanFieldOrder {
    let s = state.grid.angle().sin();
    let b = state.grid.density_moment(&state.psi, 2.0);
    MeanFieldOrder {
        bunching_plus: b,
        bunching_minus: b.conj(),
        theta_plus: state.grid.density_moment(&state.psi, 1.0 - s),
        theta_minus: state.grid.density_moment(&state.psi, -(1.0 + s)),
    }
}

/// Classical optical potential on the grid points `x` for given amplitudes.
/// The constant light shift `U₀(|α₊|² + |α₋|²)` is dropped.
pub fn potential_at(x: &[f64], alpha_plus: Complex64, alpha_minus: Complex64, params: &PhysicalParams) -> Vec<f64> {
    let s = params.angle.sin();
    let cross = alpha_plus * alpha_minus.conj();
    x.iter()
        .map(|&x| {
            let interference = (cross * Complex64::from_polar(1.0, 2.0 * x)).re;
            let pump = (alpha_plus * Complex64::from_polar(1.0, x * (1.0 - s))
                + alpha_minus * Complex64::from_polar(1.0, -x * (1.0 + s)))
            .re;
            2.0 * params.u0 * interference + 2.0 * params.eta * pump
        })
        .collect()
}

pub fn mf_potential(state: &MeanFieldState, params: &PhysicalParams) -> Vec<f64> {
    potential_at(state.grid.x(), state.alpha_plus, state.alpha_minus, params)
}

fn field_rhs(a: [Complex64; 2], order: &MeanFieldOrder, params: &PhysicalParams) -> [Complex64; 2] {
    let diag = Complex64::new(-params.delta_c + params.u0, -params.kappa);
    let dp = diag * a[0] + params.u0 * order.bunching_plus.conj() * a[1] + params.eta * order.theta_plus.conj();
    let dm = diag * a[1] + params.u0 * order.bunching_minus.conj() * a[0] + params.eta * order.theta_minus.conj();
    [-I * dp, -I * dm]
}

fn rk4(a: [Complex64; 2], h: f64, order: &MeanFieldOrder, params: &PhysicalParams) -> [Complex64; 2] {
    let add = |a: [Complex64; 2], k: [Complex64; 2], s: f64| [a[0] + k[0] * s, a[1] + k[1] * s];
    let k1 = field_rhs(a, order, params);
    let k2 = field_rhs(add(a, k1, h / 2.0), order, params);
    let k3 = field_rhs(add(a, k2, h / 2.0), order, params);
    let k4 = field_rhs(add(a, k3, h), order, params);
    [0, 1].map(|i| a[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0))
}

fn kinetic_half_step(state: &mut MeanFieldState, dt: f64) {
    let grid = &state.grid;
    grid.fft(&mut state.psi);
    for (p, k) in state.psi.iter_mut().zip(grid.k()) {
        *p *= Complex64::from_polar(1.0, -k * k * dt / 2.0);
    }
    grid.ifft(&mut state.psi);
}

/// One Strang step: half kinetic step, then the fields and the potential
/// phase with order parameters frozen (|ψ|² is invariant under the potential
/// step), then another half kinetic step.
pub fn mf_step(state: &mut MeanFieldState, params: &PhysicalParams, dt: f64) {
    kinetic_half_step(state, dt);
    let order = mf_orderparams(state);
    let a0 = [state.alpha_plus, state.alpha_minus];
    let mid = rk4(a0, dt / 2.0, &order, params);
    let end = rk4(mid, dt / 2.0, &order, params);
    let v = potential_at(state.grid.x(), mid[0], mid[1], params);
    for (p, v) in state.psi.iter_mut().zip(v) {
        *p *= Complex64::from_polar(1.0, -v * dt);
    }
    state.alpha_plus = end[0];
    state.alpha_minus = end[1];
    kinetic_half_step(state, dt);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeanFieldConfig {
    pub dt: f64,
    pub t_final: f64,
    pub record_interval: f64,
    pub grid_points: usize,
    /// Initial value of both amplitudes (real).
    pub seed: f64,
}

impl Default for MeanFieldConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 4.0,
            record_interval: 0.05,
            grid_points: 256,
            seed: 1e-3,
        }
    }
}

impl MeanFieldConfig {
    pub fn validate(&self) -> Result<()> {
        let steps = self.record_interval / self.dt;
        let ok = self.dt > 0.0
            && self.t_final > 0.0
            && self.record_interval > 0.0
            && self.seed.is_finite()
            && (steps - steps.round()).abs() < 1e-9 * steps.max(1.0)
            && self.grid_points.is_power_of_two();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid mean-field config {self:?}: dt must divide record_interval and grid_points must be a power of two"
            )))
        }
    }
}

/// Column names of the mean-field trajectory: the quantum columns followed
/// by amplitude phases. Quantities without a mean-field analogue are NaN.
pub fn meanfield_columns() -> Vec<&'static str> {
    let mut c = QUANTUM_COLUMNS.to_vec();
    c.extend(["arg_alpha_plus", "arg_alpha_minus"]);
    c
}

pub fn record(state: &MeanFieldState) -> Vec<f64> {
    let order = mf_orderparams(state);
    vec![
        state.momentum_mean(),
        state.alpha_plus.norm_sqr(),
        state.alpha_minus.norm_sqr(),
        f64::NAN,
        state.alpha_plus.norm(),
        state.alpha_minus.norm(),
        order.theta_plus.norm(),
        order.theta_minus.norm(),
        order.bunching_plus.norm(),
        state.boundary_weight(),
        f64::NAN,
        f64::NAN,
        state.norm_sqr(),
        f64::NAN,
        state.alpha_plus.arg(),
        state.alpha_minus.arg(),
    ]
}

/// Fixed-step evolution; the final state is returned alongside the record.
pub fn evolve(
    initial: MeanFieldState,
    params: &PhysicalParams,
    cfg: &MeanFieldConfig,
) -> Result<(Trajectory, MeanFieldState)> {
    cfg.validate()?;
    params.validate()?;
    if params.angle != initial.grid.angle() {
        return Err(Error::AngleMismatch {
            params: params.angle.to_string(),
            lattice: initial.grid.angle().to_string(),
        });
    }
    let per_sample = (cfg.record_interval / cfg.dt).round() as usize;
    let total = (cfg.t_final / cfg.dt).round() as usize;
    let mut state = initial;
    let mut traj = Trajectory::new(&meanfield_columns());
    traj.push(0.0, &record(&state));
    for step in 1..=total {
        mf_step(&mut state, params, cfg.dt);
        if step % per_sample == 0 || step == total {
            traj.push(step as f64 * cfg.dt, &record(&state));
        }
    }
    Ok((traj, state))
}

/// Least-squares slope of `y(t)` over samples with `t ∈ [a, b]`.
pub fn slope(times: &[f64], values: &[f64], a: f64, b: f64) -> f64 {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= a - 1e-12 && **t <= b + 1e-12)
        .map(|(t, v)| (*t, *v))
        .collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mv)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    num / den
}

/// Default symmetric seed used for all dynamics runs.
pub fn default_initial(angle: RationalAngle, cfg: &MeanFieldConfig) -> Result<MeanFieldState> {
    let grid = PeriodicGrid::new(angle, cfg.grid_points)?;
    Ok(MeanFieldState::seeded(grid, Complex64::new(cfg.seed, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> RationalAngle {
        RationalAngle::new(1, 2).unwrap()
    }

    fn params(eta: f64, u0: f64, angle: RationalAngle) -> PhysicalParams {
        PhysicalParams {
            eta,
            u0,
            delta_c: -10.0,
            kappa: 10.0,
            angle,
        }
    }

    fn gaussian(grid: &PeriodicGrid, x0: f64, width: f64, k0: f64) -> Vec<Complex64> {
        let l = grid.length();
        let mut psi: Vec<Complex64> = grid
            .x()
            .iter()
            .map(|&x| {
                let d = (x - x0 + l / 2.0).rem_euclid(l) - l / 2.0;
                Complex64::from_polar((-d * d / (2.0 * width * width)).exp(), k0 * x)
            })
            .collect();
        let n: f64 = psi.iter().map(|p| p.norm_sqr()).sum::<f64>() * grid.dx();
        psi.iter_mut().for_each(|p| *p /= n.sqrt());
        psi
    }

    #[test]
    fn zero_fields_give_zero_potential() {
        let grid = PeriodicGrid::new(half(), 64).unwrap();
        let st = MeanFieldState::seeded(grid, Complex64::new(0.0, 0.0));
        assert!(mf_potential(&st, &params(12.0, -1.0, half())).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_mode_perpendicular_lattice() {
        let angle = RationalAngle::perpendicular();
        let grid = PeriodicGrid::new(angle, 64).unwrap();
        let mut st = MeanFieldState::seeded(grid, Complex64::new(0.0, 0.0));
        st.alpha_plus = Complex64::new(0.7, 0.0);
        let p = params(3.0, -1.0, angle);
        for (v, x) in mf_potential(&st, &p).iter().zip(st.grid.x()) {
            assert!((v - 2.0 * 3.0 * 0.7 * x.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn potential_matches_magnitude_phase_form() {
        // Term-by-term substitution into the atomic Hamiltonian, written in
        // the magnitude/phase form.
        let angle = RationalAngle::new(1, 3).unwrap();
        let grid = PeriodicGrid::new(angle, 128).unwrap();
        let mut st = MeanFieldState::seeded(grid, Complex64::new(0.0, 0.0));
        st.alpha_plus = Complex64::from_polar(0.8, 1.1);
        st.alpha_minus = Complex64::from_polar(0.35, -2.4);
        let p = params(2.5, -1.3, angle);
        let s = angle.sin();
        let (rp, fp) = (st.alpha_plus.norm(), st.alpha_plus.arg());
        let (rm, fm) = (st.alpha_minus.norm(), st.alpha_minus.arg());
        for (v, &x) in mf_potential(&st, &p).iter().zip(st.grid.x()) {
            let want = 2.0 * p.u0 * rp * rm * (2.0 * x + fp - fm).cos()
                + 2.0 * p.eta * (rp * (x * (1.0 - s) + fp).cos() + rm * (x * (1.0 + s) - fm).cos());
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_state_has_no_order() {
        let st = MeanFieldState::seeded(PeriodicGrid::new(half(), 128).unwrap(), Complex64::new(0.0, 0.0));
        let o = mf_orderparams(&st);
        for z in [o.bunching_plus, o.bunching_minus, o.theta_plus, o.theta_minus] {
            assert!(z.norm() < 1e-12);
        }
    }

    #[test]
    fn narrow_packet_gives_point_particle_bunching() {
        let grid = PeriodicGrid::new(half(), 1024).unwrap();
        let x0 = 1.3;
        let psi = gaussian(&grid, x0, 0.02, 0.0);
        let st = MeanFieldState {
            grid,
            psi,
            alpha_plus: Complex64::new(0.0, 0.0),
            alpha_minus: Complex64::new(0.0, 0.0),
        };
        let o = mf_orderparams(&st);
        assert!((o.bunching_plus - Complex64::from_polar(1.0, 2.0 * x0)).norm() < 1e-3);
        assert_eq!(o.bunching_minus, o.bunching_plus.conj());
    }

    #[test]
    fn quadrature_matches_oversampled_reference() {
        // A band-limited random state, sampled on a coarse grid and on a grid
        // four times finer, must give the same moments.
        let coarse = PeriodicGrid::new(half(), 64).unwrap();
        let fine = PeriodicGrid::new(half(), 256).unwrap();
        let coeffs: Vec<(i64, Complex64)> = (-6..=6)
            .map(|m| {
                let t = m as f64;
                (m, Complex64::new((1.7 * t).sin(), (0.9 * t + 0.3).cos()) / (1.0 + t * t).sqrt())
            })
            .collect();
        let eval = |g: &PeriodicGrid| {
            let q = g.momentum_quantum();
            let mut st = MeanFieldState::seeded(g.clone(), Complex64::new(0.0, 0.0));
            st.psi = g
                .x()
                .iter()
                .map(|&x| coeffs.iter().map(|(m, c)| c * Complex64::from_polar(1.0, q * *m as f64 * x)).sum())
                .collect();
            st.normalize();
            mf_orderparams(&st)
        };
        let (a, b) = (eval(&coarse), eval(&fine));
        for (x, y) in [
            (a.bunching_plus, b.bunching_plus),
            (a.theta_plus, b.theta_plus),
            (a.theta_minus, b.theta_minus),
        ] {
            assert!((x - y).norm() < 1e-9, "{x} vs {y}");
        }
        assert!(b.theta_plus.norm() > 1e-3);
    }

    #[test]
    fn decoupled_fields_decay_in_closed_form() {
        let p = params(0.0, 0.0, half());
        let grid = PeriodicGrid::new(half(), 64).unwrap();
        let mut st = MeanFieldState::seeded(grid, Complex64::new(0.3, -0.2));
        st.alpha_minus = Complex64::new(-0.1, 0.5);
        let a0 = (st.alpha_plus, st.alpha_minus);
        let dt = 1e-3;
        for _ in 0..500 {
            mf_step(&mut st, &p, dt);
        }
        let decay = (Complex64::new(-p.kappa, p.delta_c) * 0.5).exp();
        assert!((st.alpha_plus - a0.0 * decay).norm() <= 1e-8 * (a0.0 * decay).norm());
        assert!((st.alpha_minus - a0.1 * decay).norm() <= 1e-8 * (a0.1 * decay).norm());
    }

    #[test]
    fn free_packet_moves_at_group_velocity() {
        let p = params(0.0, 0.0, half());
        let grid = PeriodicGrid::new(half(), 256).unwrap();
        let k0 = 1.5;
        let psi = gaussian(&grid, 4.0, 0.8, k0);
        let mut st = MeanFieldState {
            grid,
            psi,
            alpha_plus: Complex64::new(0.0, 0.0),
            alpha_minus: Complex64::new(0.0, 0.0),
        };
        let p0 = st.momentum_mean();
        assert!((p0 - k0).abs() < 1e-6);
        for _ in 0..100 {
            mf_step(&mut st, &p, 1e-2);
        }
        assert!((st.momentum_mean() - p0).abs() < 1e-10);
        // Centre of mass moves at dE/dp = 2p.
        let com = st.grid.density_moment(&st.psi, st.grid.momentum_quantum()).arg() / st.grid.momentum_quantum();
        let want = (4.0 + 2.0 * k0 * 1.0).rem_euclid(st.grid.length());
        let got = com.rem_euclid(st.grid.length());
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn norm_is_preserved() {
        let p = params(12.0, -1.0, half());
        let cfg = MeanFieldConfig {
            t_final: 1.0,
            ..Default::default()
        };
        let (traj, _) = evolve(default_initial(half(), &cfg).unwrap(), &p, &cfg).unwrap();
        let norms = traj.get("trace").unwrap();
        assert!(norms.iter().all(|n| (n - 1.0).abs() < 1e-10));
    }

    #[test]
    fn translation_covariance() {
        let p = params(12.0, -1.0, half());
        let cfg = MeanFieldConfig {
            t_final: 1.0,
            seed: 0.05,
            ..Default::default()
        };
        let mut a = default_initial(half(), &cfg).unwrap();
        // Break the flatness so the shift is not trivial.
        a.psi = gaussian(&a.grid, 2.0, 1.5, 0.0);
        let mut b = a.translated(37);
        for _ in 0..1000 {
            mf_step(&mut a, &p, 1e-3);
            mf_step(&mut b, &p, 1e-3);
        }
        let shifted = a.translated(37);
        let res = shifted
            .psi
            .iter()
            .zip(&b.psi)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
            .max((shifted.alpha_plus - b.alpha_plus).norm())
            .max((shifted.alpha_minus - b.alpha_minus).norm());
        assert!(res <= 1e-8, "residual {res}");
    }

    #[test]
    fn mirror_symmetric_run_does_not_drift() {
        let angle = RationalAngle::perpendicular();
        let p = params(12.0, -1.0, angle);
        let cfg = MeanFieldConfig::default();
        let (traj, _) = evolve(default_initial(angle, &cfg).unwrap(), &p, &cfg).unwrap();
        assert!(traj.get("p_mean").unwrap().iter().all(|v| v.abs() <= 1e-4));
    }

    #[test]
    fn step_halving_is_second_order() {
        let p = params(6.0, -1.0, half());
        let run = |dt: f64| {
            let grid = PeriodicGrid::new(half(), 128).unwrap();
            let mut st = MeanFieldState::seeded(grid, Complex64::new(0.3, 0.1));
            st.psi = gaussian(&st.grid, 2.0, 1.5, 0.5);
            let n = (0.4 / dt).round() as usize;
            for _ in 0..n {
                mf_step(&mut st, &p, dt);
            }
            (st.alpha_plus, st.momentum_mean())
        };
        let (a1, p1) = run(0.02);
        let (a2, p2) = run(0.01);
        let (a4, p4) = run(0.005);
        let order_a = ((a1 - a2).norm() / (a2 - a4).norm()).log2();
        let order_p = ((p1 - p2).abs() / (p2 - p4).abs()).log2();
        assert!(order_a >= 1.9 && order_p >= 1.9, "{order_a} {order_p}");
    }

    #[test]
    fn slope_of_line() {
        let t: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * t + 1.0).collect();
        assert!((slope(&t, &v, 0.2, 0.8) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn grid_must_be_power_of_two() {
        assert!(PeriodicGrid::new(half(), 100).is_err());
        let g = PeriodicGrid::new(half(), 64).unwrap();
        assert!((2.0 * std::f64::consts::PI / g.momentum_quantum() - g.length()).abs() < 1e-12);
    }
}
