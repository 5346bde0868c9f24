//! Effective potential built from extracted steady-state field magnitudes,
//! and the symmetry-broken ground state of the resulting single-particle
//! Hamiltonian.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::meanfield::{mf_orderparams, potential_at, MeanFieldState, PeriodicGrid};
use crate::model::PhysicalParams;

/// Grid size above which the dense eigensolver is replaced by inverse
/// iteration.
pub const DENSE_LIMIT: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct BrokenSymmetryState {
    pub grid: PeriodicGrid,
    pub psi_gs: Vec<Complex64>,
    pub energy: f64,
    pub theta_plus: Complex64,
    pub theta_minus: Complex64,
}

/// `V_mf` with `α_± = mag_± e^{iφ_±}`.
pub fn build_v_quant(
    grid: &PeriodicGrid,
    mag_plus: f64,
    mag_minus: f64,
    phases: (f64, f64),
    params: &PhysicalParams,
) -> Result<Vec<f64>> {
    if !(mag_plus >= 0.0 && mag_minus >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "field magnitudes must be non-negative, got {mag_plus}, {mag_minus}"
        )));
    }
    if params.angle != grid.angle() {
        return Err(Error::AngleMismatch {
            params: params.angle.to_string(),
            lattice: grid.angle().to_string(),
        });
    }
    Ok(potential_at(
        grid.x(),
        Complex64::from_polar(mag_plus, phases.0),
        Complex64::from_polar(mag_minus, phases.1),
        params,
    ))
}

/// Real symmetric matrix of `p̂² + V(x̂)` in the grid basis, with the
/// kinetic term evaluated spectrally.
pub fn hamiltonian_matrix(grid: &PeriodicGrid, potential: &[f64]) -> DMatrix<f64> {
    let n = grid.len();
    let k = grid.k();
    let dx = grid.dx();
    // K depends only on i − j.
    let row: Vec<f64> = (0..n)
        .map(|d| {
            let r = d as f64 * dx;
            k.iter().map(|k| k * k * (k * r).cos()).sum::<f64>() / n as f64
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let d = (i + n - j) % n;
        row[d] + if i == j { potential[i] } else { 0.0 }
    })
}

fn finish(grid: &PeriodicGrid, v: &DVector<f64>, energy: f64) -> BrokenSymmetryState {
    let sign = if v.sum() < 0.0 { -1.0 } else { 1.0 };
    let scale = sign / (v.norm() * grid.dx().sqrt());
    let psi: Vec<Complex64> = v.iter().map(|x| Complex64::new(x * scale, 0.0)).collect();
    let state = MeanFieldState {
        grid: grid.clone(),
        psi,
        alpha_plus: Complex64::new(0.0, 0.0),
        alpha_minus: Complex64::new(0.0, 0.0),
    };
    let order = mf_orderparams(&state);
    BrokenSymmetryState {
        grid: grid.clone(),
        psi_gs: state.psi,
        energy,
        theta_plus: order.theta_plus,
        theta_minus: order.theta_minus,
    }
}

/// Lowest eigenpair of `p̂² + V(x̂)` on the grid.
pub fn ground_state(grid: &PeriodicGrid, potential: &[f64]) -> Result<BrokenSymmetryState> {
    if potential.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: vec![grid.len()],
            found: vec![potential.len()],
        });
    }
    let h = hamiltonian_matrix(grid, potential);
    if grid.len() <= DENSE_LIMIT {
        let eig = SymmetricEigen::new(h);
        let (i0, e0) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty grid");
        Ok(finish(grid, &eig.eigenvectors.column(i0).into_owned(), *e0))
    } else {
        inverse_iteration(grid, h, potential)
    }
}

fn rayleigh(h: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(h * v)) / v.norm_squared()
}

fn inverse_iteration(grid: &PeriodicGrid, h: DMatrix<f64>, potential: &[f64]) -> Result<BrokenSymmetryState> {
    let n = grid.len();
    // The kinetic term is non-negative, so min V bounds the spectrum below.
    let vmin = potential.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = vmin - 1.0;
    let shifted = &h - DMatrix::identity(n, n) * shift;
    let chol = shifted
        .cholesky()
        .ok_or_else(|| Error::Eigensolver("shifted Hamiltonian not positive definite".into()))?;
    let mut v = DVector::from_iterator(n, potential.iter().map(|p| (vmin - p).exp()));
    let mut energy = rayleigh(&h, &v);
    // Residuals cannot drop below roundoff in the largest matrix entries.
    let scale = grid.k().iter().map(|k| k * k).fold(0.0, f64::max) + potential.iter().map(|p| p.abs()).fold(0.0, f64::max);
    for _ in 0..10_000 {
        let next = chol.solve(&v);
        v = &next / next.norm();
        let e = rayleigh(&h, &v);
        let residual = (&h * &v - &v * e).norm();
        let converged = residual <= 1e-12 * scale;
        energy = e;
        if converged {
            return Ok(finish(grid, &v, energy));
        }
    }
    Err(Error::Eigensolver(format!(
        "inverse iteration stalled at energy {energy}"
    )))
}

/// Imaginary-time split-step propagation with step `tau`, run until the
/// Rayleigh-quotient energy settles.
pub fn ground_state_imaginary_time(
    grid: &PeriodicGrid,
    potential: &[f64],
    tau: f64,
    max_steps: usize,
) -> Result<BrokenSymmetryState> {
    let n = grid.len();
    let h = hamiltonian_matrix(grid, potential);
    let half_kin: Vec<f64> = grid.k().iter().map(|k| (-k * k * tau / 2.0).exp()).collect();
    let pot: Vec<f64> = potential.iter().map(|v| (-v * tau).exp()).collect();
    let vmin = potential.iter().copied().fold(f64::INFINITY, f64::min);
    let mut psi: Vec<Complex64> = potential
        .iter()
        .map(|p| Complex64::new((vmin - p).min(0.0).exp(), 0.0))
        .collect();
    let kinetic = |psi: &mut Vec<Complex64>| {
        grid.fft(psi);
        psi.iter_mut().zip(&half_kin).for_each(|(p, f)| *p *= *f);
        grid.ifft(psi);
    };
    let mut last = f64::INFINITY;
    for step in 0..max_steps {
        kinetic(&mut psi);
        psi.iter_mut().zip(&pot).for_each(|(p, f)| *p *= *f);
        kinetic(&mut psi);
        let norm = psi.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|p| *p /= norm);
        if step % 100 == 99 {
            let v = DVector::from_iterator(n, psi.iter().map(|p| p.re));
            let e = rayleigh(&h, &v);
            if (e - last).abs() <= 1e-13 * (1.0 + e.abs()) {
                return Ok(finish(grid, &v, e));
            }
            last = e;
        }
    }
    Err(Error::Eigensolver(format!(
        "imaginary-time propagation not settled after {max_steps} steps (energy {last})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::RationalAngle;

    fn params(angle: RationalAngle) -> PhysicalParams {
        PhysicalParams {
            eta: 12.0,
            u0: -1.0,
            delta_c: -10.0,
            kappa: 10.0,
            angle,
        }
    }

    fn half() -> RationalAngle {
        RationalAngle::new(1, 2).unwrap()
    }

    #[test]
    fn zero_magnitudes_give_zero_potential() {
        let grid = PeriodicGrid::new(half(), 64).unwrap();
        let v = build_v_quant(&grid, 0.0, 0.0, (0.3, 1.0), &params(half())).unwrap();
        assert!(v.iter().all(|x| *x == 0.0));
        assert!(build_v_quant(&grid, -1.0, 0.0, (0.0, 0.0), &params(half())).is_err());
    }

    #[test]
    fn zero_phases_match_meanfield_potential() {
        let grid = PeriodicGrid::new(half(), 64).unwrap();
        let p = params(half());
        let mut st = MeanFieldState::seeded(grid.clone(), Complex64::new(0.0, 0.0));
        st.alpha_plus = Complex64::new(0.9, 0.0);
        st.alpha_minus = Complex64::new(0.4, 0.0);
        let v = build_v_quant(&grid, 0.9, 0.4, (0.0, 0.0), &p).unwrap();
        assert_eq!(v, crate::meanfield::mf_potential(&st, &p));
    }

    #[test]
    fn phase_shift_is_translation() {
        let angle = half();
        let s = angle.sin();
        let grid = PeriodicGrid::new(angle, 128).unwrap();
        let p = params(angle);
        let v0 = build_v_quant(&grid, 0.9, 0.4, (0.2, -0.7), &p).unwrap();
        let delta = 0.83;
        let shifted = build_v_quant(&grid, 0.9, 0.4, (0.2 + delta * (1.0 - s), -0.7 - delta * (1.0 + s)), &p).unwrap();
        // V'(x) = V(x + Δ), checked against direct evaluation of V at x + Δ.
        let moved: Vec<f64> = grid.x().iter().map(|x| x + delta).collect();
        let direct = potential_at(&moved, Complex64::from_polar(0.9, 0.2), Complex64::from_polar(0.4, -0.7), &p);
        for (a, b) in shifted.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
        // Periodicity over the cell.
        let wrapped: Vec<f64> = grid.x().iter().map(|x| x + grid.length()).collect();
        let again = potential_at(&wrapped, Complex64::from_polar(0.9, 0.2), Complex64::from_polar(0.4, -0.7), &p);
        for (a, b) in v0.iter().zip(&again) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn free_particle_ground_state_is_flat() {
        let grid = PeriodicGrid::new(half(), 64).unwrap();
        let gs = ground_state(&grid, &vec![0.0; 64]).unwrap();
        assert!(gs.energy.abs() < 1e-12);
        let amp = 1.0 / grid.length().sqrt();
        assert!(gs.psi_gs.iter().all(|p| (p.re - amp).abs() < 1e-10));
        assert!(gs.theta_plus.norm() < 1e-12 && gs.theta_minus.norm() < 1e-12);
    }

    #[test]
    fn deep_lattice_near_harmonic_estimate() {
        let angle = RationalAngle::perpendicular();
        let grid = PeriodicGrid::new(angle, 128).unwrap();
        let v: Vec<f64> = grid.x().iter().map(|x| 40.0 * x.cos()).collect();
        let gs = ground_state(&grid, &v).unwrap();
        // Around x = π: V ≈ −40 + 20 δ², with p² kinetic, ω = 2√20.
        let harmonic = -40.0 + 20f64.sqrt();
        assert!((gs.energy - harmonic).abs() <= 0.1 * harmonic.abs());
        // Reference at four times the resolution.
        let fine = PeriodicGrid::new(angle, 512).unwrap();
        let vf: Vec<f64> = fine.x().iter().map(|x| 40.0 * x.cos()).collect();
        let reference = ground_state(&fine, &vf).unwrap();
        assert!((gs.energy - reference.energy).abs() < 1e-8);
        // Localized at the minimum x = π.
        let peak = gs
            .psi_gs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert!((grid.x()[peak] - std::f64::consts::PI).abs() < grid.dx());
    }

    #[test]
    fn dense_and_imaginary_time_agree() {
        let grid = PeriodicGrid::new(half(), 128).unwrap();
        let v = build_v_quant(&grid, 0.8, 0.3, (0.0, 0.0), &params(half())).unwrap();
        let a = ground_state(&grid, &v).unwrap();
        let b = ground_state_imaginary_time(&grid, &v, 2e-3, 200_000).unwrap();
        assert!((a.energy - b.energy).abs() < 1e-8, "{} {}", a.energy, b.energy);
        let overlap: Complex64 = a.psi_gs.iter().zip(&b.psi_gs).map(|(x, y)| x.conj() * y).sum::<Complex64>() * grid.dx();
        assert!(overlap.norm() >= 1.0 - 1e-8);
        let flat = grid.length().recip();
        let flat_energy: f64 = v.iter().sum::<f64>() * grid.dx() * flat;
        assert!(a.energy <= flat_energy);
    }

    #[test]
    fn inverse_iteration_matches_dense() {
        let grid = PeriodicGrid::new(half(), 1024).unwrap();
        let v = build_v_quant(&grid, 0.8, 0.3, (0.0, 0.0), &params(half())).unwrap();
        let big = ground_state(&grid, &v).unwrap();
        let coarse = PeriodicGrid::new(half(), 256).unwrap();
        let vc = build_v_quant(&coarse, 0.8, 0.3, (0.0, 0.0), &params(half())).unwrap();
        let small = ground_state(&coarse, &vc).unwrap();
        assert!((big.energy - small.energy).abs() < 1e-8);
        assert!((big.theta_plus - small.theta_plus).norm() < 1e-8);
    }

    #[test]
    fn order_magnitudes_independent_of_translation_phase() {
        let angle = half();
        let s = angle.sin();
        let grid = PeriodicGrid::new(angle, 256).unwrap();
        let p = params(angle);
        let base = ground_state(&grid, &build_v_quant(&grid, 0.9, 0.4, (0.0, 0.0), &p).unwrap()).unwrap();
        for delta in [0.37, 1.9, 5.2] {
            let v = build_v_quant(&grid, 0.9, 0.4, (delta * (1.0 - s), -delta * (1.0 + s)), &p).unwrap();
            let gs = ground_state(&grid, &v).unwrap();
            assert!((gs.theta_plus.norm() - base.theta_plus.norm()).abs() < 1e-10);
            assert!((gs.theta_minus.norm() - base.theta_minus.norm()).abs() < 1e-10);
        }
        // A single nonzero field: every phase is a translation.
        let one = ground_state(&grid, &build_v_quant(&grid, 0.9, 0.0, (0.0, 0.0), &p).unwrap()).unwrap();
        for phi in [0.5, 2.0, -2.9] {
            let gs = ground_state(&grid, &build_v_quant(&grid, 0.9, 0.0, (phi, -1.1 * phi), &p).unwrap()).unwrap();
            assert!((gs.theta_plus.norm() - one.theta_plus.norm()).abs() < 1e-10);
            assert!((gs.theta_minus.norm() - one.theta_minus.norm()).abs() < 1e-10);
            assert!(one.theta_plus.norm() > 1e-3);
        }
    }
}
