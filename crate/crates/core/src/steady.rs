//! Steady states of the master equation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blocks::BlockLiouvillian;
use crate::error::{Error, Result};
use crate::hilbert::{DensityState, LatticeSpec, Operator};
use crate::integrate::{DormandPrince, Tolerances};
use crate::linalg::gmres;
use crate::model::{cavity_jumps, vectorized_liouvillian};

const KRYLOV_RESTART: usize = 60;
const KRYLOV_MAX_ITERATIONS: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteadyMethod {
    LongTime,
    /// Krylov solve of `L(ρ) = 0`, confirmed by long-time evolution.
    Krylov,
    NullSpace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteadyOptions {
    /// Required bound on `max |L(ρ)|`.
    pub residual_tol: f64,
    /// Required bound on the max-norm change of ρ over one window of `1/κ`.
    pub change_tol: f64,
    /// Give up after this much evolution time.
    pub t_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest composite dimension for which the dense null-space method runs.
    pub null_space_max_dim: usize,
    /// Start the evolution from a Krylov solution of `L(ρ) = 0` (skipped
    /// when the steady state is degenerate).
    pub krylov: bool,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-7,
            change_tol: 1e-8,
            t_max: 400.0,
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            null_space_max_dim: 40,
            krylov: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateResult {
    pub rho_ss: DensityState,
    /// `max |L(ρ_ss)|`
    pub residual: f64,
    pub method: SteadyMethod,
    /// Evolution time needed (long-time method) or inverse iterations.
    pub time: f64,
    /// The jump graph has more than one closed class, so the fixed point
    /// depends on the initial state.
    pub degenerate: bool,
}

/// Long-time evolution from `initial` (the ground state if `None`) until the
/// state stops changing.
pub fn steady_state(
    h: &Operator,
    spec: &LatticeSpec,
    kappa: f64,
    opts: &SteadyOptions,
    initial: Option<&DensityState>,
) -> Result<SteadyStateResult> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "steady state needs kappa > 0, got {kappa}"
        )));
    }
    let ground = DensityState::ground(spec);
    let rho0 = initial.unwrap_or(&ground);
    if rho0.dims() != spec.dims().as_slice() {
        return Err(Error::DimensionMismatch {
            expected: spec.dims(),
            found: rho0.dims().to_vec(),
        });
    }
    let jumps = cavity_jumps(spec, kappa);
    let liou = BlockLiouvillian::new(h, &jumps, rho0);
    let degenerate = liou.closed_classes() > 1;
    let mut y = liou.flatten(rho0.matrix());
    let mut method = SteadyMethod::LongTime;
    if opts.krylov && !degenerate {
        let (refined, converged) = krylov_solve(&liou, &y, 1e-3 * opts.residual_tol);
        if converged {
            y = refined;
            method = SteadyMethod::Krylov;
        }
    }
    let window = 1.0 / kappa;
    let mut dp = DormandPrince::new(
        liou.len(),
        window * 1e-2,
        Tolerances {
            rel: opts.rel_tol,
            abs: opts.abs_tol,
        },
    );
    let mut t = 0.0;
    let mut previous = y.clone();
    let mut change = f64::INFINITY;
    let mut residual = liou.residual(&y);
    while t < opts.t_max {
        if residual <= opts.residual_tol && change <= opts.change_tol {
            return Ok(SteadyStateResult {
                rho_ss: liou.unflatten(&y),
                residual,
                method,
                time: t,
                degenerate,
            });
        }
        let target = (t + window).min(opts.t_max);
        dp.advance(
            |_, y, dy| liou.apply(y, dy),
            &mut t,
            &mut y,
            target,
            |_, y| {
                liou.symmetrize(y);
                Ok(())
            },
        )?;
        change = y
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        previous.copy_from_slice(&y);
        residual = liou.residual(&y);
    }
    if residual <= opts.residual_tol && change <= opts.change_tol {
        return Ok(SteadyStateResult {
            rho_ss: liou.unflatten(&y),
            residual,
            method,
            time: t,
            degenerate,
        });
    }
    Err(Error::NotConverged {
        time: t,
        residual,
        change,
    })
}

/// Solves `L(y) = 0, tr y = 1` by restarted GMRES started from `y0`. The
/// row of the first diagonal entry is replaced by the trace condition, which
/// makes the system regular when the steady state is unique (trace
/// preservation makes the diagonal rows of `L` linearly dependent). The
/// preconditioner is the exact inverse of the within-block generator.
fn krylov_solve(liou: &BlockLiouvillian, y0: &[Complex64], tol: f64) -> (Vec<Complex64>, bool) {
    let n = liou.len();
    let zero = Complex64::new(0.0, 0.0);
    let diag = liou.diagonal_positions();
    let pivot = diag[0];
    let syl = liou.sylvester();
    let mut b = vec![zero; n];
    b[pivot] = Complex64::new(1.0, 0.0);
    let mut y = y0.to_vec();
    let report = gmres(
        |v, out| {
            liou.apply(v, out);
            out[pivot] = diag.iter().map(|&i| v[i]).sum();
        },
        |v, out| liou.solve_within(&syl, v, out),
        &b,
        &mut y,
        tol,
        KRYLOV_RESTART,
        KRYLOV_MAX_ITERATIONS,
    );
    liou.symmetrize(&mut y);
    let tr = liou.trace(&y);
    if !report.converged || !tr.is_finite() || tr.norm() == 0.0 {
        return (y0.to_vec(), false);
    }
    y.iter_mut().for_each(|z| *z /= tr);
    (y, true)
}

/// Null vector of the dense vectorized Liouvillian, found by shifted inverse
/// iteration started from `vec(initial)`.
pub fn steady_state_null_space(
    h: &Operator,
    spec: &LatticeSpec,
    kappa: f64,
    opts: &SteadyOptions,
    initial: Option<&DensityState>,
) -> Result<SteadyStateResult> {
    let d = spec.dim();
    if d > opts.null_space_max_dim {
        return Err(Error::InvalidParameter(format!(
            "dense null-space method limited to dimension {}, got {d}",
            opts.null_space_max_dim
        )));
    }
    let ground = DensityState::ground(spec);
    let rho0 = initial.unwrap_or(&ground);
    let jumps = cavity_jumps(spec, kappa);
    let degenerate = BlockLiouvillian::new(h, &jumps, rho0).closed_classes() > 1;
    let l = vectorized_liouvillian(h, &jumps);
    let scale = l.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let shift = Complex64::new(1e-10 * scale, 0.0);
    let mut shifted = l.clone();
    for i in 0..d * d {
        shifted[(i, i)] -= shift;
    }
    let lu = shifted.lu();
    let mut x = DVector::from_iterator(d * d, rho0.matrix().iter().copied());
    let mut iterations = 0;
    for _ in 0..8 {
        iterations += 1;
        let next = lu
            .solve(&x)
            .ok_or_else(|| Error::Eigensolver("singular shifted Liouvillian".into()))?;
        let norm = next.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Eigensolver("inverse iteration broke down".into()));
        }
        let next = next / Complex64::new(norm, 0.0);
        let settled = (&l * &next).norm() <= 1e-13 * scale;
        x = next;
        if settled {
            break;
        }
    }
    let mut m = DMatrix::from_column_slice(d, d, x.as_slice());
    let tr = m.trace();
    m /= tr;
    let mut rho = DensityState::new(spec.dims(), m)?;
    rho.symmetrize();
    let lv = &l * DVector::from_iterator(d * d, rho.matrix().iter().copied());
    let residual = lv.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(SteadyStateResult {
        rho_ss: rho,
        residual,
        method: SteadyMethod::NullSpace,
        time: iterations as f64,
        degenerate,
    })
}
