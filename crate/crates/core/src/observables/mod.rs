//! Diagnostics of quantum states: reduced states, distributions, order
//! parameters, entanglement and Wigner functions.

pub mod wigner;

pub use wigner::{
    extract_field, phase_averaged_coherent, wigner, FieldExtraction, WignerGrid, WignerOptions,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{DensityState, LatticeSpec};
use crate::linalg;

/// Subsystems of the composite space, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Subsystem {
    Atom = 0,
    Plus = 1,
    Minus = 2,
}

/// Cavity mode selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Mode {
    Plus,
    Minus,
}

impl Mode {
    pub fn subsystem(self) -> Subsystem {
        match self {
            Mode::Plus => Subsystem::Plus,
            Mode::Minus => Subsystem::Minus,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Mode::Plus => "plus",
            Mode::Minus => "minus",
        }
    }
}

/// Traces out every subsystem whose position in `dims` is not listed in
/// `keep`. Kept subsystems retain their original relative order.
pub fn partial_trace(rho: &DensityState, keep: &[usize]) -> Result<DensityState> {
    let dims = rho.dims();
    if keep.is_empty() {
        return Err(Error::InvalidParameter("partial trace must keep at least one subsystem".into()));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.iter().any(|&k| k >= dims.len()) {
        return Err(Error::InvalidParameter(format!(
            "subsystem index out of range for dims {dims:?}"
        )));
    }
    let kept_dims: Vec<usize> = keep_sorted.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let n = rho.dim();
    let dt = n / dk;
    // Split each flat index into (kept index, traced index).
    let split: Vec<(usize, usize)> = (0..n)
        .map(|mut idx| {
            let mut digits = vec![0usize; dims.len()];
            for s in (0..dims.len()).rev() {
                digits[s] = idx % dims[s];
                idx /= dims[s];
            }
            let (mut ki, mut ti) = (0usize, 0usize);
            for (s, &d) in digits.iter().enumerate() {
                if keep_sorted.contains(&s) {
                    ki = ki * dims[s] + d;
                } else {
                    ti = ti * dims[s] + d;
                }
            }
            (ki, ti)
        })
        .collect();
    let mut by_traced: Vec<Vec<(usize, usize)>> = vec![Vec::new(); dt];
    for (g, &(ki, ti)) in split.iter().enumerate() {
        by_traced[ti].push((ki, g));
    }
    let m = rho.matrix();
    let mut out = DMatrix::zeros(dk, dk);
    for group in &by_traced {
        for &(kc, gc) in group {
            for &(kr, gr) in group {
                out[(kr, kc)] += m[(gr, gc)];
            }
        }
    }
    DensityState::new(kept_dims, out)
}

pub fn reduced_mode(rho: &DensityState, mode: Mode) -> Result<DensityState> {
    partial_trace(rho, &[mode.subsystem() as usize])
}

pub fn reduced_atom(rho: &DensityState) -> Result<DensityState> {
    partial_trace(rho, &[Subsystem::Atom as usize])
}

/// Momentum mean (in ħk) and the distribution over the lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumStats {
    pub mean: f64,
    /// `(momentum in ħk, probability)` for every lattice site.
    pub distribution: Vec<(f64, f64)>,
}

pub fn momentum_stats(rho: &DensityState, spec: &LatticeSpec) -> Result<MomentumStats> {
    let atom = reduced_atom(rho)?;
    let distribution: Vec<(f64, f64)> = (0..spec.atom_dim())
        .map(|i| {
            let n = i as i64 - spec.n_max as i64;
            (spec.momentum(n), atom.matrix()[(i, i)].re)
        })
        .collect();
    let mean = distribution.iter().map(|(p, w)| p * w).sum();
    Ok(MomentumStats { mean, distribution })
}

/// Photon-number probabilities of one mode.
pub fn photon_distribution(rho: &DensityState, mode: Mode) -> Result<Vec<f64>> {
    let red = reduced_mode(rho, mode)?;
    Ok((0..red.dim()).map(|n| red.matrix()[(n, n)].re).collect())
}

/// Passivity of a state diagonal in the Fock basis: populations must not
/// increase with photon number.
pub fn is_passive(pvec: &[f64]) -> bool {
    pvec.windows(2).all(|w| w[1] <= w[0] + 1e-10)
}

/// `Tr(ρ_atom e^{i·steps·q·x})` where `q` is the lattice momentum quantum.
pub fn plane_wave_expectation(atom: &DensityState, steps: i64) -> Complex64 {
    let d = atom.dim() as i64;
    let m = atom.matrix();
    // e^{iqx·steps}|n⟩ = |n + steps⟩, so Tr(ρ E) = Σ_n ρ[n, n + steps].
    (0..d)
        .filter(|&n| (0..d).contains(&(n + steps)))
        .map(|n| m[(n as usize, (n + steps) as usize)])
        .sum()
}

/// Atomic order and bunching parameters of a quantum state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderParameters {
    /// `⟨e^{2ikx}⟩`
    pub bunching_plus: Complex64,
    /// `⟨e^{−2ikx}⟩`
    pub bunching_minus: Complex64,
    /// `⟨e^{ikx(1 − sin φ)}⟩`
    pub theta_plus: Complex64,
    /// `⟨e^{−ikx(1 + sin φ)}⟩`
    pub theta_minus: Complex64,
}

pub fn order_parameters(rho: &DensityState, spec: &LatticeSpec) -> Result<OrderParameters> {
    let atom = reduced_atom(rho)?;
    let k = spec.kicks();
    Ok(OrderParameters {
        bunching_plus: plane_wave_expectation(&atom, k.intermode),
        bunching_minus: plane_wave_expectation(&atom, -k.intermode),
        theta_plus: plane_wave_expectation(&atom, k.pump_plus),
        theta_minus: plane_wave_expectation(&atom, -k.pump_minus),
    })
}

/// `⟨a⟩` and `⟨a†a⟩` of one mode.
pub fn field_moments(rho: &DensityState, mode: Mode) -> Result<(Complex64, f64)> {
    let red = reduced_mode(rho, mode)?;
    let m = red.matrix();
    let mut amp = Complex64::new(0.0, 0.0);
    let mut num = 0.0;
    for n in 0..red.dim() {
        num += n as f64 * m[(n, n)].re;
        if n + 1 < red.dim() {
            // Tr(ρ a) = Σ √(n+1) ρ[n+1, n]
            amp += m[(n + 1, n)] * ((n + 1) as f64).sqrt();
        }
    }
    Ok((amp, num))
}

/// Partial transpose over the first `split` subsystems.
pub fn partial_transpose(rho: &DensityState, split: usize) -> DMatrix<Complex64> {
    let dims = rho.dims();
    let da: usize = dims[..split].iter().product();
    let db: usize = dims[split..].iter().product();
    let m = rho.matrix();
    DMatrix::from_fn(da * db, da * db, |r, c| {
        let (a, b) = (r / db, r % db);
        let (a2, b2) = (c / db, c % db);
        m[(a2 * db + b, a * db + b2)]
    })
}

/// Logarithmic negativity between the atom and both cavity modes,
/// `log₂ ‖ρ^{T_atom}‖₁`, clamped at zero.
pub fn log_negativity(rho: &DensityState) -> f64 {
    let pt = partial_transpose(rho, 1);
    let norm: f64 = linalg::hermitian_eigenvalues(&pt).into_iter().map(f64::abs).sum();
    norm.log2().max(0.0)
}
