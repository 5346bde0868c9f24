//! Hamiltonian of the pumped ring cavity and the Lindblad generator.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{momentum_shift, DensityState, Embedding, LatticeSpec, Operator, RationalAngle};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Physical parameters, all in units of ω_rec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Effective pump amplitude η.
    pub eta: f64,
    /// Light shift per photon U₀.
    pub u0: f64,
    /// Cavity detuning Δ_c = ω_l − ω_c.
    pub delta_c: f64,
    /// Field decay rate κ (photon number decays at 2κ).
    pub kappa: f64,
    pub angle: RationalAngle,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.eta, self.u0, self.delta_c, self.kappa]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("non-finite physical parameter".into()));
        }
        if self.kappa < 0.0 {
            return Err(Error::InvalidParameter(format!("kappa = {} < 0", self.kappa)));
        }
        Ok(())
    }

    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta, ..self }
    }
}

fn check_angle(spec: &LatticeSpec, params: &PhysicalParams) -> Result<()> {
    params.validate()?;
    if spec.angle() != params.angle {
        return Err(Error::AngleMismatch {
            params: params.angle.to_string(),
            lattice: spec.angle().to_string(),
        });
    }
    Ok(())
}

fn kinetic(spec: &LatticeSpec) -> Operator {
    let diag: Vec<_> = (-(spec.n_max as i64)..=spec.n_max as i64)
        .map(|n| re(spec.momentum(n).powi(2)))
        .collect();
    Operator::diagonal(vec![spec.atom_dim()], &diag)
}

/// Atomic Hamiltonian: kinetic energy, dispersive light shift and pump
/// scattering.
pub fn build_h_atom(spec: &LatticeSpec, params: &PhysicalParams) -> Result<Operator> {
    check_angle(spec, params)?;
    let emb = Embedding::new(spec);
    let kicks = spec.kicks();
    let a_p = emb.a_plus();
    let a_m = emb.a_minus();
    let n_p = a_p.adjoint().matmul(&a_p)?;
    let n_m = a_m.adjoint().matmul(&a_m)?;

    let shift = |steps: i64| momentum_shift(spec, steps).map(|s| emb.atom(&s));

    let mut h = emb.atom(&kinetic(spec));

    // U₀ (a₊†a₊ + a₋†a₋ + a₊†a₋ e^{−2ikx} + h.c.)
    let hop = a_p.adjoint().matmul(&a_m)?.matmul(&shift(-kicks.intermode)?)?;
    let dispersive = n_p.add(&n_m)?.add(&hop)?.add(&hop.adjoint())?;
    h = h.add(&dispersive.scale(re(params.u0)))?;

    // η (a₊ e^{ikx(1−sinφ)} + a₋ e^{−ikx(1+sinφ)} + h.c.)
    let pump_p = a_p.matmul(&shift(kicks.pump_plus)?)?;
    let pump_m = a_m.matmul(&shift(-kicks.pump_minus)?)?;
    let pump = pump_p
        .add(&pump_m)?
        .add(&pump_p.adjoint())?
        .add(&pump_m.adjoint())?;
    h.add(&pump.scale(re(params.eta)))
}

/// Cavity Hamiltonian −Δ_c (a₊†a₊ + a₋†a₋).
pub fn build_h_cav(spec: &LatticeSpec, params: &PhysicalParams) -> Result<Operator> {
    check_angle(spec, params)?;
    let emb = Embedding::new(spec);
    let a_p = emb.a_plus();
    let a_m = emb.a_minus();
    let n_tot = a_p.adjoint().matmul(&a_p)?.add(&a_m.adjoint().matmul(&a_m)?)?;
    Ok(n_tot.scale(re(-params.delta_c)))
}

pub fn build_hamiltonian(spec: &LatticeSpec, params: &PhysicalParams) -> Result<Operator> {
    build_h_atom(spec, params)?.add(&build_h_cav(spec, params)?)
}

/// A Lindblad channel `rate · (J ρ J† − ½{J†J, ρ})`.
#[derive(Debug, Clone)]
pub struct Jump {
    pub rate: f64,
    pub op: Operator,
}

/// Photon loss through both mirrors; `κ(2aρa† − a†aρ − ρa†a)` per mode.
pub fn cavity_jumps(spec: &LatticeSpec, kappa: f64) -> Vec<Jump> {
    let emb = Embedding::new(spec);
    vec![
        Jump {
            rate: 2.0 * kappa,
            op: emb.a_plus(),
        },
        Jump {
            rate: 2.0 * kappa,
            op: emb.a_minus(),
        },
    ]
}

/// Diagonal unitary generating a rigid translation of the atom by `delta`
/// together with the compensating phase shifts of both modes. It commutes with
/// the Hamiltonian for every `delta`.
pub fn translation(spec: &LatticeSpec, delta: f64) -> Operator {
    let s = spec.angle().sin();
    let diag: Vec<_> = (0..spec.dim())
        .map(|i| {
            let (n, np, nm) = spec.quantum_numbers(i);
            let g = spec.momentum(n) + (1.0 - s) * np as f64 - (1.0 + s) * nm as f64;
            Complex64::from_polar(1.0, g * delta)
        })
        .collect();
    Operator::diagonal(spec.dims(), &diag)
}

/// Right-hand side of the master equation,
/// `−i[H, ρ] + κ Σ_± (2a ρ a† − a†a ρ − ρ a†a)`.
pub fn liouvillian_apply(
    h: &Operator,
    spec: &LatticeSpec,
    kappa: f64,
    rho: &DensityState,
) -> Result<DMatrix<Complex64>> {
    let dims = spec.dims();
    if h.dims() != dims.as_slice() {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: h.dims().to_vec(),
        });
    }
    if rho.dims() != dims.as_slice() {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: rho.dims().to_vec(),
        });
    }
    Ok(lindblad_rhs(h, &cavity_jumps(spec, kappa), rho.matrix()))
}

/// Generic Lindblad right-hand side on a dense matrix (not assumed Hermitian).
pub fn lindblad_rhs(h: &Operator, jumps: &[Jump], rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    // ρA = (A† ρ†)†
    let right = |a: &Operator, m: &DMatrix<Complex64>| a.adjoint().apply(&m.adjoint()).adjoint();
    let hr = h.apply(rho);
    let rh = right(h, rho);
    let mut out = (hr - rh) * (-I);
    for j in jumps {
        let jd = j.op.adjoint();
        let jdj = jd.matmul(&j.op).expect("jump dims");
        let jr = j.op.apply(rho);
        let sandwich = right(&jd, &jr);
        let anti = jdj.apply(rho) + right(&jdj, rho);
        out += (sandwich - anti * re(0.5)) * re(j.rate);
    }
    out
}

/// Dense superoperator acting on column-stacked `vec(ρ)`.
pub fn vectorized_liouvillian(h: &Operator, jumps: &[Jump]) -> DMatrix<Complex64> {
    let n = h.dim();
    let id = DMatrix::<Complex64>::identity(n, n);
    let hd = h.to_dense();
    let mut l = (id.kronecker(&hd) - hd.transpose().kronecker(&id)) * (-I);
    for j in jumps {
        let jd = j.op.to_dense();
        let jdj = jd.adjoint() * &jd;
        let term = jd.conjugate().kronecker(&jd)
            - (id.kronecker(&jdj) + jdj.transpose().kronecker(&id)) * re(0.5);
        l += term * re(j.rate);
    }
    l
}
