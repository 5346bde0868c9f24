//! Composite Hilbert space of the atom (plane-wave momentum ladder) and the two
//! counter-propagating cavity modes, plus the sparse operator and dense state
//! types used everywhere else.
//!
//! Subsystem order is always `(atom, mode +, mode −)`. A composite basis state
//! `|n, n₊, n₋⟩` has flat index `((n + n_max)·(c₊+1) + n₊)·(c₋+1) + n₋`, which is
//! the row-major Kronecker ordering produced by [`tensor`].

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// A reduced fraction `a/b` standing for sin φ of the pump direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(i64, i64)", into = "(i64, i64)")]
pub struct RationalAngle {
    numerator: i64,
    denominator: i64,
}

impl RationalAngle {
    pub fn new(numerator: i64, denominator: i64) -> Result<Self> {
        if denominator == 0 || numerator.abs() > denominator.abs() {
            return Err(Error::InvalidAngle {
                numerator,
                denominator,
            });
        }
        let sign = denominator.signum();
        let g = gcd(numerator, denominator).max(1);
        Ok(Self {
            numerator: sign * numerator / g,
            denominator: sign * denominator / g,
        })
    }

    /// Perpendicular pump, sin φ = 0.
    pub fn perpendicular() -> Self {
        Self {
            numerator: 0,
            denominator: 1,
        }
    }

    pub fn numerator(&self) -> i64 {
        self.numerator
    }

    pub fn denominator(&self) -> i64 {
        self.denominator
    }

    pub fn sin(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl TryFrom<(i64, i64)> for RationalAngle {
    type Error = Error;

    fn try_from((a, b): (i64, i64)) -> Result<Self> {
        Self::new(a, b)
    }
}

impl From<RationalAngle> for (i64, i64) {
    fn from(angle: RationalAngle) -> Self {
        (angle.numerator, angle.denominator)
    }
}

impl fmt::Display for RationalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Momentum lattice and truncation of the composite space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub angle: RationalAngle,
    pub n_max: usize,
    pub cut_plus: usize,
    pub cut_minus: usize,
    /// Lattice spacing in units of ħk as a reduced fraction `(num, den)`.
    momentum_quantum: (i64, i64),
}

/// Momentum kicks of the three plane-wave factors of the Hamiltonian, in
/// lattice units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kicks {
    /// `e^{ikx(1 − sin φ)}`, attached to `a₊`.
    pub pump_plus: i64,
    /// `e^{−ikx(1 + sin φ)}`, attached to `a₋` (the kick is `−pump_minus`).
    pub pump_minus: i64,
    /// `e^{2ikx}`, attached to `a₋†a₊`.
    pub intermode: i64,
}

impl Kicks {
    pub fn as_array(&self) -> [i64; 3] {
        [self.pump_plus, self.pump_minus, self.intermode]
    }
}

impl LatticeSpec {
    pub fn angle(&self) -> RationalAngle {
        self.angle
    }

    pub fn momentum_quantum(&self) -> (i64, i64) {
        self.momentum_quantum
    }

    pub fn momentum_quantum_f64(&self) -> f64 {
        self.momentum_quantum.0 as f64 / self.momentum_quantum.1 as f64
    }

    pub fn kicks(&self) -> Kicks {
        let (a, b) = (self.angle.numerator, self.angle.denominator);
        let g = gcd(gcd(b - a, b + a), 2 * b);
        Kicks {
            pump_plus: (b - a) / g,
            pump_minus: (b + a) / g,
            intermode: 2 * b / g,
        }
    }

    /// Length of the unit cell in units of 1/k; divide by 2π for units of λ.
    pub fn cell_length(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.momentum_quantum_f64()
    }

    pub fn atom_dim(&self) -> usize {
        2 * self.n_max + 1
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.atom_dim(), self.cut_plus + 1, self.cut_minus + 1]
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    /// Flat index of `|n, n₊, n₋⟩`; `None` outside the truncation.
    pub fn index(&self, n: i64, n_plus: usize, n_minus: usize) -> Option<usize> {
        if n.unsigned_abs() as usize > self.n_max || n_plus > self.cut_plus || n_minus > self.cut_minus
        {
            return None;
        }
        let a = (n + self.n_max as i64) as usize;
        Some((a * (self.cut_plus + 1) + n_plus) * (self.cut_minus + 1) + n_minus)
    }

    /// Inverse of [`LatticeSpec::index`].
    pub fn quantum_numbers(&self, index: usize) -> (i64, usize, usize) {
        let n_minus = index % (self.cut_minus + 1);
        let rest = index / (self.cut_minus + 1);
        let n_plus = rest % (self.cut_plus + 1);
        let a = rest / (self.cut_plus + 1);
        (a as i64 - self.n_max as i64, n_plus, n_minus)
    }

    /// Momentum of lattice site `n` in units of ħk.
    pub fn momentum(&self, n: i64) -> f64 {
        n as f64 * self.momentum_quantum_f64()
    }
}

/// Builds the lattice implied by the rational pump angle.
pub fn make_lattice(
    angle: RationalAngle,
    n_max: usize,
    cut_plus: usize,
    cut_minus: usize,
) -> Result<LatticeSpec> {
    let angle = RationalAngle::new(angle.numerator, angle.denominator)?;
    let (a, b) = (angle.numerator, angle.denominator);
    let g = gcd(gcd(b - a, b + a), 2 * b);
    let q = (g / gcd(g, b), b / gcd(g, b));
    let spec = LatticeSpec {
        angle,
        n_max,
        cut_plus,
        cut_minus,
        momentum_quantum: q,
    };
    // A kick wider than the whole ladder would truncate its operator to zero.
    let largest = spec.kicks().as_array().into_iter().max().unwrap_or(0);
    if largest > 2 * n_max as i64 {
        return Err(Error::InvalidLattice(format!(
            "ladder of half-width {n_max} cannot hold a kick of {largest} lattice units"
        )));
    }
    Ok(spec)
}

/// Square complex sparse matrix in compressed-row form with subsystem
/// dimension metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dims: Vec<usize>,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl Operator {
    /// Assembles an operator from `(row, col, value)` triplets. Duplicates are
    /// summed and exact zeros dropped; the result is independent of triplet
    /// order up to floating-point summation of duplicates.
    pub fn from_triplets(dims: Vec<usize>, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        let n: usize = dims.iter().product();
        triplets.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut indptr = vec![0; n + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside dimension {n}");
            if rows.last() == Some(&r) && indices.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                indices.push(c);
                values.push(v);
            }
        }
        let mut keep_idx = Vec::with_capacity(indices.len());
        let mut keep_val = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(indices).zip(values) {
            if v != Complex64::new(0.0, 0.0) {
                indptr[r + 1] += 1;
                keep_idx.push(c);
                keep_val.push(v);
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Self {
            dims,
            indptr,
            indices: keep_idx,
            values: keep_val,
        }
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        Self::diagonal(dims, &vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        Self::from_triplets(dims, Vec::new())
    }

    pub fn diagonal(dims: Vec<usize>, diag: &[Complex64]) -> Self {
        let triplets = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(dims, triplets)
    }

    pub fn from_dense(dims: Vec<usize>, m: &DMatrix<Complex64>) -> Self {
        let mut triplets = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != Complex64::new(0.0, 0.0) {
                    triplets.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(dims, triplets)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over stored `(row, col, value)` entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    /// Entries of row `r` as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = &self.indices[self.indptr[r]..self.indptr[r + 1]];
        match span.binary_search(&c) {
            Ok(k) => self.values[self.indptr[r] + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn adjoint(&self) -> Self {
        let triplets = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.dims.clone(), triplets)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.prune()
    }

    fn prune(self) -> Self {
        let triplets = self.iter().collect();
        Self::from_triplets(self.dims, triplets)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let triplets = self.iter().chain(other.iter()).collect();
        Ok(Self::from_triplets(self.dims.clone(), triplets))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let mut triplets = Vec::new();
        for (r, k, a) in self.iter() {
            for (c, b) in other.row(k) {
                triplets.push((r, c, a * b));
            }
        }
        Ok(Self::from_triplets(self.dims.clone(), triplets))
    }

    /// Sparse × dense product.
    pub fn apply(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert_eq!(m.nrows(), self.dim());
        let mut out = DMatrix::zeros(self.dim(), m.ncols());
        for c in 0..m.ncols() {
            let col = m.column(c);
            for r in 0..self.dim() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, v) in self.row(r) {
                    acc += v * col[k];
                }
                out[(r, c)] = acc;
            }
        }
        out
    }

    pub fn apply_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim())
            .map(|r| self.row(r).map(|(k, a)| a * v[k]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// `max |A − A†|` over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        self.iter()
            .chain(self.adjoint().iter())
            .map(|(r, c, _)| (self.get(r, c) - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter()
            .chain(other.iter())
            .map(|(r, c, _)| (self.get(r, c) - other.get(r, c)).norm())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        Ok(())
    }
}

/// Kronecker product in the given subsystem order.
pub fn tensor(ops: &[Operator]) -> Operator {
    let mut iter = ops.iter();
    let Some(first) = iter.next() else {
        return Operator::identity(Vec::new());
    };
    iter.fold(first.clone(), |acc, op| {
        let n2 = op.dim();
        let mut dims = acc.dims.clone();
        dims.extend_from_slice(&op.dims);
        let mut triplets = Vec::with_capacity(acc.nnz() * op.nnz());
        for (r1, c1, a) in acc.iter() {
            for (r2, c2, b) in op.iter() {
                triplets.push((r1 * n2 + r2, c1 * n2 + c2, a * b));
            }
        }
        Operator::from_triplets(dims, triplets)
    })
}

/// Lowering operator on a Fock space truncated at `cutoff` photons.
pub fn annihilation(cutoff: usize) -> Operator {
    let triplets = (1..=cutoff)
        .map(|n| (n - 1, n, Complex64::new((n as f64).sqrt(), 0.0)))
        .collect();
    Operator::from_triplets(vec![cutoff + 1], triplets)
}

/// `|n⟩ → |n + steps⟩` on the atom momentum ladder; states pushed past the
/// cutoff are dropped.
pub fn momentum_shift(spec: &LatticeSpec, steps: i64) -> Result<Operator> {
    let d = spec.atom_dim();
    if steps.unsigned_abs() as usize > 2 * spec.n_max {
        return Err(Error::InvalidLattice(format!(
            "shift by {steps} exceeds the ladder width {}",
            2 * spec.n_max
        )));
    }
    let triplets = (0..d as i64)
        .filter_map(|from| {
            let to = from + steps;
            (0..d as i64)
                .contains(&to)
                .then(|| (to as usize, from as usize, Complex64::new(1.0, 0.0)))
        })
        .collect();
    Ok(Operator::from_triplets(vec![d], triplets))
}

/// Embeds single-subsystem operators into the composite `(atom, +, −)` space.
pub struct Embedding<'a> {
    spec: &'a LatticeSpec,
}

impl<'a> Embedding<'a> {
    pub fn new(spec: &'a LatticeSpec) -> Self {
        Self { spec }
    }

    pub fn atom(&self, op: &Operator) -> Operator {
        tensor(&[
            op.clone(),
            Operator::identity(vec![self.spec.cut_plus + 1]),
            Operator::identity(vec![self.spec.cut_minus + 1]),
        ])
    }

    pub fn a_plus(&self) -> Operator {
        tensor(&[
            Operator::identity(vec![self.spec.atom_dim()]),
            annihilation(self.spec.cut_plus),
            Operator::identity(vec![self.spec.cut_minus + 1]),
        ])
    }

    pub fn a_minus(&self) -> Operator {
        tensor(&[
            Operator::identity(vec![self.spec.atom_dim()]),
            Operator::identity(vec![self.spec.cut_plus + 1]),
            annihilation(self.spec.cut_minus),
        ])
    }

    pub fn identity(&self) -> Operator {
        Operator::identity(self.spec.dims())
    }
}

/// Dense density matrix on a composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    dims: Vec<usize>,
    data: DMatrix<Complex64>,
}

impl DensityState {
    pub fn new(dims: Vec<usize>, data: DMatrix<Complex64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if data.nrows() != n || data.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: vec![n, n],
                found: vec![data.nrows(), data.ncols()],
            });
        }
        Ok(Self { dims, data })
    }

    pub fn pure(dims: Vec<usize>, psi: &[Complex64]) -> Result<Self> {
        let n: usize = dims.iter().product();
        if psi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: vec![n],
                found: vec![psi.len()],
            });
        }
        let data = DMatrix::from_fn(n, n, |r, c| psi[r] * psi[c].conj());
        Ok(Self { dims, data })
    }

    pub fn basis(dims: Vec<usize>, index: usize) -> Self {
        let n: usize = dims.iter().product();
        let mut data = DMatrix::zeros(n, n);
        data[(index, index)] = Complex64::new(1.0, 0.0);
        Self { dims, data }
    }

    /// Zero-momentum atom with both modes in vacuum.
    pub fn ground(spec: &LatticeSpec) -> Self {
        Self::basis(spec.dims(), spec.index(0, 0, 0).expect("n = 0 is always inside"))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut err: f64 = 0.0;
        for c in 0..n {
            for r in 0..=c {
                err = err.max((self.data[(r, c)] - self.data[(c, r)].conj()).norm());
            }
        }
        err
    }

    pub fn symmetrize(&mut self) {
        let adj = self.data.adjoint();
        self.data = (&self.data + adj) * Complex64::new(0.5, 0.0);
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.data)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// `Tr(ρ A)`.
    pub fn expect(&self, op: &Operator) -> Complex64 {
        op.iter().map(|(r, c, v)| v * self.data[(c, r)]).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.data - &other.data)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Trace distance ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let diff = &self.data - &other.data;
        0.5 * linalg::hermitian_eigenvalues(&diff)
            .into_iter()
            .map(f64::abs)
            .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn lattice_half_angle() {
        let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 8, 4, 4).unwrap();
        assert_eq!(spec.momentum_quantum(), (1, 2));
        assert_eq!(spec.kicks().as_array(), [1, 3, 4]);
        let cell_in_lambda = spec.cell_length() / (2.0 * std::f64::consts::PI);
        assert!((cell_in_lambda - 2.0).abs() < 1e-15);
        assert_eq!(spec.dims(), vec![17, 5, 5]);
        assert_eq!(spec.dim(), 425);
    }

    #[test]
    fn lattice_perpendicular() {
        let spec = make_lattice(RationalAngle::perpendicular(), 8, 2, 2).unwrap();
        assert_eq!(spec.momentum_quantum(), (1, 1));
        assert_eq!(spec.kicks().as_array(), [1, 1, 2]);
        let cell_in_lambda = spec.cell_length() / (2.0 * std::f64::consts::PI);
        assert!((cell_in_lambda - 1.0).abs() < 1e-15);
    }

    /// Smallest spacing q (scanned over fractions with small denominators) such
    /// that every kick wavenumber is an integer multiple of q.
    fn brute_force_quantum(sin_num: i64, sin_den: i64) -> (i64, i64) {
        let kicks = [sin_den - sin_num, sin_den + sin_num, 2 * sin_den]; // in units of k/sin_den
        let mut best: Option<(i64, i64)> = None;
        for den in 1..=24i64 {
            for num in 1..=48i64 {
                // q = num/den; kick_i/sin_den divisible by q  <=> kick_i*den divisible by num*sin_den
                if kicks.iter().all(|&kk| (kk * den) % (num * sin_den) == 0) {
                    let better = match best {
                        None => true,
                        Some((bn, bd)) => num * bd > bn * den,
                    };
                    if better {
                        best = Some((num, den));
                    }
                }
            }
        }
        let (n, d) = best.unwrap();
        let g = gcd(n, d);
        (n / g, d / g)
    }

    #[test]
    fn lattice_third_angle_matches_commensurability_scan() {
        let spec = make_lattice(RationalAngle::new(1, 3).unwrap(), 12, 1, 1).unwrap();
        assert_eq!(spec.momentum_quantum(), (2, 3));
        assert_eq!(spec.kicks().as_array(), [1, 2, 3]);
        assert_eq!(brute_force_quantum(1, 3), (2, 3));
        assert_eq!(brute_force_quantum(1, 2), (1, 2));
        assert_eq!(brute_force_quantum(0, 1), (1, 1));
        for (a, b) in [(2, 5), (-1, 2), (3, 7), (1, 1), (-3, 4)] {
            let spec = make_lattice(RationalAngle::new(a, b).unwrap(), 20, 0, 0).unwrap();
            assert_eq!(spec.momentum_quantum(), brute_force_quantum(a, b), "sin φ = {a}/{b}");
        }
    }

    #[test]
    fn lattice_rejects_bad_input() {
        assert!(RationalAngle::new(3, 2).is_err());
        assert!(RationalAngle::new(1, 0).is_err());
        let half = RationalAngle::new(1, 2).unwrap();
        assert!(make_lattice(half, 1, 1, 1).is_err());
        assert!(make_lattice(half, 2, 1, 1).is_ok());
        assert!(make_lattice(RationalAngle::perpendicular(), 1, 1, 1).is_ok());
        assert!(make_lattice(RationalAngle::perpendicular(), 0, 1, 1).is_err());
    }

    #[test]
    fn angle_is_reduced() {
        let a = RationalAngle::new(-2, 4).unwrap();
        assert_eq!((a.numerator(), a.denominator()), (-1, 2));
        let b = RationalAngle::new(2, -4).unwrap();
        assert_eq!((b.numerator(), b.denominator()), (-1, 2));
    }

    #[test]
    fn shift_zero_is_identity_and_adjoint_reverses() {
        let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 8, 0, 0).unwrap();
        let id = momentum_shift(&spec, 0).unwrap();
        assert_eq!(id, Operator::identity(vec![17]));
        let up = momentum_shift(&spec, 4).unwrap();
        assert_eq!(up.adjoint(), momentum_shift(&spec, -4).unwrap());
        assert!(momentum_shift(&spec, 17).is_err());
    }

    #[test]
    fn shift_matches_position_grid_plane_wave() {
        // e^{ikx/2} sampled on a 256-point grid of the 2λ cell, projected onto
        // the plane waves e^{i n q x}/√L by an explicit DFT.
        use rustfft::FftPlanner;
        let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 8, 0, 0).unwrap();
        let shift = momentum_shift(&spec, 1).unwrap();
        let ng = 256;
        let l = spec.cell_length();
        let q = spec.momentum_quantum_f64();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(ng);
        for m in -8i64..=8 {
            // (e^{ikx/2} · plane wave m) on the grid, then FFT gives coefficients.
            let mut buf: Vec<Complex64> = (0..ng)
                .map(|j| {
                    let x = l * j as f64 / ng as f64;
                    Complex64::from_polar(1.0, 0.5 * x) * Complex64::from_polar(1.0, m as f64 * q * x)
                })
                .collect();
            fft.process(&mut buf);
            for n in -8i64..=8 {
                let bin = n.rem_euclid(ng as i64) as usize;
                let oracle = buf[bin] / ng as f64;
                let got = shift.get((n + 8) as usize, (m + 8) as usize);
                assert!((oracle - got).norm() < 1e-10, "({n},{m}): {oracle} vs {got}");
            }
        }
    }

    #[test]
    fn tensor_dims_and_identity() {
        let i2 = Operator::identity(vec![2]);
        let i3 = Operator::identity(vec![3]);
        assert_eq!(tensor(&[i2, i3]), Operator::identity(vec![2, 3]));
        let big = tensor(&[
            Operator::identity(vec![17]),
            Operator::identity(vec![5]),
            Operator::identity(vec![5]),
        ]);
        assert_eq!(big.dims(), &[17, 5, 5]);
        assert_eq!(big.dim(), 425);
        assert_eq!(big.trace(), c(425.0));
    }

    #[test]
    fn tensor_acts_on_first_factor() {
        let sigma = Operator::from_triplets(vec![2], vec![(0, 1, c(1.0)), (1, 0, c(1.0))]);
        let op = tensor(&[sigma.clone(), Operator::identity(vec![3])]);
        let u = [c(0.6), c(0.8)];
        let v = [c(0.1), Complex64::new(0.0, 0.3), c(-0.5)];
        let prod: Vec<_> = u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        let got = op.apply_vec(&prod);
        let su = sigma.apply_vec(&u);
        let want: Vec<_> = su.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-15);
        }
    }

    #[test]
    fn annihilation_basics() {
        let a = annihilation(1);
        assert_eq!(a.apply_vec(&[c(0.0), c(1.0)]), vec![c(1.0), c(0.0)]);
        assert_eq!(a.apply_vec(&[c(1.0), c(0.0)]), vec![c(0.0), c(0.0)]);

        let a = annihilation(6);
        let ad = a.adjoint();
        let num = ad.matmul(&a).unwrap();
        for n in 0..=6 {
            assert!((num.get(n, n) - c(n as f64)).norm() < 1e-14);
        }
        let comm = a.matmul(&ad).unwrap().sub(&num).unwrap();
        for n in 0..6 {
            assert!((comm.get(n, n) - c(1.0)).norm() < 1e-14);
        }
        assert!((comm.get(6, 6) - c(-6.0)).norm() < 1e-14);
    }

    #[test]
    fn coherent_state_eigenvalue() {
        let alpha = Complex64::new(0.7, -0.4);
        let cutoff = 30;
        let mut psi = Vec::with_capacity(cutoff + 1);
        let mut term = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 0..=cutoff {
            psi.push(term);
            term = term * alpha / ((n + 1) as f64).sqrt();
        }
        let a_psi = annihilation(cutoff).apply_vec(&psi);
        let mean: Complex64 = psi.iter().zip(&a_psi).map(|(p, q)| p.conj() * q).sum();
        assert!((mean - alpha).norm() < 1e-6);
    }

    #[test]
    fn double_adjoint_is_bitwise_identity() {
        let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 4, 2, 2).unwrap();
        let emb = Embedding::new(&spec);
        let op = emb
            .a_plus()
            .matmul(&emb.atom(&momentum_shift(&spec, 3).unwrap()))
            .unwrap()
            .scale(Complex64::new(0.3, -1.7));
        assert_eq!(op.adjoint().adjoint(), op);
    }

    #[test]
    fn index_roundtrip() {
        let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 4, 2, 3).unwrap();
        for i in 0..spec.dim() {
            let (n, p, m) = spec.quantum_numbers(i);
            assert_eq!(spec.index(n, p, m), Some(i));
        }
        assert_eq!(spec.index(5, 0, 0), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn shifts_compose_away_from_boundary(m in -4i64..=4, n in -4i64..=4) {
                let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 10, 0, 0).unwrap();
                let lhs = momentum_shift(&spec, m).unwrap().matmul(&momentum_shift(&spec, n).unwrap()).unwrap();
                let rhs = momentum_shift(&spec, m + n).unwrap();
                let margin = (m.abs() + n.abs()) as usize;
                let d = spec.atom_dim();
                for r in margin..d - margin {
                    for col in margin..d - margin {
                        prop_assert_eq!(lhs.get(r, col), rhs.get(r, col));
                    }
                }
            }

            #[test]
            fn builders_are_deterministic(a in -3i64..=3, nmax in 6usize..10, cp in 0usize..4) {
                let angle = RationalAngle::new(a, 3).unwrap();
                let s1 = make_lattice(angle, nmax, cp, cp).unwrap();
                let s2 = make_lattice(angle, nmax, cp, cp).unwrap();
                let e1 = Embedding::new(&s1);
                let e2 = Embedding::new(&s2);
                prop_assert_eq!(e1.a_plus(), e2.a_plus());
                prop_assert_eq!(e1.identity().trace(), c(s1.dim() as f64));
            }
        }
    }
}
