//! Dense Hermitian eigenvalue helpers and a restarted GMRES solver.
//!
//! Matrices produced by this crate are usually block diagonal up to a
//! permutation (the dynamics conserves a lattice charge), so eigenvalue
//! problems are split along the connected components of the nonzero pattern
//! before calling the dense solver.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Disjoint-set forest over `0..n`.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true if the two sets were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }

    /// Components as sorted index lists, ordered by their smallest element.
    pub fn components(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(i);
        }
        out
    }
}

/// Connected components of the symmetric nonzero pattern of `m`.
pub fn components(m: &DMatrix<Complex64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut uf = UnionFind::new(n);
    for c in 0..n {
        for r in 0..n {
            if r != c && m[(r, c)] != Complex64::new(0.0, 0.0) {
                uf.union(r, c);
            }
        }
    }
    uf.components()
}

fn submatrix(m: &DMatrix<Complex64>, idx: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Eigenvalues of a Hermitian matrix (unsorted).
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows());
    for comp in components(m) {
        if comp.len() == 1 {
            out.push(m[(comp[0], comp[0])].re);
            continue;
        }
        let sub = submatrix(m, &comp);
        out.extend(sub.symmetric_eigenvalues().iter().copied());
    }
    out
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigh(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    let mut pairs: Vec<(f64, Vec<(usize, Complex64)>)> = Vec::with_capacity(n);
    for comp in components(m) {
        let sub = submatrix(m, &comp);
        let eig = sub.symmetric_eigen();
        for k in 0..comp.len() {
            let v = comp
                .iter()
                .enumerate()
                .map(|(i, &g)| (g, eig.eigenvectors[(i, k)]))
                .collect();
            pairs.push((eig.eigenvalues[k], v));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut vecs = DMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (k, (val, v)) in pairs.into_iter().enumerate() {
        vals.push(val);
        for (g, z) in v {
            vecs[(g, k)] = z;
        }
    }
    (vals, vecs)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Outcome of [`gmres`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresReport {
    /// Final residual 2-norm `‖b − A x‖`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Restarted GMRES with right preconditioning for `A x = b`. `apply(v, out)`
/// computes `out = A v` and `precondition(v, out)` computes `out ≈ A⁻¹ v`.
/// Iterates from the content of `x` until `‖b − A x‖ ≤ tol` or
/// `max_iterations` Arnoldi steps have been taken.
pub fn gmres(
    apply: impl Fn(&[Complex64], &mut [Complex64]),
    precondition: impl Fn(&[Complex64], &mut [Complex64]),
    b: &[Complex64],
    x: &mut [Complex64],
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> GmresReport {
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut ax = vec![zero; n];
    let mut z = vec![zero; n];
    let mut w = vec![zero; n];
    let mut iterations = 0;
    loop {
        apply(x, &mut ax);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        if beta <= tol || iterations >= max_iterations {
            return GmresReport {
                residual: beta,
                iterations,
                converged: beta <= tol,
            };
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|v| v / beta).collect()];
        // Hessenberg columns after Givens rotation, rotations, and the rotated rhs.
        let mut hcols: Vec<Vec<Complex64>> = Vec::new();
        let mut rotations: Vec<(f64, Complex64)> = Vec::new();
        let mut g = vec![Complex64::new(beta, 0.0)];
        for j in 0..restart {
            iterations += 1;
            precondition(&basis[j], &mut z);
            apply(&z, &mut w);
            let mut h = Vec::with_capacity(j + 2);
            for v in &basis {
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                h.push(c);
            }
            let hn = norm(&w);
            h.push(Complex64::new(hn, 0.0));
            for (i, &(c, s)) in rotations.iter().enumerate() {
                let (a, bb) = (h[i], h[i + 1]);
                h[i] = a * c + s * bb;
                h[i + 1] = -s.conj() * a + bb * c;
            }
            let (a, bb) = (h[j], h[j + 1]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if den == 0.0 {
                (1.0, zero)
            } else if a.norm() == 0.0 {
                (0.0, Complex64::new(1.0, 0.0))
            } else {
                let c = a.norm() / den;
                (c, a / a.norm() * bb.conj() / den)
            };
            h[j] = a * c + s * bb;
            h[j + 1] = zero;
            rotations.push((c, s));
            let gj = g[j];
            g[j] = gj * c;
            g.push(-s.conj() * gj);
            hcols.push(h);
            let done = g[j + 1].norm() <= tol || iterations >= max_iterations || hn == 0.0;
            if !done {
                basis.push(w.iter().map(|v| v / hn).collect());
            }
            if done || j + 1 == restart {
                // Back substitution for the update coefficients.
                let m = hcols.len();
                let mut y = vec![zero; m];
                for i in (0..m).rev() {
                    let mut acc = g[i];
                    for k in i + 1..m {
                        acc -= hcols[k][i] * y[k];
                    }
                    y[i] = acc / hcols[i][i];
                }
                let mut update = vec![zero; n];
                for (k, yk) in y.iter().enumerate() {
                    update.iter_mut().zip(&basis[k]).for_each(|(u, v)| *u += yk * v);
                }
                precondition(&update, &mut z);
                x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi += zi);
                break;
            }
        }
    }
}
