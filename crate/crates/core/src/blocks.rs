//! Block-sparse representation of the Lindblad generator.
//!
//! The basis is partitioned so that the Hamiltonian and every `J†J` are block
//! diagonal, every jump maps a block into a single block, and the initial
//! state is block diagonal. Under these conditions the state stays block
//! diagonal for all times and only the diagonal blocks need to be stored.
//! For the ring cavity the blocks are the sectors of the conserved charge
//! `p + (1 − sin φ) n₊ − (1 + sin φ) n₋`; the partition is discovered from the
//! sparsity patterns rather than assumed.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use num_complex::Complex64;

use crate::hilbert::{DensityState, Operator};
use crate::linalg::UnionFind;
use crate::model::Jump;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

struct Transfer {
    target: usize,
    rate: f64,
    /// Jump restricted to `target ← source`, shape `b_target × b_source`.
    op: DMatrix<Complex64>,
}

/// Precomputed Schur factors `(Q, T, pivot floor)` of the block generators.
pub struct BlockSylvester {
    factors: Vec<(DMatrix<Complex64>, DMatrix<Complex64>, f64)>,
}

pub struct BlockLiouvillian {
    dims: Vec<usize>,
    blocks: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    /// `−iH − ½ Σ γ J†J` restricted to each block.
    generator: Vec<DMatrix<Complex64>>,
    hamiltonian: Vec<DMatrix<Complex64>>,
    /// Transfers out of each source block.
    transfers: Vec<Vec<Transfer>>,
    len: usize,
}

fn merge_pattern(uf: &mut UnionFind, op: &Operator) {
    for (r, c, _) in op.iter() {
        uf.union(r, c);
    }
}

/// Coarsest-needed partition compatible with `h`, `jumps` and the optional
/// state pattern.
pub fn partition(h: &Operator, jumps: &[Jump], state: Option<&DMatrix<Complex64>>) -> Vec<Vec<usize>> {
    let n = h.dim();
    let mut uf = UnionFind::new(n);
    merge_pattern(&mut uf, h);
    let adjoints: Vec<Operator> = jumps.iter().map(|j| j.op.adjoint()).collect();
    for (j, jd) in jumps.iter().zip(&adjoints) {
        merge_pattern(&mut uf, &jd.matmul(&j.op).expect("jump dims"));
    }
    if let Some(m) = state {
        for c in 0..n {
            for r in 0..n {
                if r != c && m[(r, c)] != ZERO {
                    uf.union(r, c);
                }
            }
        }
    }
    // Images of one block under a jump must share a block. Column c of J is
    // row c of J†.
    loop {
        let mut changed = false;
        for jd in &adjoints {
            let mut first_target: Vec<Option<usize>> = vec![None; n];
            for c in 0..n {
                let root = uf.find(c);
                for (r, _) in jd.row(c) {
                    match first_target[root] {
                        None => first_target[root] = Some(r),
                        Some(t) => changed |= uf.union(t, r),
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    uf.components()
}

impl BlockLiouvillian {
    pub fn new(h: &Operator, jumps: &[Jump], initial: &DensityState) -> Self {
        let blocks = partition(h, jumps, Some(initial.matrix()));
        Self::with_blocks(h, jumps, blocks)
    }

    pub fn with_blocks(h: &Operator, jumps: &[Jump], blocks: Vec<Vec<usize>>) -> Self {
        let n = h.dim();
        let mut block_of = vec![(0usize, 0usize); n];
        for (b, idx) in blocks.iter().enumerate() {
            for (local, &g) in idx.iter().enumerate() {
                block_of[g] = (b, local);
            }
        }
        let restrict = |op: &Operator, b: usize| {
            let idx = &blocks[b];
            let mut m = DMatrix::zeros(idx.len(), idx.len());
            for (local, &g) in idx.iter().enumerate() {
                for (c, v) in op.row(g) {
                    let (bc, lc) = block_of[c];
                    debug_assert_eq!(bc, b, "operator not block diagonal");
                    m[(local, lc)] = v;
                }
            }
            m
        };
        let mut damping = Operator::zeros(h.dims().to_vec());
        for j in jumps {
            let jdj = j.op.adjoint().matmul(&j.op).expect("jump dims");
            damping = damping
                .add(&jdj.scale(Complex64::new(0.5 * j.rate, 0.0)))
                .expect("jump dims");
        }
        let mut generator = Vec::with_capacity(blocks.len());
        let mut hamiltonian = Vec::with_capacity(blocks.len());
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut len = 0;
        for b in 0..blocks.len() {
            let hb = restrict(h, b);
            let db = restrict(&damping, b);
            generator.push(&hb * Complex64::new(0.0, -1.0) - db);
            hamiltonian.push(hb);
            offsets.push(len);
            len += blocks[b].len() * blocks[b].len();
        }
        let mut transfers: Vec<Vec<Transfer>> = (0..blocks.len()).map(|_| Vec::new()).collect();
        for j in jumps {
            let jd = j.op.adjoint();
            for (source, idx) in blocks.iter().enumerate() {
                let mut target = None;
                let mut entries = Vec::new();
                for (lc, &c) in idx.iter().enumerate() {
                    for (r, v) in jd.row(c) {
                        let (br, lr) = block_of[r];
                        debug_assert!(target.is_none_or(|t| t == br), "jump splits a block");
                        target = Some(br);
                        entries.push((lr, lc, v.conj()));
                    }
                }
                if let Some(t) = target {
                    let mut op = DMatrix::zeros(blocks[t].len(), idx.len());
                    for (r, c, v) in entries {
                        op[(r, c)] = v;
                    }
                    transfers[source].push(Transfer {
                        target: t,
                        rate: j.rate,
                        op,
                    });
                }
            }
        }
        Self {
            dims: h.dims().to_vec(),
            blocks,
            offsets,
            generator,
            hamiltonian,
            transfers,
            len,
        }
    }

    /// Length of the flattened state.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    fn view<'a>(&self, y: &'a [Complex64], b: usize) -> DMatrixView<'a, Complex64> {
        let d = self.blocks[b].len();
        DMatrixView::from_slice(&y[self.offsets[b]..self.offsets[b] + d * d], d, d)
    }

    /// Gathers the diagonal blocks of a dense state.
    pub fn flatten(&self, rho: &DMatrix<Complex64>) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.len];
        for (b, idx) in self.blocks.iter().enumerate() {
            let d = idx.len();
            let off = self.offsets[b];
            for (lc, &c) in idx.iter().enumerate() {
                for (lr, &r) in idx.iter().enumerate() {
                    out[off + lc * d + lr] = rho[(r, c)];
                }
            }
        }
        out
    }

    pub fn unflatten(&self, y: &[Complex64]) -> DensityState {
        let n: usize = self.dims.iter().product();
        let mut rho = DMatrix::zeros(n, n);
        for (b, idx) in self.blocks.iter().enumerate() {
            let d = idx.len();
            let off = self.offsets[b];
            for (lc, &c) in idx.iter().enumerate() {
                for (lr, &r) in idx.iter().enumerate() {
                    rho[(r, c)] = y[off + lc * d + lr];
                }
            }
        }
        DensityState::new(self.dims.clone(), rho).expect("block dims")
    }

    pub fn trace(&self, y: &[Complex64]) -> Complex64 {
        (0..self.blocks.len())
            .map(|b| self.view(y, b).trace())
            .sum()
    }

    /// `ρ ← (ρ + ρ†)/2` block by block.
    pub fn symmetrize(&self, y: &mut [Complex64]) {
        for b in 0..self.blocks.len() {
            let d = self.blocks[b].len();
            let off = self.offsets[b];
            for c in 0..d {
                for r in 0..=c {
                    let upper = y[off + c * d + r];
                    let lower = y[off + r * d + c];
                    let avg = (upper + lower.conj()) * 0.5;
                    y[off + c * d + r] = avg;
                    y[off + r * d + c] = avg.conj();
                }
            }
        }
    }

    /// `dy = L(y)`.
    pub fn apply(&self, y: &[Complex64], dy: &mut [Complex64]) {
        dy.iter_mut().for_each(|z| *z = ZERO);
        let one = Complex64::new(1.0, 0.0);
        for b in 0..self.blocks.len() {
            let d = self.blocks[b].len();
            let rho = self.view(y, b);
            let g = &self.generator[b];
            let mut out = DMatrixViewMut::from_slice(
                &mut dy[self.offsets[b]..self.offsets[b] + d * d],
                d,
                d,
            );
            // Gρ + ρG†
            out.gemm(one, g, &rho, one);
            out.gemm(one, &rho, &g.adjoint(), one);
        }
        for (source, list) in self.transfers.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            let rho = self.view(y, source);
            for tr in list {
                let d = self.blocks[tr.target].len();
                let off = self.offsets[tr.target];
                let sandwich = &tr.op * rho * tr.op.adjoint();
                let mut out = DMatrixViewMut::from_slice(&mut dy[off..off + d * d], d, d);
                out += sandwich * Complex64::new(tr.rate, 0.0);
            }
        }
    }

    /// Schur factors of every block generator, for [`Self::solve_within`].
    pub fn sylvester(&self) -> BlockSylvester {
        let factors = self
            .generator
            .iter()
            .map(|g| {
                let (q, t) = nalgebra::Schur::new(g.clone()).unpack();
                let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
                (q, t, 1e-12 * scale.max(1.0))
            })
            .collect();
        BlockSylvester { factors }
    }

    /// Solves `Gx + xG† = r` in every block, the part of the generator that
    /// does not move population between blocks (Bartels–Stewart on the
    /// Schur form `G = QTQ†`). Near-singular pivots are floored.
    pub fn solve_within(&self, s: &BlockSylvester, r: &[Complex64], out: &mut [Complex64]) {
        for (b, (q, t, floor)) in s.factors.iter().enumerate() {
            let d = self.blocks[b].len();
            let off = self.offsets[b];
            let c = q.adjoint() * self.view(r, b) * q;
            // T y + y T† = c, columns from the last one backwards.
            let mut y = DMatrix::<Complex64>::zeros(d, d);
            for j in (0..d).rev() {
                let mut rhs = c.column(j).clone_owned();
                for k in j + 1..d {
                    let f = t[(j, k)].conj();
                    if f != ZERO {
                        rhs.axpy(-f, &y.column(k), Complex64::new(1.0, 0.0));
                    }
                }
                let shift = t[(j, j)].conj();
                for i in (0..d).rev() {
                    let mut acc = rhs[i];
                    for k in i + 1..d {
                        acc -= t[(i, k)] * y[(k, j)];
                    }
                    let mut den = t[(i, i)] + shift;
                    if den.norm() < *floor {
                        den = Complex64::new(-*floor, 0.0);
                    }
                    y[(i, j)] = acc / den;
                }
            }
            let x = q * y * q.adjoint();
            out[off..off + d * d].copy_from_slice(x.as_slice());
        }
    }

    /// Nonzero entries `(row, col, value)` of the generator acting on the
    /// flattened state, so that `dy[row] += value · y[col]`.
    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::new();
        for b in 0..self.blocks.len() {
            let d = self.blocks[b].len();
            let off = self.offsets[b];
            let g = &self.generator[b];
            let nonzero: Vec<(usize, usize, Complex64)> = (0..d)
                .flat_map(|r| (0..d).map(move |k| (r, k)))
                .map(|(r, k)| (r, k, g[(r, k)]))
                .filter(|e| e.2 != ZERO)
                .collect();
            for c in 0..d {
                // (Gρ)(r, c) = Σ_k G(r, k) ρ(k, c)
                for &(r, k, v) in &nonzero {
                    out.push((off + c * d + r, off + c * d + k, v));
                }
            }
            for r in 0..d {
                // (ρG†)(r, c) = Σ_k ρ(r, k) conj(G(c, k))
                for &(c, k, v) in &nonzero {
                    out.push((off + c * d + r, off + k * d + r, v.conj()));
                }
            }
        }
        for (source, list) in self.transfers.iter().enumerate() {
            let ds = self.blocks[source].len();
            let off_s = self.offsets[source];
            for tr in list {
                let dt = self.blocks[tr.target].len();
                let off_t = self.offsets[tr.target];
                let entries: Vec<(usize, usize, Complex64)> = (0..dt)
                    .flat_map(|r| (0..ds).map(move |k| (r, k)))
                    .map(|(r, k)| (r, k, tr.op[(r, k)]))
                    .filter(|e| e.2 != ZERO)
                    .collect();
                // (AρA†)(r, c) = Σ A(r, k) ρ(k, l) conj(A(c, l))
                for &(r, k, a) in &entries {
                    for &(c, l, b) in &entries {
                        out.push((off_t + c * dt + r, off_s + l * ds + k, a * b.conj() * tr.rate));
                    }
                }
            }
        }
        out
    }

    /// Flattened positions of the diagonal entries, whose sum is the trace.
    pub fn diagonal_positions(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (b, idx) in self.blocks.iter().enumerate() {
            let d = idx.len();
            out.extend((0..d).map(|r| self.offsets[b] + r * d + r));
        }
        out
    }

    /// `max |L(ρ)|` over all entries.
    pub fn residual(&self, y: &[Complex64]) -> f64 {
        let mut dy = vec![ZERO; self.len];
        self.apply(y, &mut dy);
        dy.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Restriction of the Hamiltonian to block `b`.
    pub fn hamiltonian_block(&self, b: usize) -> &DMatrix<Complex64> {
        &self.hamiltonian[b]
    }

    /// Successor blocks reachable by one jump.
    pub fn jump_targets(&self, b: usize) -> impl Iterator<Item = usize> + '_ {
        self.transfers[b].iter().map(|t| t.target)
    }

    /// Number of closed classes of the block jump graph: sets of blocks that
    /// can be entered but never left. Each supports at least one stationary
    /// state, so a count above one signals a degenerate steady state.
    pub fn closed_classes(&self) -> usize {
        let nb = self.blocks.len();
        // reach[b]: blocks reachable from b (including b).
        let reach: Vec<Vec<bool>> = (0..nb)
            .map(|start| {
                let mut seen = vec![false; nb];
                let mut stack = vec![start];
                seen[start] = true;
                while let Some(b) = stack.pop() {
                    for t in self.jump_targets(b) {
                        if !seen[t] {
                            seen[t] = true;
                            stack.push(t);
                        }
                    }
                }
                seen
            })
            .collect();
        // A block is recurrent if every block it reaches can reach it back.
        let recurrent: Vec<bool> = (0..nb)
            .map(|b| (0..nb).all(|t| !reach[b][t] || reach[t][b]))
            .collect();
        let mut uf = UnionFind::new(nb);
        for b in 0..nb {
            for t in 0..nb {
                if recurrent[b] && recurrent[t] && reach[b][t] {
                    uf.union(b, t);
                }
            }
        }
        let mut roots: Vec<usize> = (0..nb).filter(|&b| recurrent[b]).map(|b| uf.find(b)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{make_lattice, RationalAngle};
    use crate::model::{build_hamiltonian, cavity_jumps, lindblad_rhs, PhysicalParams};

    fn params(eta: f64) -> PhysicalParams {
        PhysicalParams {
            eta,
            u0: -1.0,
            delta_c: -10.0,
            kappa: 10.0,
            angle: RationalAngle::new(1, 2).unwrap(),
        }
    }

    #[test]
    fn blocks_reproduce_dense_generator() {
        let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 5, 3, 3).unwrap();
        let h = build_hamiltonian(&spec, &params(12.0)).unwrap();
        let jumps = cavity_jumps(&spec, 10.0);
        let rho0 = DensityState::ground(&spec);
        let bl = BlockLiouvillian::new(&h, &jumps, &rho0);
        assert!(bl.blocks().len() > 1);
        // Random block-diagonal Hermitian state.
        let mut y: Vec<Complex64> = (0..bl.len())
            .map(|i| Complex64::new(((i * 37) % 11) as f64 - 5.0, ((i * 13) % 7) as f64 - 3.0))
            .collect();
        bl.symmetrize(&mut y);
        let rho = bl.unflatten(&y);
        let dense = lindblad_rhs(&h, &jumps, rho.matrix());
        let mut dy = vec![ZERO; bl.len()];
        bl.apply(&y, &mut dy);
        let blocked = bl.unflatten(&dy);
        let diff = (dense - blocked.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn triplets_reproduce_apply() {
        let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 4, 3, 2).unwrap();
        let h = build_hamiltonian(&spec, &params(7.0)).unwrap();
        let bl = BlockLiouvillian::new(&h, &cavity_jumps(&spec, 10.0), &DensityState::ground(&spec));
        let y: Vec<Complex64> = (0..bl.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut expected = vec![ZERO; bl.len()];
        bl.apply(&y, &mut expected);
        let mut got = vec![ZERO; bl.len()];
        for (r, c, v) in bl.triplets() {
            got[r] += v * y[c];
        }
        let diff = got.iter().zip(&expected).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
        let trace: Complex64 = bl.diagonal_positions().iter().map(|&i| y[i]).sum();
        assert!((trace - bl.trace(&y)).norm() < 1e-12);
    }

    #[test]
    fn sylvester_inverts_within_block_part() {
        let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 4, 3, 2).unwrap();
        let h = build_hamiltonian(&spec, &params(7.0)).unwrap();
        let bl = BlockLiouvillian::new(&h, &cavity_jumps(&spec, 10.0), &DensityState::ground(&spec));
        let x: Vec<Complex64> = (0..bl.len())
            .map(|i| Complex64::new((i as f64 * 0.53).cos(), (i as f64 * 0.29).sin()))
            .collect();
        // r = Gx + xG†, computed from the triplets minus the transfers.
        let mut r = vec![ZERO; bl.len()];
        for b in 0..bl.blocks().len() {
            let d = bl.blocks()[b].len();
            let xb = bl.view(&x, b);
            let g = &bl.generator[b];
            let rb = g * xb + xb * g.adjoint();
            r[bl.offsets[b]..bl.offsets[b] + d * d].copy_from_slice(rb.as_slice());
        }
        let s = bl.sylvester();
        let mut back = vec![ZERO; bl.len()];
        bl.solve_within(&s, &r, &mut back);
        let err = back.iter().zip(&x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn blocks_follow_conserved_charge() {
        let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 5, 3, 3).unwrap();
        let h = build_hamiltonian(&spec, &params(12.0)).unwrap();
        let blocks = partition(&h, &cavity_jumps(&spec, 10.0), None);
        let kicks = spec.kicks();
        for b in &blocks {
            let charges: Vec<i64> = b
                .iter()
                .map(|&i| {
                    let (n, p, m) = spec.quantum_numbers(i);
                    n + kicks.pump_plus * p as i64 - kicks.pump_minus * m as i64
                })
                .collect();
            assert!(charges.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn closed_classes_detect_free_atom_degeneracy() {
        let spec = make_lattice(RationalAngle::new(1, 2).unwrap(), 4, 2, 2).unwrap();
        let h0 = build_hamiltonian(&spec, &params(0.0)).unwrap();
        let jumps = cavity_jumps(&spec, 10.0);
        let free = BlockLiouvillian::with_blocks(&h0, &jumps, partition(&h0, &jumps, None));
        assert!(free.closed_classes() >= spec.atom_dim());
        let h = build_hamiltonian(&spec, &params(12.0)).unwrap();
        let pumped = BlockLiouvillian::with_blocks(&h, &jumps, partition(&h, &jumps, None));
        assert_eq!(pumped.closed_classes(), 1);
    }
}
