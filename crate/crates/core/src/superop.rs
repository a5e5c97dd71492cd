//! Sparse superoperators acting on column-major vectorized density matrices.
//!
//! `vec(ρ)[i + j·d] = ρ_ij`, so `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::fock::is_zero;
use crate::scalar::{Real, C};

/// Dense-output guard on the superoperator dimension `d²`.
pub const DEFAULT_DENSE_LIMIT: usize = 10_000;

/// Compressed-row sparse matrix on the `d²`-dimensional Liouville space.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator<T: Real> {
    hilbert_dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C<T>>,
}

/// Accumulates triplets; duplicate positions are summed.
#[derive(Debug, Clone)]
pub struct SuperopBuilder<T: Real> {
    hilbert_dim: usize,
    entries: BTreeMap<(usize, usize), C<T>>,
}

pub(crate) fn nonzeros<T: Real>(m: &DMatrix<C<T>>) -> Vec<(usize, usize, C<T>)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !is_zero(z) {
                out.push((i, j, z));
            }
        }
    }
    out
}

impl<T: Real> SuperopBuilder<T> {
    pub fn new(hilbert_dim: usize) -> Self {
        Self {
            hilbert_dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, v: C<T>) {
        if is_zero(v) {
            return;
        }
        *self
            .entries
            .entry((row, col))
            .or_insert_with(|| C::new(T::zero(), T::zero())) += v;
    }

    /// Adds `coef · (Bᵀ ⊗ A)`, the matrix of `ρ ↦ coef · A ρ B`.
    pub fn add_sandwich(&mut self, coef: C<T>, a: &DMatrix<C<T>>, b: &DMatrix<C<T>>) {
        let d = self.hilbert_dim;
        let a_nz = nonzeros(a);
        let b_nz = nonzeros(b);
        // (Bᵀ)_{pq} = B_{qp}
        for &(q, p, bv) in &b_nz {
            for &(r, s, av) in &a_nz {
                self.push(p * d + r, q * d + s, coef * bv * av);
            }
        }
    }

    /// Adds `coef · (I ⊗ A)`, i.e. `ρ ↦ coef · A ρ`.
    pub fn add_left(&mut self, coef: C<T>, a: &DMatrix<C<T>>) {
        let d = self.hilbert_dim;
        let a_nz = nonzeros(a);
        for p in 0..d {
            for &(r, s, av) in &a_nz {
                self.push(p * d + r, p * d + s, coef * av);
            }
        }
    }

    /// Adds `coef · (Bᵀ ⊗ I)`, i.e. `ρ ↦ coef · ρ B`.
    pub fn add_right(&mut self, coef: C<T>, b: &DMatrix<C<T>>) {
        let d = self.hilbert_dim;
        let b_nz = nonzeros(b);
        for &(q, p, bv) in &b_nz {
            for r in 0..d {
                self.push(p * d + r, q * d + r, coef * bv);
            }
        }
    }

    /// Adds the dissipator `rate · (L ρ L† − ½{L†L, ρ})`.
    pub fn add_dissipator(&mut self, rate: T, jump: &DMatrix<C<T>>) {
        if rate == T::zero() {
            return;
        }
        let g = C::new(rate, T::zero());
        let half = C::new(rate * T::lit(-0.5), T::zero());
        let ldl = jump.adjoint() * jump;
        self.add_sandwich(g, jump, &jump.adjoint());
        self.add_left(half, &ldl);
        self.add_right(half, &ldl);
    }

    /// Adds `−i[H, ρ]`.
    pub fn add_hamiltonian(&mut self, h: &DMatrix<C<T>>) {
        let mi = C::new(T::zero(), -T::one());
        self.add_left(mi, h);
        self.add_right(-mi, h);
    }

    pub fn build(self) -> Superoperator<T> {
        let n = self.hilbert_dim * self.hilbert_dim;
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals = Vec::with_capacity(self.entries.len());
        for (&(r, c), &v) in &self.entries {
            if is_zero(v) {
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Superoperator {
            hilbert_dim: self.hilbert_dim,
            row_ptr,
            cols,
            vals,
        }
    }
}

impl<T: Real> Superoperator<T> {
    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    /// Liouville-space dimension `d²`.
    pub fn size(&self) -> usize {
        self.hilbert_dim * self.hilbert_dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C<T>)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    /// `out = L x`.
    pub fn apply(&self, x: &[C<T>], out: &mut [C<T>]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C::new(T::zero(), T::zero());
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            *o = acc;
        }
    }

    pub fn apply_matrix(&self, rho: &DMatrix<C<T>>) -> DMatrix<C<T>> {
        let d = self.hilbert_dim;
        let mut out = DMatrix::zeros(d, d);
        self.apply(rho.as_slice(), out.as_mut_slice());
        out
    }

    /// Dense copy; refused when `d²` exceeds `limit`.
    pub fn to_dense(&self, limit: usize) -> Result<DMatrix<C<T>>> {
        let n = self.size();
        if n > limit {
            return Err(Error::DimensionOverflow { dim: n, limit });
        }
        Ok(self.block(&(0..n).collect::<Vec<_>>()))
    }

    /// Dense sub-block on the given (sorted) index set; rows and columns share it.
    pub fn block(&self, idx: &[usize]) -> DMatrix<C<T>> {
        let mut pos = vec![usize::MAX; self.size()];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let mut m = DMatrix::zeros(idx.len(), idx.len());
        for (k, &r) in idx.iter().enumerate() {
            for (c, v) in self.row(r) {
                let p = pos[c];
                if p != usize::MAX {
                    m[(k, p)] = v;
                }
            }
        }
        m
    }

    /// Sparse restriction to an index set closed under the sparsity pattern.
    pub fn restrict(&self, idx: &[usize]) -> SparseBlock<T> {
        let mut pos = vec![usize::MAX; self.size()];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let mut row_ptr = Vec::with_capacity(idx.len() + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for &r in idx {
            for (c, v) in self.row(r) {
                let p = pos[c];
                if p != usize::MAX {
                    cols.push(p);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseBlock {
            row_ptr,
            cols,
            vals,
        }
    }

    /// Connected components of the (symmetrized) sparsity graph, each sorted,
    /// ordered by smallest member. The operator is block diagonal on these sets.
    pub fn sectors(&self) -> Vec<Vec<usize>> {
        let n = self.size();
        let mut uf = UnionFind::new(n);
        for r in 0..n {
            for (c, _) in self.row(r) {
                uf.union(r, c);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            groups.entry(uf.find(i)).or_default().push(i);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort_by_key(|g| g[0]);
        out
    }

    /// Union of the sectors that touch any of `support`.
    pub fn closure(&self, support: &[usize]) -> Vec<usize> {
        let sectors = self.sectors();
        let mut member = vec![usize::MAX; self.size()];
        for (s, g) in sectors.iter().enumerate() {
            for &i in g {
                member[i] = s;
            }
        }
        let mut take = vec![false; sectors.len()];
        for &i in support {
            take[member[i]] = true;
        }
        let mut idx: Vec<usize> = sectors
            .iter()
            .zip(take)
            .filter(|(_, t)| *t)
            .flat_map(|(g, _)| g.iter().copied())
            .collect();
        idx.sort_unstable();
        idx
    }

    /// Largest `|L_ii|` over the diagonal.
    pub fn max_diagonal(&self) -> T {
        let mut m = T::zero();
        for r in 0..self.size() {
            for (c, v) in self.row(r) {
                if c == r {
                    m = m.max(v.modulus());
                }
            }
        }
        m
    }

    /// Sum of two superoperators on the same space.
    pub fn sum(&self, other: &Self) -> Self {
        assert_eq!(self.hilbert_dim, other.hilbert_dim);
        let mut b = SuperopBuilder::new(self.hilbert_dim);
        for op in [self, other] {
            for r in 0..op.size() {
                for (c, v) in op.row(r) {
                    b.push(r, c, v);
                }
            }
        }
        b.build()
    }
}

/// Sparse matrix on a restricted index set (local numbering).
#[derive(Debug, Clone)]
pub struct SparseBlock<T: Real> {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C<T>>,
}

impl<T: Real> SparseBlock<T> {
    pub fn len(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn apply(&self, x: &[C<T>], out: &mut [C<T>]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C::new(T::zero(), T::zero());
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<C<T>> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for r in 0..n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] = self.vals[k];
            }
        }
        m
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    fn random_matrix(d: usize, seed: u64) -> DMatrix<C<f64>> {
        let mut s = seed;
        DMatrix::from_fn(d, d, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            C::new(a, b)
        })
    }

    #[test]
    fn sandwich_matches_matrix_product() {
        let d = 4;
        let a = random_matrix(d, 1);
        let b = random_matrix(d, 2);
        let rho = random_matrix(d, 3);
        let mut sb = SuperopBuilder::new(d);
        sb.add_sandwich(cx(0.5, 0.25), &a, &b);
        sb.add_left(cx(1.0, 0.0), &b);
        sb.add_right(cx(0.0, 2.0), &a);
        let l = sb.build();
        let got = l.apply_matrix(&rho);
        let want = &a * &rho * &b * cx::<f64>(0.5, 0.25) + &b * &rho + &rho * &a * cx::<f64>(0.0, 2.0);
        assert!((got - want).camax() < 1e-13);
    }

    #[test]
    fn sectors_of_block_diagonal_pattern() {
        let mut b = SuperopBuilder::<f64>::new(2);
        b.push(0, 3, cx(1.0, 0.0));
        b.push(1, 1, cx(1.0, 0.0));
        let l = b.build();
        assert_eq!(l.sectors(), vec![vec![0, 3], vec![1], vec![2]]);
        assert_eq!(l.closure(&[3]), vec![0, 3]);
        let blk = l.block(&[0, 3]);
        assert_eq!(blk[(0, 1)].re, 1.0);
        assert!(l.to_dense(3).is_err());
    }
}
