//! Truncated bosonic Fock space, optionally tensored with a few-level atom.
//!
//! Composite states are ordered atom-major: basis index `atom * (n_max + 1) + n`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::scalar::{cr, Real, C};

/// Shape of the simulated Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HilbertSpec {
    n_max: usize,
    atom_levels: Option<usize>,
}

impl HilbertSpec {
    /// Field-only space holding Fock states `|0>..|n_max>`.
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::range("n_max", n_max, ">= 1"));
        }
        Ok(Self {
            n_max,
            atom_levels: None,
        })
    }

    /// Atom (2 or 3 levels) tensored with the field.
    pub fn with_atom(n_max: usize, levels: usize) -> Result<Self> {
        let mut spec = Self::new(n_max)?;
        if !(2..=3).contains(&levels) {
            return Err(Error::range("atom_levels", levels, "2 or 3"));
        }
        spec.atom_levels = Some(levels);
        Ok(spec)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn atom_levels(&self) -> Option<usize> {
        self.atom_levels
    }

    pub fn field_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn atom_dim(&self) -> usize {
        self.atom_levels.unwrap_or(1)
    }

    pub fn dim(&self) -> usize {
        self.atom_dim() * self.field_dim()
    }

    /// The field factor of this space.
    pub fn field(&self) -> Self {
        Self {
            n_max: self.n_max,
            atom_levels: None,
        }
    }

    pub fn index(&self, atom: usize, n: usize) -> usize {
        debug_assert!(atom < self.atom_dim() && n <= self.n_max);
        atom * self.field_dim() + n
    }
}

/// Dense complex operator on a truncated space.
#[derive(Clone, PartialEq)]
pub struct Operator<T: Real> {
    matrix: DMatrix<C<T>>,
    label: String,
}

impl<T: Real> fmt::Debug for Operator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operator")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .finish()
    }
}

impl<T: Real> Operator<T> {
    pub fn new(matrix: DMatrix<C<T>>, label: impl Into<String>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        if matrix.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::param("matrix", "non-finite entry"));
        }
        Ok(Self {
            matrix,
            label: label.into(),
        })
    }

    pub fn zeros(dim: usize, label: impl Into<String>) -> Self {
        Self {
            matrix: DMatrix::zeros(dim, dim),
            label: label.into(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            label: "I".into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C<T>> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C<T>> {
        self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            label: format!("{}†", self.label),
        }
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Self {
            matrix: &self.matrix * &rhs.matrix,
            label: format!("{}·{}", self.label, rhs.label),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self {
            matrix: &self.matrix + &rhs.matrix,
            label: format!("{}+{}", self.label, rhs.label),
        }
    }

    pub fn scale(&self, c: C<T>) -> Self {
        Self {
            matrix: &self.matrix * c,
            label: self.label.clone(),
        }
    }

    /// `self ⊗ rhs` with `self` as the slow (outer) index.
    pub fn kron(&self, rhs: &Self) -> Self {
        Self {
            matrix: self.matrix.kronecker(&rhs.matrix),
            label: format!("{}⊗{}", self.label, rhs.label),
        }
    }

    pub fn apply(&self, v: &DVector<C<T>>) -> DVector<C<T>> {
        &self.matrix * v
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> T {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> usize {
        self.matrix.iter().filter(|z| !is_zero(**z)).count()
    }
}

pub(crate) fn is_zero<T: Real>(z: C<T>) -> bool {
    z.re == T::zero() && z.im == T::zero()
}

pub(crate) fn max_abs<T: Real>(m: &DMatrix<C<T>>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

/// Thresholds used when validating a [`DensityMatrix`].
#[derive(Debug, Clone, Copy)]
pub struct StateTolerance {
    pub trace: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

impl Default for StateTolerance {
    fn default() -> Self {
        Self {
            trace: 1e-10,
            hermiticity: 1e-10,
            min_eigenvalue: 1e-8,
        }
    }
}

/// Trace-one, Hermitian, positive semidefinite matrix.
#[derive(Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    matrix: DMatrix<C<T>>,
}

impl<T: Real> fmt::Debug for DensityMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityMatrix")
            .field("dim", &self.dim())
            .finish()
    }
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(matrix: DMatrix<C<T>>) -> Result<Self> {
        Self::new_with(matrix, StateTolerance::default())
    }

    pub fn new_with(matrix: DMatrix<C<T>>, tol: StateTolerance) -> Result<Self> {
        let rho = Self { matrix };
        rho.check(tol)?;
        Ok(rho)
    }

    /// Wraps a matrix without checks; callers guarantee the invariants.
    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<C<T>>) -> Self {
        Self { matrix }
    }

    /// Diagonal state with the given (already normalized) populations.
    pub fn from_populations(pops: &[T]) -> Result<Self> {
        let diag = DVector::from_iterator(pops.len(), pops.iter().map(|&p| cr(p)));
        Self::new(DMatrix::from_diagonal(&diag))
    }

    /// Projector onto a normalized state vector.
    pub fn pure(psi: &DVector<C<T>>) -> Result<Self> {
        Self::new(psi * psi.adjoint())
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let w = T::one() / T::lit(dim as f64);
        Self {
            matrix: DMatrix::identity(dim, dim) * cr(w),
        }
    }

    pub fn check(&self, tol: StateTolerance) -> Result<()> {
        let m = &self.matrix;
        if !m.is_square() {
            return Err(Error::InvalidState("not square".into()));
        }
        if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let tr = self.trace();
        if (tr.re - T::one()).abs() > T::tol(tol.trace) || tr.im.abs() > T::tol(tol.trace) {
            return Err(Error::InvalidState(format!("trace {} + {}i", tr.re, tr.im)));
        }
        let herm = max_abs(&(m - m.adjoint()));
        if herm > T::tol(tol.hermiticity) {
            return Err(Error::InvalidState(format!("hermiticity error {herm}")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -T::tol(tol.min_eigenvalue) {
            return Err(Error::InvalidState(format!("min eigenvalue {min_eig}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C<T>> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C<T>> {
        self.matrix
    }

    pub fn trace(&self) -> C<T> {
        self.matrix.trace()
    }

    /// Diagonal elements `<n|ρ|n>`.
    pub fn populations(&self) -> Vec<T> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn purity(&self) -> T {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.iter().fold(T::zero(), |acc, z| acc + z.modulus_squared())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        let herm = (&self.matrix + self.matrix.adjoint()) * cr(T::lit(0.5));
        let mut ev: Vec<T> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues().first().copied().unwrap_or_else(T::zero)
    }

    /// `Tr(ρ O)`.
    pub fn expectation(&self, op: &Operator<T>) -> C<T> {
        (&self.matrix * op.matrix()).trace()
    }

    /// `½ Tr|ρ − σ|`.
    pub fn trace_distance(&self, other: &Self) -> Result<T> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let diff = &self.matrix - &other.matrix;
        let herm = (&diff + diff.adjoint()) * cr(T::lit(0.5));
        let s = herm
            .symmetric_eigenvalues()
            .iter()
            .fold(T::zero(), |acc, e| acc + e.abs());
        Ok(s * T::lit(0.5))
    }

    /// Partial trace over the atom of an atom ⊗ field state.
    pub fn trace_atom(&self, spec: &HilbertSpec) -> Result<Self> {
        if spec.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: self.dim(),
            });
        }
        let d = spec.field_dim();
        let mut out = DMatrix::zeros(d, d);
        for a in 0..spec.atom_dim() {
            out += self.matrix.view((a * d, a * d), (d, d));
        }
        Ok(Self { matrix: out })
    }
}

fn check_field_index(what: &'static str, n: usize, spec: &HilbertSpec) -> Result<()> {
    if n > spec.n_max() {
        return Err(Error::range(what, n, format!("0..={}", spec.n_max())));
    }
    Ok(())
}

fn lift<T: Real>(field_op: DMatrix<C<T>>, spec: &HilbertSpec, label: String) -> Operator<T> {
    let matrix = match spec.atom_levels() {
        None => field_op,
        Some(levels) => DMatrix::<C<T>>::identity(levels, levels).kronecker(&field_op),
    };
    Operator { matrix, label }
}

/// Ladder operator `a` with `a|n> = √n |n−1>`.
pub fn annihilation<T: Real>(spec: &HilbertSpec) -> Operator<T> {
    let d = spec.field_dim();
    let mut m = DMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = cr(T::lit(n as f64).sqrt());
    }
    lift(m, spec, "a".into())
}

/// `a†`.
pub fn creation<T: Real>(spec: &HilbertSpec) -> Operator<T> {
    annihilation(spec).adjoint()
}

/// `a†a`.
pub fn number<T: Real>(spec: &HilbertSpec) -> Operator<T> {
    let d = spec.field_dim();
    let diag = DVector::from_iterator(d, (0..d).map(|n| cr(T::lit(n as f64))));
    lift(DMatrix::from_diagonal(&diag), spec, "n".into())
}

/// Unit-amplitude selective flip `|k><k+1|`.
///
/// The `√(k+1)` of the ordinary ladder operator is carried by the channel rate instead.
pub fn selective_lowering<T: Real>(k: usize, spec: &HilbertSpec) -> Result<Operator<T>> {
    if k >= spec.n_max() {
        return Err(Error::range("k", k, format!("0..{}", spec.n_max())));
    }
    let d = spec.field_dim();
    let mut m = DMatrix::zeros(d, d);
    m[(k, k + 1)] = C::new(T::one(), T::zero());
    Ok(lift(m, spec, format!("a_{k}")))
}

/// Fock projector `|n><n|` as an operator.
pub fn fock_projector<T: Real>(n: usize, spec: &HilbertSpec) -> Result<Operator<T>> {
    check_field_index("n", n, spec)?;
    let d = spec.field_dim();
    let mut m = DMatrix::zeros(d, d);
    m[(n, n)] = C::new(T::one(), T::zero());
    Ok(lift(m, spec, format!("P_{n}")))
}

/// Atomic transition `σ_rs = |r><s|` tensored with the field identity.
pub fn atomic_transition<T: Real>(r: usize, s: usize, spec: &HilbertSpec) -> Result<Operator<T>> {
    let levels = spec
        .atom_levels()
        .ok_or_else(|| Error::param("spec", "no atom in Hilbert space"))?;
    if r >= levels || s >= levels {
        return Err(Error::range("atomic level", r.max(s), format!("0..{levels}")));
    }
    let mut atom = DMatrix::<C<T>>::zeros(levels, levels);
    atom[(r, s)] = C::new(T::one(), T::zero());
    let d = spec.field_dim();
    Ok(Operator {
        matrix: atom.kronecker(&DMatrix::<C<T>>::identity(d, d)),
        label: format!("σ_{r}{s}"),
    })
}

/// Basis vector `|atom, n>` (or `|n>` for a field-only space).
pub fn basis_vector<T: Real>(spec: &HilbertSpec, atom: usize, n: usize) -> Result<DVector<C<T>>> {
    check_field_index("n", n, spec)?;
    if atom >= spec.atom_dim() {
        return Err(Error::range("atom", atom, format!("0..{}", spec.atom_dim())));
    }
    let mut v = DVector::zeros(spec.dim());
    v[spec.index(atom, n)] = C::new(T::one(), T::zero());
    Ok(v)
}

/// Field Fock state `|n><n|`.
pub fn fock_state<T: Real>(n: usize, spec: &HilbertSpec) -> Result<DensityMatrix<T>> {
    check_field_index("n", n, spec)?;
    let d = spec.field_dim();
    let mut m = DMatrix::zeros(d, d);
    m[(n, n)] = C::new(T::one(), T::zero());
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// Thermal field state with mean occupation `nbar`, renormalized on the truncated space.
pub fn thermal_state<T: Real>(nbar: T, spec: &HilbertSpec) -> Result<DensityMatrix<T>> {
    if !(nbar >= T::zero()) || !nbar.is_finite() {
        return Err(Error::param("nbar", format!("must be finite and >= 0, got {nbar}")));
    }
    let ratio = nbar / (T::one() + nbar);
    let d = spec.field_dim();
    let mut pops = Vec::with_capacity(d);
    let mut w = T::one();
    for _ in 0..d {
        pops.push(w);
        w *= ratio;
    }
    let z = pops.iter().fold(T::zero(), |a, &b| a + b);
    let diag = DVector::from_iterator(d, pops.into_iter().map(|p| cr(p / z)));
    Ok(DensityMatrix::from_matrix_unchecked(DMatrix::from_diagonal(&diag)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(n: usize) -> HilbertSpec {
        HilbertSpec::new(n).unwrap()
    }

    #[test]
    fn ladder_entries() {
        let a = annihilation::<f64>(&spec(3));
        let m = a.matrix();
        assert_relative_eq!(m[(0, 1)].re, 1.0);
        assert_relative_eq!(m[(1, 2)].re, 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(m[(2, 3)].re, 3f64.sqrt(), epsilon = 1e-15);
        assert_eq!(a.nnz(), 3);
        let vac = basis_vector::<f64>(&spec(3), 0, 0).unwrap();
        assert!(a.apply(&vac).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn number_operator_spectrum() {
        let s = spec(5);
        let a = annihilation::<f64>(&s);
        let n = a.adjoint().compose(&a);
        let mut ev: Vec<f64> = n.matrix().clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (i, e) in ev.iter().enumerate() {
            assert_relative_eq!(*e, i as f64, epsilon = 1e-12);
        }
        assert!((n.matrix() - number::<f64>(&s).matrix()).camax() < 1e-14);
    }

    #[test]
    fn canonical_commutator_below_cutoff() {
        let s = spec(8);
        let a = annihilation::<f64>(&s);
        let ad = a.adjoint();
        let comm = a.compose(&ad).matrix() - ad.compose(&a).matrix();
        for i in 0..8 {
            for j in 0..8 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(comm[(i, j)].re, expect, epsilon = 1e-12);
                assert_relative_eq!(comm[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn selective_flip_structure() {
        let s = spec(5);
        let a2 = selective_lowering::<f64>(2, &s).unwrap();
        assert_eq!(a2.nnz(), 1);
        assert_eq!(a2.matrix()[(2, 3)].re, 1.0);
        let up = selective_lowering::<f64>(4, &s).unwrap().adjoint();
        assert_eq!(up.matrix()[(5, 4)].re, 1.0);
        assert_eq!(up.nnz(), 1);

        let sum = a2.compose(&a2.adjoint()).add(&a2.adjoint().compose(&a2));
        for i in 0..6 {
            let expect = if i == 2 || i == 3 { 1.0 } else { 0.0 };
            assert_eq!(sum.matrix()[(i, i)].re, expect);
        }
        assert_eq!(sum.nnz(), 2);

        for n in 0..=5 {
            let v = basis_vector::<f64>(&s, 0, n).unwrap();
            let out = a2.apply(&v);
            let norm: f64 = out.iter().map(|z| z.norm_sqr()).sum();
            assert_eq!(norm > 0.0, n == 3);
        }
    }

    #[test]
    fn selective_range() {
        assert!(matches!(
            selective_lowering::<f64>(5, &spec(5)),
            Err(Error::OutOfRange { .. })
        ));
        assert!(HilbertSpec::new(0).is_err());
    }

    #[test]
    fn fock_and_thermal_states() {
        let s = spec(30);
        let f = fock_state::<f64>(5, &s).unwrap();
        assert_eq!(f.populations()[5], 1.0);
        assert_relative_eq!(f.purity(), 1.0);
        f.check(StateTolerance::default()).unwrap();
        assert!(fock_state::<f64>(31, &s).is_err());

        let vac = thermal_state::<f64>(0.0, &s).unwrap();
        assert_eq!(vac.populations()[0], 1.0);

        let th = thermal_state::<f64>(0.05, &s).unwrap();
        th.check(StateTolerance::default()).unwrap();
        assert_relative_eq!(th.populations()[0], 1.0 / 1.05, epsilon = 1e-12);
        let mean = th.expectation(&number(&s)).re;
        assert_relative_eq!(mean, 0.05, epsilon = 1e-10);
        assert!(thermal_state::<f64>(-0.1, &s).is_err());
    }

    #[test]
    fn composite_lift_and_partial_trace() {
        let s = HilbertSpec::with_atom(3, 2).unwrap();
        assert_eq!(s.dim(), 8);
        let a = annihilation::<f64>(&s);
        assert_eq!(a.matrix()[(s.index(1, 1), s.index(1, 2))].re, 2f64.sqrt());
        let sig = atomic_transition::<f64>(0, 1, &s).unwrap();
        assert_eq!(sig.matrix()[(s.index(0, 2), s.index(1, 2))].re, 1.0);
        let psi = basis_vector::<f64>(&s, 1, 2).unwrap();
        let rho = DensityMatrix::pure(&psi).unwrap();
        let field = rho.trace_atom(&s).unwrap();
        assert_eq!(field.populations()[2], 1.0);
        assert!(HilbertSpec::with_atom(3, 4).is_err());
    }

    #[test]
    fn trace_distance_of_orthogonal_states() {
        let s = spec(4);
        let a = fock_state::<f64>(1, &s).unwrap();
        let b = fock_state::<f64>(2, &s).unwrap();
        assert_relative_eq!(a.trace_distance(&b).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(a.trace_distance(&a).unwrap(), 0.0);
    }

    #[test]
    fn single_precision_instantiation() {
        let th = thermal_state::<f32>(0.05, &spec(10)).unwrap();
        th.check(StateTolerance::default()).unwrap();
        assert!((th.populations()[0] - 1.0 / 1.05).abs() < 1e-6);
    }
}
