//! Master-equation generator, time evolution and steady-state solvers.

use nalgebra::{DMatrix, DVector};

use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::fock::{max_abs, DensityMatrix, HilbertSpec, Operator, StateTolerance};
use crate::integrate::{integrate, OdeOptions, OdeStats};
use crate::scalar::{cr, Real, C};
use crate::superop::{SuperopBuilder, Superoperator, DEFAULT_DENSE_LIMIT};

/// One dissipative channel `rate · D[jump]`.
#[derive(Debug, Clone)]
pub struct Channel<T: Real> {
    pub rate: T,
    pub jump: Operator<T>,
}

impl<T: Real> Channel<T> {
    pub fn new(rate: T, jump: Operator<T>) -> Self {
        Self { rate, jump }
    }
}

/// Hamiltonian plus Lindblad channels on one Hilbert space.
#[derive(Debug, Clone)]
pub struct MasterEquationSpec<T: Real> {
    hamiltonian: Operator<T>,
    channels: Vec<Channel<T>>,
    spec: HilbertSpec,
}

impl<T: Real> MasterEquationSpec<T> {
    pub fn new(
        spec: HilbertSpec,
        hamiltonian: Option<Operator<T>>,
        channels: Vec<Channel<T>>,
    ) -> Result<Self> {
        let d = spec.dim();
        let hamiltonian = hamiltonian.unwrap_or_else(|| Operator::zeros(d, "0"));
        if hamiltonian.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: hamiltonian.dim(),
            });
        }
        for ch in &channels {
            if ch.jump.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: ch.jump.dim(),
                });
            }
            if !(ch.rate >= T::zero()) || !ch.rate.is_finite() {
                return Err(Error::param("rate", format!("{} on {}", ch.rate, ch.jump.label())));
            }
        }
        Ok(Self {
            hamiltonian,
            channels,
            spec,
        })
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn hamiltonian(&self) -> &Operator<T> {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[Channel<T>] {
        &self.channels
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Sparse Liouvillian `𝔏` with `vec(dρ/dt) = 𝔏 vec(ρ)`.
    pub fn superoperator(&self) -> Superoperator<T> {
        let mut b = SuperopBuilder::new(self.dim());
        b.add_hamiltonian(self.hamiltonian.matrix());
        for ch in &self.channels {
            b.add_dissipator(ch.rate, ch.jump.matrix());
        }
        b.build()
    }

    /// Fastest rate in the generator: the largest diagonal decay of `𝔏` or twice the
    /// Hamiltonian's row-sum norm, whichever is larger.
    pub fn max_rate(&self) -> T {
        let l = self.superoperator();
        let h = self.hamiltonian.matrix();
        let mut hn = T::zero();
        for i in 0..h.nrows() {
            let s = h.row(i).iter().fold(T::zero(), |a, z| a + z.modulus());
            hn = hn.max(s);
        }
        l.max_diagonal().max(hn * T::lit(2.0))
    }

    /// True when the dynamics maps diagonal states to diagonal states, so that the
    /// populations obey a closed rate equation: diagonal Hamiltonian and every jump
    /// operator with at most one nonzero per row and per column.
    pub fn closes_on_populations(&self) -> bool {
        let h = self.hamiltonian.matrix();
        let d = h.nrows();
        for i in 0..d {
            for j in 0..d {
                if i != j && h[(i, j)].modulus() != T::zero() {
                    return false;
                }
            }
        }
        self.channels.iter().all(|ch| {
            let m = ch.jump.matrix();
            let rows_ok = (0..d).all(|i| m.row(i).iter().filter(|z| z.modulus() != T::zero()).count() <= 1);
            let cols_ok = (0..d).all(|j| m.column(j).iter().filter(|z| z.modulus() != T::zero()).count() <= 1);
            rows_ok && cols_ok
        })
    }

    /// Real rate matrix `W` with `dp/dt = W p` for diagonal states.
    pub fn population_generator(&self) -> Result<DMatrix<T>> {
        if !self.closes_on_populations() {
            return Err(Error::param(
                "master equation",
                "populations do not close (non-diagonal Hamiltonian or non-monomial jump)",
            ));
        }
        let d = self.dim();
        let mut w = DMatrix::<T>::zeros(d, d);
        for ch in &self.channels {
            let m = ch.jump.matrix();
            for j in 0..d {
                for i in 0..d {
                    let p = m[(i, j)].modulus_squared() * ch.rate;
                    if p != T::zero() {
                        // |j> → |i> with rate γ|L_ij|²; a diagonal entry only dephases
                        if i != j {
                            w[(i, j)] += p;
                            w[(j, j)] -= p;
                        }
                    }
                }
            }
        }
        Ok(w)
    }
}

/// Dense vectorized Liouvillian; refused when `d²` exceeds `limit`
/// (default [`DEFAULT_DENSE_LIMIT`]).
pub fn liouvillian_matrix<T: Real>(
    me: &MasterEquationSpec<T>,
    limit: Option<usize>,
) -> Result<DMatrix<C<T>>> {
    me.superoperator().to_dense(limit.unwrap_or(DEFAULT_DENSE_LIMIT))
}

/// Integration settings for [`evolve`].
#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Maximum step as a fraction of `1 / max_rate`.
    pub max_step_factor: f64,
    /// Tolerances applied to every returned state.
    pub state_tolerance: StateTolerance,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_step_factor: 0.1,
            state_tolerance: StateTolerance {
                trace: 1e-8,
                hermiticity: 1e-9,
                min_eigenvalue: 1e-8,
            },
        }
    }
}

/// States along a time grid plus integrator counters.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
    pub stats: OdeStats,
}

/// Integrates the master equation from `rho0` and samples `t_grid` (increasing, from 0).
///
/// Only the Liouville-space sectors reachable from the support of `rho0` are
/// integrated; all other components stay exactly zero.
pub fn evolve<T: Real>(
    me: &MasterEquationSpec<T>,
    rho0: &DensityMatrix<T>,
    t_grid: &[T],
    opts: &EvolveOptions,
) -> Result<Trajectory<T>> {
    if rho0.dim() != me.dim() {
        return Err(Error::DimensionMismatch {
            expected: me.dim(),
            got: rho0.dim(),
        });
    }
    if t_grid.first().is_some_and(|t| *t != T::zero()) {
        return Err(Error::param("t_grid", "must start at 0"));
    }
    let l = me.superoperator();
    let x0 = rho0.matrix().as_slice();
    let support: Vec<usize> = (0..x0.len())
        .filter(|&i| x0[i].modulus() != T::zero())
        .collect();
    let idx = l.closure(&support);
    let block = l.restrict(&idx);
    let y0: Vec<C<T>> = idx.iter().map(|&i| x0[i]).collect();

    let max_rate = me.max_rate();
    let h_max = (max_rate > T::zero()).then(|| opts.max_step_factor / max_rate.as_f64());
    let ode = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        h_max,
        ..Default::default()
    };
    let (ys, stats) = integrate(|_, y, dy| block.apply(y, dy), t_grid, &y0, &ode)?;

    let d = me.dim();
    let mut states = Vec::with_capacity(ys.len());
    for y in ys {
        let mut m = DMatrix::zeros(d, d);
        let s = m.as_mut_slice();
        for (k, &i) in idx.iter().enumerate() {
            s[i] = y[k];
        }
        states.push(DensityMatrix::new_with(m, opts.state_tolerance)?);
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        stats,
    })
}

/// How a steady state was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteadyMethod {
    /// Bordered least-squares solve of the vectorized Liouvillian null space.
    NullSpace,
    /// Same, restricted to the closed population rate equation.
    Populations,
    /// Long-time integration after a degenerate null space.
    LongTime,
}

impl SteadyMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SteadyMethod::NullSpace => "null-space",
            SteadyMethod::Populations => "populations",
            SteadyMethod::LongTime => "long-time",
        }
    }
}

/// Settings for [`steady_state`].
#[derive(Debug, Clone, Copy)]
pub struct SteadyOptions {
    /// Largest accepted population of `|n_max>`.
    pub tail_limit: f64,
    /// Singular values below `null_tol · σ_max` count toward the null space.
    pub null_tol: f64,
    pub residual_limit: f64,
    /// Above this `n_max` a population-closing generator is solved on populations only.
    pub fast_path_above: usize,
    pub force_method: Option<SteadyMethod>,
    pub allow_fallback: bool,
    /// Longest time the long-time fallback integrates.
    pub fallback_t_max: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            tail_limit: 1e-8,
            null_tol: 1e-8,
            residual_limit: 1e-9,
            fast_path_above: 60,
            force_method: None,
            allow_fallback: true,
            fallback_t_max: 1e4,
        }
    }
}

/// Steady state plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct SteadyStateReport<T: Real> {
    pub rho: DensityMatrix<T>,
    pub populations: Vec<T>,
    /// `‖𝔏 vec(ρ)‖_max`.
    pub residual: T,
    pub null_space_dim: usize,
    /// Population of `|n_max>` (of the field, atom traced out).
    pub tail_mass: T,
    pub method: SteadyMethod,
    /// Smallest singular value above the null space, relative to `σ_max`.
    pub spectral_gap: T,
    pub sectors: usize,
}

/// Steady state of the master equation.
pub fn steady_state<T: Real>(
    me: &MasterEquationSpec<T>,
    opts: &SteadyOptions,
) -> Result<SteadyStateReport<T>> {
    let l = me.superoperator();
    let method = match opts.force_method {
        Some(m) => m,
        None if me.spec().n_max() > opts.fast_path_above && me.closes_on_populations() => {
            SteadyMethod::Populations
        }
        None => SteadyMethod::NullSpace,
    };
    let solved = match method {
        SteadyMethod::Populations => solve_populations(me, opts)?,
        SteadyMethod::NullSpace => solve_null_space(&l, opts)?,
        SteadyMethod::LongTime => long_time(me, &l, opts, 0)?,
    };
    let solved = match solved {
        Solved::Unique(s) => s,
        Solved::Degenerate(dim) if opts.allow_fallback => match long_time(me, &l, opts, dim)? {
            Solved::Unique(s) => s,
            Solved::Degenerate(dim) => return Err(Error::DegenerateNullSpace { dim }),
        },
        Solved::Degenerate(dim) => return Err(Error::DegenerateNullSpace { dim }),
    };
    finish(me, &l, solved, opts)
}

struct Partial<T: Real> {
    rho: DMatrix<C<T>>,
    null_dim: usize,
    gap: T,
    sectors: usize,
    method: SteadyMethod,
}

enum Solved<T: Real> {
    Unique(Partial<T>),
    Degenerate(usize),
}

fn singular_profile<T: Real>(sv: &[T], null_tol: T) -> (usize, T, T) {
    let smax = sv.iter().fold(T::zero(), |a, &b| a.max(b));
    let scale = smax.max(T::one());
    let null = sv.iter().filter(|&&s| s <= null_tol * scale).count();
    let gap = sv
        .iter()
        .filter(|&&s| s > null_tol * scale)
        .fold(T::max_value().unwrap_or(smax), |a, &b| a.min(b));
    (null, gap / scale, scale)
}

/// Bordered system `[B; trace] x = [0; 1]` solved in the least-squares sense.
pub(crate) fn bordered_solve<S>(block: &DMatrix<S>, trace_row: &[usize]) -> Option<DVector<S>>
where
    S: nalgebra::ComplexField,
{
    let n = block.nrows();
    let mut a = DMatrix::<S>::zeros(n + 1, n);
    a.view_mut((0, 0), (n, n)).copy_from(block);
    for &k in trace_row {
        a[(n, k)] = S::one();
    }
    let mut rhs = DVector::<S>::zeros(n + 1);
    rhs[n] = S::one();
    let svd = a.svd(true, true);
    let eps = svd.singular_values.max() * nalgebra::convert::<f64, S::RealField>(1e-14);
    svd.solve(&rhs, eps).ok()
}

fn solve_null_space<T: Real>(l: &Superoperator<T>, opts: &SteadyOptions) -> Result<Solved<T>> {
    let d = l.hilbert_dim();
    let sectors = l.sectors();
    let null_tol = T::lit(opts.null_tol);
    let mut null_dim = 0;
    let mut gap = T::max_value().unwrap_or_else(T::one);
    let mut target: Option<(usize, DMatrix<C<T>>)> = None;
    for (s, idx) in sectors.iter().enumerate() {
        let block = l.block(idx);
        let sv: Vec<T> = block.clone().singular_values().iter().copied().collect();
        let (null, g, _) = singular_profile(&sv, null_tol);
        gap = gap.min(g);
        if null > 0 {
            null_dim += null;
            target = Some((s, block));
        }
    }
    if null_dim != 1 {
        return Ok(Solved::Degenerate(null_dim));
    }
    let (s, block) = target.expect("one null sector");
    let idx = &sectors[s];
    let trace_pos: Vec<usize> = idx
        .iter()
        .enumerate()
        .filter(|(_, &i)| i % (d + 1) == 0)
        .map(|(k, _)| k)
        .collect();
    if trace_pos.is_empty() {
        return Err(Error::NonConvergence("null vector carries no trace".into()));
    }
    let x = bordered_solve(&block, &trace_pos)
        .ok_or_else(|| Error::NonConvergence("bordered least squares failed".into()))?;
    let mut rho = DMatrix::zeros(d, d);
    {
        let sl = rho.as_mut_slice();
        for (k, &i) in idx.iter().enumerate() {
            sl[i] = x[k];
        }
    }
    Ok(Solved::Unique(Partial {
        rho,
        null_dim,
        gap,
        sectors: sectors.len(),
        method: SteadyMethod::NullSpace,
    }))
}

fn solve_populations<T: Real>(me: &MasterEquationSpec<T>, opts: &SteadyOptions) -> Result<Solved<T>> {
    let w = me.population_generator()?;
    let d = w.nrows();
    let sv: Vec<T> = w.clone().singular_values().iter().copied().collect();
    let (null, gap, _) = singular_profile(&sv, T::lit(opts.null_tol));
    if null != 1 {
        return Ok(Solved::Degenerate(null));
    }
    let all: Vec<usize> = (0..d).collect();
    let p = bordered_solve(&w, &all)
        .ok_or_else(|| Error::NonConvergence("population least squares failed".into()))?;
    let diag = DVector::from_iterator(d, p.iter().map(|&x| cr(x)));
    Ok(Solved::Unique(Partial {
        rho: DMatrix::from_diagonal(&diag),
        null_dim: 1,
        gap,
        sectors: 1,
        method: SteadyMethod::Populations,
    }))
}

fn long_time<T: Real>(
    me: &MasterEquationSpec<T>,
    l: &Superoperator<T>,
    opts: &SteadyOptions,
    null_dim: usize,
) -> Result<Solved<T>> {
    let d = me.dim();
    let mut rho = DensityMatrix::maximally_mixed(d);
    let evo = EvolveOptions::default();
    let residual_goal = T::lit(opts.residual_limit);
    let mut chunk = T::one();
    let mut t = T::zero();
    let t_max = T::lit(opts.fallback_t_max);
    while t < t_max {
        let traj = evolve(me, &rho, &[T::zero(), chunk], &evo)?;
        rho = traj.states.into_iter().last().expect("two samples");
        t += chunk;
        let r = max_abs(&l.apply_matrix(rho.matrix()));
        if r <= residual_goal {
            return Ok(Solved::Unique(Partial {
                rho: rho.into_matrix(),
                null_dim: null_dim.max(1),
                gap: T::zero(),
                sectors: l.sectors().len(),
                method: SteadyMethod::LongTime,
            }));
        }
        chunk *= T::lit(2.0);
    }
    Ok(Solved::Degenerate(null_dim))
}

fn finish<T: Real>(
    me: &MasterEquationSpec<T>,
    l: &Superoperator<T>,
    p: Partial<T>,
    opts: &SteadyOptions,
) -> Result<SteadyStateReport<T>> {
    // remove rounding-level anti-Hermitian part
    let rho = (&p.rho + p.rho.adjoint()) * cr(T::lit(0.5));
    let residual = max_abs(&l.apply_matrix(&rho));
    if residual > T::tol(opts.residual_limit) {
        return Err(Error::NonConvergence(format!(
            "steady-state residual {residual} exceeds {}",
            opts.residual_limit
        )));
    }
    let rho = DensityMatrix::new(rho)?;
    let field = if me.spec().atom_levels().is_some() {
        rho.trace_atom(me.spec())?
    } else {
        rho.clone()
    };
    let populations = field.populations();
    let tail_mass = populations[populations.len() - 1];
    if tail_mass > T::lit(opts.tail_limit) {
        return Err(Error::TruncationInsufficient {
            tail: tail_mass.as_f64(),
            limit: opts.tail_limit,
        });
    }
    Ok(SteadyStateReport {
        rho,
        populations,
        residual,
        null_space_dim: p.null_dim,
        tail_mass,
        method: p.method,
        spectral_gap: p.gap,
        sectors: p.sectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{annihilation, fock_state, thermal_state};

    fn natural(nbar: f64, n_max: usize) -> MasterEquationSpec<f64> {
        let s = HilbertSpec::new(n_max).unwrap();
        let a = annihilation::<f64>(&s);
        MasterEquationSpec::new(
            s,
            None,
            vec![
                Channel::new(1.0 + nbar, a.clone()),
                Channel::new(nbar, a.adjoint()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn two_level_amplitude_damping_matrix() {
        let me = natural(0.0, 1);
        let l = liouvillian_matrix(&me, None).unwrap();
        assert_eq!(l.nrows(), 4);
        // vec index of |1><1| is 3, of |0><0| is 0
        assert!((l[(3, 3)].re + 1.0).abs() < 1e-15);
        assert!((l[(0, 3)].re - 1.0).abs() < 1e-15);
        assert!((l[(1, 1)].re + 0.5).abs() < 1e-15);
        let trace_row: Vec<C<f64>> = (0..4)
            .map(|k| if k % 3 == 0 { cr(1.0) } else { cr(0.0) })
            .collect();
        for c in 0..4 {
            let s: C<f64> = (0..4).map(|r| trace_row[r] * l[(r, c)]).sum();
            assert!(s.norm() < 1e-12);
        }
    }

    #[test]
    fn dense_guard() {
        let me = natural(0.05, 100);
        assert!(matches!(
            liouvillian_matrix(&me, None),
            Err(Error::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn thermal_fixed_point() {
        let me = natural(0.05, 20);
        let opts = SteadyOptions {
            tail_limit: 1.0,
            ..Default::default()
        };
        let rep = steady_state(&me, &opts).unwrap();
        let th = thermal_state(0.05, me.spec()).unwrap();
        assert!(max_abs(&(rep.rho.matrix() - th.matrix())) < 1e-8);
        assert!((rep.populations[0] - 1.0 / 1.05).abs() < 1e-8);
        assert_eq!(rep.null_space_dim, 1);
        assert_eq!(rep.method, SteadyMethod::NullSpace);
        assert!(rep.residual < 1e-12);
    }

    #[test]
    fn tail_check_refuses_short_truncation() {
        let me = natural(0.5, 5);
        assert!(matches!(
            steady_state(&me, &SteadyOptions::default()),
            Err(Error::TruncationInsufficient { .. })
        ));
    }

    #[test]
    fn identity_dynamics() {
        let s = HilbertSpec::new(3).unwrap();
        let me = MasterEquationSpec::<f64>::new(s, None, vec![]).unwrap();
        let rho0 = thermal_state(0.3, &s).unwrap();
        let traj = evolve(&me, &rho0, &[0.0, 1.0, 5.0], &EvolveOptions::default()).unwrap();
        for st in &traj.states {
            assert!(max_abs(&(st.matrix() - rho0.matrix())) < 1e-15);
        }
    }

    #[test]
    fn amplitude_damping_closed_form() {
        let me = natural(0.0, 4);
        let rho0 = fock_state(1, me.spec()).unwrap();
        let grid: Vec<f64> = (0..=8).map(|k| 0.5 * k as f64).collect();
        let traj = evolve(&me, &rho0, &grid, &EvolveOptions::default()).unwrap();
        for (t, st) in grid.iter().zip(&traj.states) {
            assert!((st.populations()[1] - (-t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_null_space_reported_without_fallback() {
        // two disconnected dark states
        let s = HilbertSpec::new(3).unwrap();
        let d = s.dim();
        let mut m = DMatrix::zeros(d, d);
        m[(0, 1)] = cr(1.0);
        let j = Operator::new(m, "j").unwrap();
        let me = MasterEquationSpec::new(s, None, vec![Channel::new(1.0, j)]).unwrap();
        let opts = SteadyOptions {
            allow_fallback: false,
            tail_limit: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            steady_state(&me, &opts),
            Err(Error::DegenerateNullSpace { .. })
        ));
    }

    #[test]
    fn fallback_integration_records_method() {
        let s = HilbertSpec::new(2).unwrap();
        let d = s.dim();
        let mut m = DMatrix::zeros(d, d);
        m[(0, 1)] = cr(1.0);
        let j = Operator::new(m, "j").unwrap();
        let me = MasterEquationSpec::new(s, None, vec![Channel::new(1.0, j)]).unwrap();
        let opts = SteadyOptions {
            tail_limit: 1.0,
            ..Default::default()
        };
        let rep = steady_state(&me, &opts).unwrap();
        assert_eq!(rep.method, SteadyMethod::LongTime);
        assert!(rep.null_space_dim > 1);
        // |2> is dark, |1> drains into |0>: I/3 ends as diag(2/3, 0, 1/3)
        assert!((rep.populations[0] - 2.0 / 3.0).abs() < 1e-8);
        assert!((rep.populations[2] - 1.0 / 3.0).abs() < 1e-8);
    }
}
