//! Raman engineering of selective and resonant atom–field couplings.
//!
//! Three-level atoms use levels `g = 0`, `e = 1`, `i = 2`. Two-level spaces used for
//! the engineered couplings keep `g = 0` and put the upper level (`e` or `i`) at 1.
//!
//! The full Hamiltonian, in units of `|λ|` and in the frame where it carries explicit
//! time dependence, is
//!
//! ```text
//! H(t) = λ σ_ig a e^{−iΔt} + Ω₁ σ_ig e^{iΔ₁t} + Ω₂ σ_ie e^{−iΔ₂t} + h.c.
//! ```
//!
//! Second-order elimination of `|i>` gives
//! `H_eff = (ξ a†a − ϖ_g) σ_gg + ϖ_e σ_ee + (ζ a† e^{iδt} σ_ge + h.c.)`.
//! Removing the diagonal part with `U = exp{−i[(ξ a†a − ϖ_g) σ_gg + ϖ_e σ_ee] t}` leaves
//! doublets `|g,n+1> ↔ |e,n>` with coupling `ζ_n = √(n+1) ζ` and detuning
//! `φ_n = (n+1)ξ + δ − ϖ_g − ϖ_e`.

use nalgebra::{DMatrix, DVector};

use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::fock::{annihilation, atomic_transition, HilbertSpec, Operator};
use crate::integrate::{integrate, OdeOptions};
use crate::scalar::{cr, Real, C};

pub const LEVEL_G: usize = 0;
pub const LEVEL_E: usize = 1;
pub const LEVEL_I: usize = 2;

/// Required `ξ / (√(k+2)|ζ|)` for the off-resonant doublets to be negligible.
pub const SELECTIVITY_MARGIN: f64 = 10.0;
/// Largest coupling-to-detuning ratio accepted as dispersive.
pub const DISPERSIVE_LIMIT: f64 = 0.2;

/// Couplings and detunings of the Raman scheme, angular frequencies in units of `|λ|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanParams<T: Real> {
    pub lambda: C<T>,
    pub omega1: C<T>,
    pub omega2: C<T>,
    /// `Δ = ω − ω_ig`
    pub delta: T,
    /// `Δ₁ = ω_ig − ω₁`
    pub delta1: T,
    /// `Δ₂ = ω₂ − ω_ie`
    pub delta2: T,
}

impl<T: Real> RamanParams<T> {
    /// Operating point `Δ = Δ₁ = (1 + 10⁻²)Δ₂ = 10√(k+1)|λ|`, `|Ω₁| = 10|Ω₂| = √(k+1)|λ|`,
    /// with `|λ| = 1`.
    pub fn reference(k: usize) -> Self {
        let s = T::lit(((k + 1) as f64).sqrt());
        let ten = T::lit(10.0);
        let delta = ten * s;
        Self {
            lambda: cr(T::one()),
            omega1: cr(s),
            omega2: cr(s / ten),
            delta,
            delta1: delta,
            delta2: delta / T::lit(1.01),
        }
    }

    /// Dispersive-hierarchy violations for a field truncated at `n_max`.
    pub fn warnings(&self, n_max: usize) -> Vec<String> {
        let limit = T::lit(DISPERSIVE_LIMIT);
        let mut out = Vec::new();
        let cav = self.lambda.modulus() * T::lit(((n_max + 1) as f64).sqrt()) / self.delta.abs();
        if cav > limit {
            out.push(format!("|λ|√(n_max+1)/|Δ| = {cav} exceeds {DISPERSIVE_LIMIT}"));
        }
        for (name, om, d) in [("Ω₁", self.omega1, self.delta1), ("Ω₂", self.omega2, self.delta2)] {
            let r = om.modulus() / d.abs();
            if r > limit {
                out.push(format!("|{name}|/|Δ| = {r} exceeds {DISPERSIVE_LIMIT}"));
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        for (name, d) in [("delta", self.delta), ("delta1", self.delta1), ("delta2", self.delta2)] {
            if !d.is_finite() || d == T::zero() {
                return Err(Error::param(name, "detuning must be finite and nonzero"));
            }
        }
        for (name, c) in [("lambda", self.lambda), ("omega1", self.omega1), ("omega2", self.omega2)] {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }

    fn max_frequency(&self) -> T {
        [
            self.delta.abs(),
            self.delta1.abs(),
            self.delta2.abs(),
            self.lambda.modulus(),
            self.omega1.modulus(),
            self.omega2.modulus(),
        ]
        .into_iter()
        .fold(T::zero(), |a, b| a.max(b))
    }
}

/// Effective strengths after eliminating `|i>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams<T: Real> {
    pub xi: T,
    pub zeta: C<T>,
    pub varpi_g: T,
    pub varpi_e: T,
    pub delta: T,
}

impl<T: Real> EffectiveParams<T> {
    pub fn zeta_n(&self, n: usize) -> C<T> {
        self.zeta * T::lit(((n + 1) as f64).sqrt())
    }

    pub fn phi_n(&self, n: usize) -> T {
        T::lit((n + 1) as f64) * self.xi + self.delta - self.varpi_g - self.varpi_e
    }

    /// `ξ / (√(k+2)|ζ|)`; infinite when `ζ = 0`.
    pub fn selectivity_ratio(&self, k: usize) -> T {
        let z = self.zeta.modulus() * T::lit(((k + 2) as f64).sqrt());
        if z == T::zero() {
            T::max_value().unwrap_or_else(|| T::lit(f64::MAX))
        } else {
            self.xi.abs() / z
        }
    }

    pub fn is_selective(&self, k: usize) -> bool {
        self.selectivity_ratio(k) >= T::lit(SELECTIVITY_MARGIN)
    }
}

pub fn derive_effective<T: Real>(p: &RamanParams<T>) -> Result<EffectiveParams<T>> {
    p.validate()?;
    let half = T::lit(0.5);
    Ok(EffectiveParams {
        xi: p.lambda.norm_sqr() / p.delta,
        zeta: p.lambda.conj() * p.omega2 * (T::one() / p.delta + T::one() / p.delta2) * half,
        varpi_g: p.omega1.norm_sqr() / p.delta1,
        varpi_e: p.omega2.norm_sqr() / p.delta2,
        delta: p.delta - p.delta2,
    })
}

/// Adjusts `|Ω₁|` so that `ϖ_g = (k+1)ξ` and `Δ₂` so that `δ = ϖ_e`, making `φ_k = 0`.
///
/// The phase of `Ω₁` is kept. `Δ₂` is the root of `Δ₂² − ΔΔ₂ + |Ω₂|² = 0` closest to `Δ`.
pub fn solve_selectivity<T: Real>(k: usize, p: &RamanParams<T>) -> Result<RamanParams<T>> {
    p.validate()?;
    if p.delta1 / p.delta <= T::zero() {
        return Err(Error::Infeasible("Δ and Δ₁ must share a sign for ϖ_g = (k+1)ξ".into()));
    }
    let mag = (T::lit((k + 1) as f64) * p.delta1 / p.delta).sqrt() * p.lambda.modulus();
    let phase = if p.omega1.modulus() > T::zero() {
        p.omega1 / p.omega1.modulus()
    } else {
        cr(T::one())
    };
    let disc = p.delta * p.delta - T::lit(4.0) * p.omega2.norm_sqr();
    if disc < T::zero() {
        return Err(Error::Infeasible(format!(
            "no Δ₂ with Δ − Δ₂ = |Ω₂|²/Δ₂: |Ω₂| = {} exceeds |Δ|/2",
            p.omega2.modulus()
        )));
    }
    let delta2 = (p.delta + p.delta.signum() * disc.sqrt()) * T::lit(0.5);
    let out = RamanParams {
        omega1: phase * mag,
        delta2,
        ..*p
    };
    let r1 = mag / p.delta1.abs();
    if r1 > T::lit(DISPERSIVE_LIMIT) {
        return Err(Error::Infeasible(format!(
            "|Ω₁|/|Δ₁| = {r1} exceeds {DISPERSIVE_LIMIT}"
        )));
    }
    Ok(out)
}

fn two_level(spec: &HilbertSpec) -> Result<()> {
    match spec.atom_levels() {
        Some(2) => Ok(()),
        _ => Err(Error::param("spec", "expected a two-level atom tensored with the field")),
    }
}

/// `ℋ₁ = ζ_k |k+1><k| σ_ge + h.c.` on a two-level atom ⊗ field space.
///
/// Couples `|e,k>` and `|g,k+1>` only.
pub fn selective_jc<T: Real>(k: usize, zeta_k: C<T>, spec: &HilbertSpec) -> Result<Operator<T>> {
    two_level(spec)?;
    if k + 1 > spec.n_max() {
        return Err(Error::range("k", k, format!("0..{}", spec.n_max())));
    }
    let mut m = DMatrix::zeros(spec.dim(), spec.dim());
    let (a, b) = (spec.index(LEVEL_G, k + 1), spec.index(LEVEL_E, k));
    m[(a, b)] = zeta_k;
    m[(b, a)] = zeta_k.conj();
    Operator::new(m, format!("H1[{k}]"))
}

/// `ℋ₂ = λ̃ σ_ig a + h.c.`, with `i` the top atomic level of `spec`.
pub fn resonant_jc<T: Real>(lambda_tilde: C<T>, spec: &HilbertSpec) -> Result<Operator<T>> {
    let levels = spec
        .atom_levels()
        .ok_or_else(|| Error::param("spec", "no atom in Hilbert space"))?;
    let up = atomic_transition::<T>(levels - 1, LEVEL_G, spec)?;
    let h = up.compose(&annihilation(spec)).scale(lambda_tilde);
    Ok(h.add(&h.adjoint()).with_label("H2"))
}

/// Time-dependent Raman Hamiltonian on a three-level ⊗ field space, stored as the
/// three lowering-type terms whose coefficients carry the time dependence.
pub struct RamanHamiltonian<T: Real> {
    spec: HilbertSpec,
    params: RamanParams<T>,
    // sparse (row, col, value) for σ_ig a, σ_ig, σ_ie
    terms: [Vec<(usize, usize, T)>; 3],
}

impl<T: Real> RamanHamiltonian<T> {
    pub fn new(params: RamanParams<T>, spec: HilbertSpec) -> Result<Self> {
        params.validate()?;
        if spec.atom_levels() != Some(3) {
            return Err(Error::param("spec", "expected a three-level atom tensored with the field"));
        }
        let d = spec.field_dim();
        let mut cav = Vec::new();
        let mut p1 = Vec::new();
        let mut p2 = Vec::new();
        for n in 0..d {
            if n + 1 < d {
                cav.push((
                    spec.index(LEVEL_I, n),
                    spec.index(LEVEL_G, n + 1),
                    T::lit(((n + 1) as f64).sqrt()),
                ));
            }
            p1.push((spec.index(LEVEL_I, n), spec.index(LEVEL_G, n), T::one()));
            p2.push((spec.index(LEVEL_I, n), spec.index(LEVEL_E, n), T::one()));
        }
        Ok(Self {
            spec,
            params,
            terms: [cav, p1, p2],
        })
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    fn coefficients(&self, t: T) -> [C<T>; 3] {
        let p = &self.params;
        let ph = |w: T| C::new(T::zero(), w * t).exp();
        [
            p.lambda * ph(-p.delta),
            p.omega1 * ph(p.delta1),
            p.omega2 * ph(-p.delta2),
        ]
    }

    /// Dense `H(t)`.
    pub fn at(&self, t: T) -> DMatrix<C<T>> {
        let mut h = DMatrix::zeros(self.spec.dim(), self.spec.dim());
        for (c, term) in self.coefficients(t).iter().zip(&self.terms) {
            for &(r, s, v) in term {
                h[(r, s)] += *c * v;
                h[(s, r)] += c.conj() * v;
            }
        }
        h
    }

    /// `out = −i H(t) ψ`.
    pub fn rhs(&self, t: T, psi: &[C<T>], out: &mut [C<T>]) {
        out.iter_mut().for_each(|o| *o = C::new(T::zero(), T::zero()));
        let mi = C::new(T::zero(), -T::one());
        for (c, term) in self.coefficients(t).iter().zip(&self.terms) {
            let (cf, cb) = (mi * *c, mi * c.conj());
            for &(r, s, v) in term {
                out[r] += cf * psi[s] * v;
                out[s] += cb * psi[r] * v;
            }
        }
    }

    /// Exact propagation through the frame `E_{g,n} = −n(Δ+Δ₁)`, `E_{i,n} = E_{g,n} − Δ₁`,
    /// `E_{e,n} = E_{i,n} − Δ₂`, in which `H` is time independent.
    pub fn propagate_exact(&self, psi0: &DVector<C<T>>, times: &[T]) -> Vec<DVector<C<T>>> {
        let p = &self.params;
        let d = self.spec.field_dim();
        let mut energy = vec![T::zero(); self.spec.dim()];
        for n in 0..d {
            let eg = -T::lit(n as f64) * (p.delta + p.delta1);
            energy[self.spec.index(LEVEL_G, n)] = eg;
            energy[self.spec.index(LEVEL_I, n)] = eg - p.delta1;
            energy[self.spec.index(LEVEL_E, n)] = eg - p.delta1 - p.delta2;
        }
        let mut h = self.at(T::zero());
        for (k, e) in energy.iter().enumerate() {
            h[(k, k)] -= cr(*e);
        }
        let eig = h.symmetric_eigen();
        let coeffs = eig.eigenvectors.adjoint() * psi0;
        times
            .iter()
            .map(|&t| {
                let mut c = coeffs.clone();
                for (j, cj) in c.iter_mut().enumerate() {
                    *cj *= C::new(T::zero(), -eig.eigenvalues[j] * t).exp();
                }
                let mut v = &eig.eigenvectors * c;
                for (k, vk) in v.iter_mut().enumerate() {
                    *vk *= C::new(T::zero(), -energy[k] * t).exp();
                }
                v
            })
            .collect()
    }
}

/// Outcome of comparing the full Raman dynamics with the effective doublet dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectivityReport<T: Real> {
    pub k: usize,
    /// Doublet probed: the run starts in `|g, n_probe + 1>`.
    pub n_probe: usize,
    pub t_end: T,
    /// Largest population of the `e` manifold over the sampled times.
    pub max_transfer: T,
    pub final_transfer: T,
    /// Largest population of `|i>` over the sampled times.
    pub max_auxiliary: T,
    /// Overlap with the effective doublet dynamics (detuning `φ_n` kept) after undoing `U`.
    pub min_fidelity: T,
    pub final_fidelity: T,
    /// Same, against the strictly selective `ℋ₁` (no dynamics unless `n_probe = k`).
    pub final_fidelity_selective: T,
    /// `4|ζ_n|² / (4|ζ_n|² + φ_n²)`.
    pub rabi_bound: T,
    pub norm_error: T,
    pub selectivity_ratio: T,
    pub warnings: Vec<String>,
    pub times: Vec<T>,
    pub transfer: Vec<T>,
}

impl<T: Real> SelectivityReport<T> {
    pub fn infidelity(&self) -> T {
        T::one() - self.final_fidelity
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SelectivityOptions {
    pub n_max: usize,
    pub samples: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for SelectivityOptions {
    fn default() -> Self {
        Self {
            n_max: 15,
            samples: 400,
            rtol: 1e-11,
            atol: 1e-13,
        }
    }
}

/// Doublet amplitudes `(c_{g,n+1}, c_{e,n})` under `ζ_n |g,n+1><e,n| e^{iφt} + h.c.`,
/// starting in `|g,n+1>`.
pub fn doublet_amplitudes<T: Real>(zeta: C<T>, phi: T, t: T) -> (C<T>, C<T>) {
    let half = T::lit(0.5);
    let w = (zeta.norm_sqr() + phi * phi * half * half).sqrt();
    let i = C::new(T::zero(), T::one());
    if w == T::zero() {
        return (cr(T::one()), cr(T::zero()));
    }
    let (s, c) = (w * t).sin_cos();
    let ca = (i * phi * half * t).exp() * (cr(c) - i * (phi * half / w) * s);
    let cb = -i * zeta.conj() * (s / w) * (-i * phi * half * t).exp();
    (ca, cb)
}

/// Integrates the full Raman Hamiltonian from `|g, n_probe+1>` over `[0, t_end]` and
/// compares with the effective dynamics of doublet `n_probe`.
pub fn validate_selectivity<T: Real>(
    k: usize,
    p: &RamanParams<T>,
    n_probe: usize,
    t_end: T,
    opts: &SelectivityOptions,
) -> Result<SelectivityReport<T>> {
    let eff = derive_effective(p)?;
    let scale = [eff.xi, eff.varpi_g, eff.varpi_e, eff.delta, eff.zeta.modulus()]
        .into_iter()
        .fold(T::zero(), |a, b| a.max(b.abs()));
    let tol = T::lit(1e-9) * scale;
    if eff.phi_n(k).abs() > tol {
        return Err(Error::param(
            "raman",
            format!("φ_k = {} is not zero; run solve_selectivity first", eff.phi_n(k)),
        ));
    }
    if n_probe + 2 > opts.n_max {
        return Err(Error::range("n_probe", n_probe, format!("0..={}", opts.n_max.saturating_sub(2))));
    }
    if !(t_end > T::zero()) || opts.samples < 2 {
        return Err(Error::param("t_end", "needs t_end > 0 and at least two samples"));
    }
    let spec = HilbertSpec::with_atom(opts.n_max, 3)?;
    let ham = RamanHamiltonian::new(*p, spec)?;
    let psi0: Vec<C<T>> = crate::fock::basis_vector::<T>(&spec, LEVEL_G, n_probe + 1)?
        .iter()
        .copied()
        .collect();

    let times: Vec<T> = (0..opts.samples)
        .map(|j| t_end * T::lit(j as f64 / (opts.samples - 1) as f64))
        .collect();
    let ode = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        h_max: Some(2.0 * std::f64::consts::PI / (20.0 * p.max_frequency().as_f64())),
        ..Default::default()
    };
    let (states, _) = integrate(|t, y, dy| ham.rhs(t, y, dy), &times, &psi0, &ode)?;

    let zn = eff.zeta_n(n_probe);
    let phi = eff.phi_n(n_probe);
    let (ga, eb) = (spec.index(LEVEL_G, n_probe + 1), spec.index(LEVEL_E, n_probe));
    let d = spec.field_dim();
    let mut rep = SelectivityReport {
        k,
        n_probe,
        t_end,
        max_transfer: T::zero(),
        final_transfer: T::zero(),
        max_auxiliary: T::zero(),
        min_fidelity: T::one(),
        final_fidelity: T::zero(),
        final_fidelity_selective: T::zero(),
        rabi_bound: T::lit(4.0) * zn.norm_sqr() / (T::lit(4.0) * zn.norm_sqr() + phi * phi),
        norm_error: T::zero(),
        selectivity_ratio: eff.selectivity_ratio(k),
        warnings: p.warnings(opts.n_max),
        times: times.clone(),
        transfer: Vec::with_capacity(times.len()),
    };
    for (&t, psi) in times.iter().zip(&states) {
        let norm: T = psi.iter().map(|c| c.norm_sqr()).fold(T::zero(), |a, b| a + b);
        rep.norm_error = rep.norm_error.max((norm.sqrt() - T::one()).abs());
        let pe: T = (0..d).map(|n| psi[spec.index(LEVEL_E, n)].norm_sqr()).fold(T::zero(), |a, b| a + b);
        let pi: T = (0..d).map(|n| psi[spec.index(LEVEL_I, n)].norm_sqr()).fold(T::zero(), |a, b| a + b);
        rep.transfer.push(pe);
        rep.max_transfer = rep.max_transfer.max(pe);
        rep.max_auxiliary = rep.max_auxiliary.max(pi);

        // undo U = exp{−i[(ξ a†a − ϖ_g)σ_gg + ϖ_e σ_ee] t} on the two doublet amplitudes
        let i = C::new(T::zero(), T::one());
        let eg = T::lit((n_probe + 1) as f64) * eff.xi - eff.varpi_g;
        let va = psi[ga] * (i * eg * t).exp();
        let vb = psi[eb] * (i * eff.varpi_e * t).exp();
        let (ca, cb) = doublet_amplitudes(zn, phi, t);
        let f = (ca.conj() * va + cb.conj() * vb).norm_sqr();
        rep.min_fidelity = rep.min_fidelity.min(f);
        rep.final_fidelity = f;
        rep.final_fidelity_selective = if n_probe == k {
            f
        } else {
            va.norm_sqr()
        };
        rep.final_transfer = pe;
    }
    Ok(rep)
}
