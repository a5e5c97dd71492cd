//! Engineered reservoir rates and the full cavity generator built from them.
//!
//! Rates are in units of the cavity damping `γ` unless a caller picks otherwise;
//! nothing in this module assumes `γ = 1`.

use nalgebra::ComplexField;

use crate::engineering::{derive_effective, RamanParams};
use crate::error::{Error, Result};
use crate::fock::{annihilation, selective_lowering, HilbertSpec};
use crate::lindblad::{Channel, MasterEquationSpec};
use crate::scalar::{Real, C};

/// Rates of the engineered master equation plus the natural cavity bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineeredRates<T: Real> {
    /// Selective emission `|m+1> → |m>`.
    pub gamma_m: T,
    /// Selective absorption `|l> → |l+1>`.
    pub gamma_l: T,
    /// Non-selective absorption relative to `gamma`.
    pub epsilon: T,
    pub m: usize,
    pub l: usize,
    pub nbar: T,
    pub gamma: T,
}

impl<T: Real> EngineeredRates<T> {
    pub fn new(
        gamma_m: T,
        gamma_l: T,
        epsilon: T,
        m: usize,
        l: usize,
        nbar: T,
        gamma: T,
    ) -> Result<Self> {
        let r = Self {
            gamma_m,
            gamma_l,
            epsilon,
            m,
            l,
            nbar,
            gamma,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |x: T| x.is_finite() && x >= T::zero();
        if !finite_nonneg(self.gamma_m) {
            return Err(Error::param("gamma_m", format!("{}", self.gamma_m)));
        }
        if !finite_nonneg(self.gamma_l) {
            return Err(Error::param("gamma_l", format!("{}", self.gamma_l)));
        }
        if !finite_nonneg(self.nbar) {
            return Err(Error::param("nbar", format!("{}", self.nbar)));
        }
        if !(self.gamma.is_finite() && self.gamma > T::zero()) {
            return Err(Error::param("gamma", format!("must be > 0, got {}", self.gamma)));
        }
        if !finite_nonneg(self.epsilon) {
            return Err(Error::param("epsilon", format!("{}", self.epsilon)));
        }
        if self.epsilon >= T::one() {
            return Err(Error::NoSteadyState(self.epsilon.as_f64()));
        }
        if self.l >= self.m {
            return Err(Error::param(
                "l",
                format!("need l < m (l = m - 1 for a Fock target), got l = {}, m = {}", self.l, self.m),
            ));
        }
        Ok(())
    }

    /// `γ̃ = εγ`.
    pub fn gamma_tilde(&self) -> T {
        self.epsilon * self.gamma
    }

    /// Smallest truncation accepted by [`build_master_equation`].
    pub fn min_n_max(&self) -> usize {
        if self.gamma_m > T::zero() {
            self.m + 3
        } else {
            self.l + 1
        }
    }
}

/// Atomic beam feeding the cavity one atom at a time.
///
/// Atoms arrive at `injection_rate`; each is prepared in `g`, `e` or `i` with
/// probabilities `p_g`, `p_e`, `p_i` (the remainder are empty slots), so the
/// species arrival rates are `r_s = injection_rate · p_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams<T: Real> {
    pub injection_rate: T,
    pub p_g: T,
    pub p_e: T,
    pub p_i: T,
    /// Transit time of one atom through the mode.
    pub tau: T,
    /// Effective selective coupling `ζ` (the target doublet adds `√(k+1)`).
    pub zeta: C<T>,
    /// Resonant coupling of the absorption atoms.
    pub lambda_tilde: C<T>,
}

impl<T: Real> BeamParams<T> {
    pub fn new(
        injection_rate: T,
        (p_g, p_e, p_i): (T, T, T),
        tau: T,
        zeta: C<T>,
        lambda_tilde: C<T>,
    ) -> Result<Self> {
        let b = Self {
            injection_rate,
            p_g,
            p_e,
            p_i,
            tau,
            zeta,
            lambda_tilde,
        };
        b.validate()?;
        Ok(b)
    }

    /// Beam specified by per-species arrival rates; every slot carries an atom.
    pub fn from_species_rates(
        r_g: T,
        r_e: T,
        r_i: T,
        tau: T,
        zeta: C<T>,
        lambda_tilde: C<T>,
    ) -> Result<Self> {
        let total = r_g + r_e + r_i;
        if !(total > T::zero()) {
            return Self::new(T::zero(), (T::zero(), T::zero(), T::zero()), tau, zeta, lambda_tilde);
        }
        Self::new(total, (r_g / total, r_e / total, r_i / total), tau, zeta, lambda_tilde)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_g", self.p_g), ("p_e", self.p_e), ("p_i", self.p_i)] {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::param(name, format!("must lie in [0, 1], got {p}")));
            }
        }
        if self.p_g + self.p_e + self.p_i > T::one() + T::tol(1e-12) {
            return Err(Error::param("p", "p_g + p_e + p_i exceeds 1"));
        }
        if !(self.injection_rate >= T::zero() && self.injection_rate.is_finite()) {
            return Err(Error::param("injection_rate", format!("{}", self.injection_rate)));
        }
        if !(self.tau > T::zero() && self.tau.is_finite()) {
            return Err(Error::param("tau", format!("must be > 0, got {}", self.tau)));
        }
        Ok(())
    }

    pub fn r_g(&self) -> T {
        self.injection_rate * self.p_g
    }

    pub fn r_e(&self) -> T {
        self.injection_rate * self.p_e
    }

    pub fn r_i(&self) -> T {
        self.injection_rate * self.p_i
    }

    /// Non-fatal violations of the weak-coupling and one-atom-at-a-time assumptions.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let lt = self.lambda_tilde.modulus() * self.tau;
        if lt > T::lit(0.1) {
            w.push(format!("|lambda_tilde| tau = {lt} exceeds 0.1 (weak coupling)"));
        }
        let occ = self.injection_rate * self.tau;
        if occ > T::lit(0.5) {
            w.push(format!("injection_rate * tau = {occ} exceeds 0.5 (atom overlap)"));
        }
        w
    }
}

/// Coarse-grained rates `γ_m = r_g(ζ_m τ)²`, `γ_l = r_e(ζ_l τ)²`, `γ̃ = r_i(λ̃τ)²`
/// with `ζ_k = √(k+1) ζ`.
pub fn rates_from_beam<T: Real>(
    beam: &BeamParams<T>,
    m: usize,
    l: usize,
    nbar: T,
    gamma: T,
) -> Result<EngineeredRates<T>> {
    beam.validate()?;
    let zt = beam.zeta.modulus() * beam.tau;
    let zm = T::lit((m + 1) as f64).sqrt() * zt;
    let zl = T::lit((l + 1) as f64).sqrt() * zt;
    let lt = beam.lambda_tilde.modulus() * beam.tau;
    let gamma_tilde = beam.r_i() * lt * lt;
    if !(gamma > T::zero()) {
        return Err(Error::param("gamma", "must be > 0"));
    }
    EngineeredRates::new(
        beam.r_g() * zm * zm,
        beam.r_e() * zl * zl,
        gamma_tilde / gamma,
        m,
        l,
        nbar,
        gamma,
    )
}

/// Engineered channels plus thermal cavity loss, in this fixed order:
/// `(γ_m, a_m)`, `(γ_l, a_l†)`, `(γ̃, a†)`, `(γ(1+n̄), a)`, `(γn̄, a†)`.
/// The Hamiltonian vanishes (interaction picture).
pub fn build_master_equation<T: Real>(
    rates: &EngineeredRates<T>,
    spec: &HilbertSpec,
) -> Result<MasterEquationSpec<T>> {
    rates.validate()?;
    let n_max = spec.n_max();
    if n_max < rates.min_n_max() {
        return Err(Error::TruncationTooSmall { n_max, m: rates.m });
    }
    let a = annihilation::<T>(spec);
    let ad = a.adjoint();
    // an inert selective index may sit at the cutoff
    let a_m = if rates.m < n_max {
        selective_lowering::<T>(rates.m, spec)?
    } else {
        crate::fock::Operator::zeros(spec.dim(), format!("a_{}", rates.m))
    };
    let a_l_dag = selective_lowering::<T>(rates.l, spec)?.adjoint();
    let g = rates.gamma;
    let channels = vec![
        Channel::new(rates.gamma_m, a_m),
        Channel::new(rates.gamma_l, a_l_dag),
        Channel::new(rates.gamma_tilde(), ad.clone().with_label("a† (engineered)")),
        Channel::new(g * (T::one() + rates.nbar), a),
        Channel::new(g * rates.nbar, ad.with_label("a† (thermal)")),
    ];
    MasterEquationSpec::new(*spec, None, channels)
}

/// `ħ / k_B` in kelvin seconds.
pub const HBAR_OVER_KB: f64 = 7.638_232_577_577_646e-12;

/// Bath temperature (kelvin) for mean occupation `nbar` of a mode at angular
/// frequency `omega` (rad/s): `T = ħω / (k_B ln[(1+n̄)/n̄])`. `nbar = 0` maps to 0 K.
pub fn nbar_temperature<T: Real>(nbar: T, omega: T) -> Result<T> {
    if !(omega > T::zero()) {
        return Err(Error::param("omega", "must be > 0"));
    }
    if !(nbar >= T::zero()) {
        return Err(Error::param("nbar", "must be >= 0"));
    }
    if nbar == T::zero() {
        return Ok(T::zero());
    }
    Ok(T::lit(HBAR_OVER_KB) * omega / ((T::one() + nbar) / nbar).ln())
}

/// Inverse of [`nbar_temperature`]: Bose–Einstein occupation at `temperature`.
pub fn temperature_nbar<T: Real>(temperature: T, omega: T) -> Result<T> {
    if !(omega > T::zero()) {
        return Err(Error::param("omega", "must be > 0"));
    }
    if !(temperature >= T::zero()) {
        return Err(Error::param("temperature", "must be >= 0"));
    }
    if temperature == T::zero() {
        return Ok(T::zero());
    }
    let x = T::lit(HBAR_OVER_KB) * omega / temperature;
    Ok(T::one() / x.exp_m1())
}

/// Cavity-QED constants used for dimensionful feasibility reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalPreset {
    /// Atom–cavity coupling (Hz).
    pub lambda: f64,
    /// Cavity damping (Hz).
    pub gamma: f64,
}

/// Microwave cavity QED: `λ ≈ 5×10⁵ Hz`, `γ ≈ 7.5 Hz`.
pub const MICROWAVE_CQED: PhysicalPreset = PhysicalPreset {
    lambda: 5e5,
    gamma: 7.5,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Warn,
}

/// One hierarchy condition: `ratio` must not exceed `limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityItem {
    pub name: &'static str,
    pub ratio: f64,
    pub limit: f64,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub items: Vec<FeasibilityItem>,
    /// `|ζ_k| τ` at the target doublet.
    pub zeta_k_tau: f64,
}

impl FeasibilityReport {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.status == CheckStatus::Pass)
    }

    pub fn item(&self, name: &str) -> Option<&FeasibilityItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

fn item(name: &'static str, ratio: f64, limit: f64) -> FeasibilityItem {
    // a hair of slack so that a hierarchy sitting exactly on the limit passes
    let status = if ratio <= limit * (1.0 + 1e-9) {
        CheckStatus::Pass
    } else {
        CheckStatus::Warn
    };
    FeasibilityItem {
        name,
        ratio,
        limit,
        status,
    }
}

/// Checks the parameter hierarchies behind the effective description for target
/// doublet `k` on a field truncated at `n_max`. Report only; never fails.
///
/// * `dispersive`: `|λ|√(n_max+1) / Δ ≤ 0.1`
/// * `laser_1`, `laser_2`: `|Ω_j| / |Δ_j| ≤ 0.1`
/// * `selectivity`: `√(k+2)|ζ| / ξ ≤ 0.1`
/// * `weak_coupling`: `|λ̃| τ ≤ 0.1`
pub fn feasibility_check<T: Real>(
    beam: &BeamParams<T>,
    raman: &RamanParams<T>,
    k: usize,
    n_max: usize,
) -> FeasibilityReport {
    let lam = raman.lambda.modulus().as_f64();
    let mut items = vec![
        item(
            "dispersive",
            lam * ((n_max + 1) as f64).sqrt() / raman.delta.as_f64().abs(),
            0.1,
        ),
        item(
            "laser_1",
            raman.omega1.modulus().as_f64() / raman.delta1.as_f64().abs(),
            0.1,
        ),
        item(
            "laser_2",
            raman.omega2.modulus().as_f64() / raman.delta2.as_f64().abs(),
            0.1,
        ),
    ];
    let mut zeta_k_tau = f64::NAN;
    if let Ok(eff) = derive_effective(raman) {
        let zeta = eff.zeta.modulus().as_f64();
        items.push(item(
            "selectivity",
            ((k + 2) as f64).sqrt() * zeta / eff.xi.as_f64().abs(),
            0.1,
        ));
        zeta_k_tau = ((k + 1) as f64).sqrt() * zeta * beam.tau.as_f64();
    }
    items.push(item(
        "weak_coupling",
        beam.lambda_tilde.modulus().as_f64() * beam.tau.as_f64(),
        0.1,
    ));
    FeasibilityReport { items, zeta_k_tau }
}
