//! Closed-form steady photon distribution of the engineered master equation and
//! the regime tests built on it.
//!
//! With `R = (ε+n̄)/(1+n̄)` the steady populations are piecewise geometric:
//!
//! ```text
//! ρ_nn = Rⁿ ρ₀        n ≤ l
//!        Rⁿ A_l ρ₀    l+1 ≤ n ≤ m
//!        Rⁿ B_lm ρ₀   n ≥ m+1
//! A_l  = [γ_l + (l+1)(ε+n̄)γ] / [(l+1)(ε+n̄)γ]
//! B_lm = (m+1)(1+n̄)γ / [γ_m + (m+1)(1+n̄)γ] · A_l
//! ρ₀   = [(1−ε)/(1+n̄)] / [1 − R^{l+1} + A_l(R^{l+1} − R^{m+1}) + B_lm R^{m+1}]
//! ```
//!
//! Every transition changes the photon number by one, so the generator restricted to
//! populations is a birth–death chain and the distribution follows from detailed
//! balance. The Fock case `l = m − 1` is covered: the middle branch is the single
//! index `n = m`.

use crate::error::{Error, Result};
use crate::reservoir::EngineeredRates;
use crate::scalar::Real;

/// Truncation test threshold: `R_{m+1} B / (R_m A) ≤ 0.05`.
pub const TRUNCATION_THRESHOLD: f64 = 0.05;
/// Amplification test threshold: `R_{l+1} A / R_0 ≥ 20`.
pub const AMPLIFICATION_THRESHOLD: f64 = 20.0;

/// Parameters of the piecewise-geometric steady distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSolution<T: Real> {
    pub ratio: T,
    pub a_l: T,
    pub b_lm: T,
    pub rho0: T,
    pub m: usize,
    pub l: usize,
}

impl<T: Real> AnalyticSolution<T> {
    fn weight(&self, n: usize) -> T {
        if n <= self.l {
            T::one()
        } else if n <= self.m {
            self.a_l
        } else {
            self.b_lm
        }
    }

    /// `ρ_nn` on the infinite Fock space.
    pub fn population(&self, n: usize) -> T {
        self.ratio.powi(n as i32) * self.weight(n) * self.rho0
    }

    /// `Σ_{n > n_max} ρ_nn`, summed in closed form.
    pub fn tail_after(&self, n_max: usize) -> T {
        let one = T::one();
        let geometric_from = |k: usize| self.ratio.powi(k as i32) / (one - self.ratio);
        if n_max >= self.m {
            return self.b_lm * self.rho0 * geometric_from(n_max + 1);
        }
        let mut partial = T::zero();
        for n in (n_max + 1)..=self.m {
            partial += self.population(n);
        }
        partial + self.b_lm * self.rho0 * geometric_from(self.m + 1)
    }

    /// `Σ_n ρ_nn` from the three branch sums; equals one up to rounding.
    pub fn total(&self) -> T {
        let one = T::one();
        let r = self.ratio;
        let sum_range = |lo: usize, hi: usize| {
            // Σ_{n=lo}^{hi} Rⁿ
            (r.powi(lo as i32) - r.powi(hi as i32 + 1)) / (one - r)
        };
        self.rho0
            * (sum_range(0, self.l)
                + self.a_l * sum_range(self.l + 1, self.m)
                + self.b_lm * r.powi(self.m as i32 + 1) / (one - r))
    }
}

/// Evaluates the closed-form steady distribution for `l < m`, `ε < 1`.
pub fn analytic_populations<T: Real>(rates: &EngineeredRates<T>) -> Result<AnalyticSolution<T>> {
    rates.validate()?;
    let EngineeredRates {
        gamma_m,
        gamma_l,
        epsilon,
        m,
        l,
        nbar,
        gamma,
    } = *rates;
    if l >= m {
        return Err(Error::param("l", "closed form needs l < m"));
    }
    let one = T::one();
    let up = epsilon + nbar;
    let down = one + nbar;
    let ratio = up / down;
    let l1 = T::lit((l + 1) as f64);
    let m1 = T::lit((m + 1) as f64);
    // ε + n̄ = 0 leaves nothing to amplify: the chain sits in the vacuum
    let a_l = if up > T::zero() {
        (gamma_l + l1 * up * gamma) / (l1 * up * gamma)
    } else {
        one
    };
    let b_lm = m1 * down * gamma / (gamma_m + m1 * down * gamma) * a_l;
    let rl = ratio.powi(l as i32 + 1);
    let rm = ratio.powi(m as i32 + 1);
    let rho0 = ((one - epsilon) / down) / (one - rl + a_l * (rl - rm) + b_lm * rm);
    Ok(AnalyticSolution {
        ratio,
        a_l,
        b_lm,
        rho0,
        m,
        l,
    })
}

/// Populations `ρ_00..ρ_{n_max n_max}` and the mass beyond the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSeries<T: Real> {
    pub populations: Vec<T>,
    pub tail: T,
}

pub fn population_series<T: Real>(sol: &AnalyticSolution<T>, n_max: usize) -> PopulationSeries<T> {
    PopulationSeries {
        populations: (0..=n_max).map(|n| sol.population(n)).collect(),
        tail: sol.tail_after(n_max),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Thermal,
    Truncated,
    Amplified,
    Sliced,
    Fock,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Thermal => "thermal",
            Regime::Truncated => "truncated",
            Regime::Amplified => "amplified",
            Regime::Sliced => "sliced",
            Regime::Fock => "fock",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport<T: Real> {
    /// `R_{m+1} B_lm / (R_m A_l)`; small means the distribution is cut above `m`.
    pub truncation_ratio: T,
    /// `R_{l+1} A_l / R_0`; large means the distribution is lifted above `l`.
    pub amplification_ratio: T,
    pub regime: Regime,
}

pub fn check_conditions<T: Real>(rates: &EngineeredRates<T>) -> Result<RegimeReport<T>> {
    let sol = analytic_populations(rates)?;
    let truncation_ratio = sol.ratio * sol.b_lm / sol.a_l;
    let amplification_ratio = sol.ratio.powi(sol.l as i32 + 1) * sol.a_l;
    let truncated = truncation_ratio <= T::lit(TRUNCATION_THRESHOLD);
    let amplified = amplification_ratio >= T::lit(AMPLIFICATION_THRESHOLD);
    let regime = match (truncated, amplified) {
        (true, true) if sol.m == sol.l + 1 => Regime::Fock,
        (true, true) => Regime::Sliced,
        (true, false) => Regime::Truncated,
        (false, true) => Regime::Amplified,
        (false, false) => Regime::Thermal,
    };
    Ok(RegimeReport {
        truncation_ratio,
        amplification_ratio,
        regime,
    })
}

/// Default truncation: the smallest `n_max ≥ max(2m + 10, 30)` whose cutoff
/// population `ρ_{n_max n_max}` is at most `tail_limit / 2`, capped at `cap`.
pub fn suggested_n_max<T: Real>(rates: &EngineeredRates<T>, tail_limit: f64, cap: usize) -> usize {
    let floor = (2 * rates.m + 10).max(30).max(rates.min_n_max());
    let Ok(sol) = analytic_populations(rates) else {
        return floor;
    };
    let target = T::lit(tail_limit * 0.5);
    (floor..=cap.max(floor))
        .find(|&n| sol.population(n) <= target)
        .unwrap_or(cap.max(floor))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rates(gm: f64, gl: f64, eps: f64, m: usize, l: usize) -> EngineeredRates<f64> {
        EngineeredRates::new(gm, gl, eps, m, l, 0.05, 1.0).unwrap()
    }

    /// Independent oracle: detailed-balance product over the birth–death chain,
    /// built directly from the channel rates and renormalized on a long truncation.
    fn birth_death(r: &EngineeredRates<f64>, n: usize) -> Vec<f64> {
        let mut p = vec![1.0];
        for k in 0..n {
            let up = (r.epsilon + r.nbar) * (k + 1) as f64 + if k == r.l { r.gamma_l } else { 0.0 };
            let dn = (1.0 + r.nbar) * (k + 1) as f64 + if k == r.m { r.gamma_m } else { 0.0 };
            let last = *p.last().unwrap();
            p.push(last * up / dn);
        }
        let s: f64 = p.iter().sum();
        p.iter().map(|x| x / s).collect()
    }

    #[test]
    fn no_engineering_reduces_to_thermal() {
        let sol = analytic_populations(&rates(0.0, 0.0, 0.0, 5, 4)).unwrap();
        assert_eq!(sol.a_l, 1.0);
        assert_eq!(sol.b_lm, 1.0);
        assert!((sol.population(0) - 1.0 / 1.05).abs() < 1e-15);
        let q: f64 = 0.05 / 1.05;
        for n in 0..20 {
            assert!((sol.population(n) - q.powi(n as i32) / 1.05).abs() < 1e-15);
        }
    }

    #[test]
    fn fock_five_values() {
        // frozen from the birth–death oracle (mpmath, 30 digits)
        let sol = analytic_populations(&rates(1e3, 1e3, 0.8, 5, 4)).unwrap();
        assert!((sol.ratio - 0.8095238095).abs() < 1e-10);
        assert!((sol.a_l - 236.2941176).abs() < 1e-6);
        assert!((sol.b_lm - 1.479333142).abs() < 1e-8);
        assert!((sol.rho0 - 0.0113947983509).abs() < 1e-12);
        assert!((sol.population(5) - 0.936068622319).abs() < 1e-11);
        let oracle = birth_death(&rates(1e3, 1e3, 0.8, 5, 4), 400);
        for n in 0..60 {
            assert!((sol.population(n) - oracle[n]).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn fock_ten_values() {
        let sol = analytic_populations(&rates(1e3, 1e3, 0.95, 10, 9)).unwrap();
        assert!((sol.population(10) - 0.735768751762).abs() < 1e-11);
        assert!((sol.population(10).sqrt() - 0.85776964).abs() < 1e-7);
    }

    #[test]
    fn regimes_of_the_figure_scenarios() {
        let fig2 = check_conditions(&rates(1e3, 0.0, 0.8, 5, 0)).unwrap();
        assert_eq!(fig2.regime, Regime::Truncated);
        // R⁶B/(R⁵A) = R·B with A = 1
        assert!((fig2.truncation_ratio - 0.8095238095 * 0.006260558482).abs() < 1e-9);
        let thermal = check_conditions(&rates(0.0, 0.0, 0.8, 5, 4)).unwrap();
        assert_eq!(thermal.regime, Regime::Thermal);
        assert!((thermal.truncation_ratio - 0.8095238095).abs() < 1e-9);
        assert_eq!(check_conditions(&rates(0.0, 1e3, 0.8, 30, 4)).unwrap().regime, Regime::Amplified);
        assert_eq!(check_conditions(&rates(0.0, 1e3, 0.5, 30, 0)).unwrap().regime, Regime::Amplified);
        assert_eq!(check_conditions(&rates(1e3, 1e3, 0.8, 6, 3)).unwrap().regime, Regime::Sliced);
        assert_eq!(check_conditions(&rates(1e3, 1e3, 0.8, 5, 4)).unwrap().regime, Regime::Fock);
    }

    #[test]
    fn series_normalization_and_branch_ratios() {
        let sol = analytic_populations(&rates(1e3, 1e3, 0.8, 6, 3)).unwrap();
        let s = population_series(&sol, 40);
        let sum: f64 = s.populations.iter().sum();
        assert!((sum + s.tail - 1.0).abs() < 1e-12);
        for n in 0..40 {
            if n != sol.l && n != sol.m {
                let q = s.populations[n + 1] / s.populations[n];
                assert!((q - sol.ratio).abs() < 1e-12);
            }
        }
        let slice: f64 = s.populations[4..=6].iter().sum();
        assert!(slice >= 0.95);
        assert!((sol.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fig2_tail() {
        let sol = analytic_populations(&rates(1e3, 0.0, 0.8, 5, 0)).unwrap();
        assert!((sol.tail_after(5) - 0.0024460259).abs() < 1e-9);
        // tail below the seam mixes branches
        let direct: f64 = (3..=5).map(|n| sol.population(n)).sum::<f64>() + sol.tail_after(5);
        assert!((sol.tail_after(2) - direct).abs() < 1e-15);
    }

    #[test]
    fn seam_continuity() {
        let base = rates(1e3, 1e3, 0.6, 7, 3);
        let no_l = analytic_populations(&EngineeredRates { gamma_l: 0.0, ..base }).unwrap();
        assert_eq!(no_l.a_l, 1.0);
        let no_m = analytic_populations(&EngineeredRates { gamma_m: 0.0, ..base }).unwrap();
        assert!((no_m.b_lm - no_m.a_l).abs() < 1e-12 * no_m.a_l);
        let tiny = analytic_populations(&EngineeredRates { gamma_l: 1e-12, ..base }).unwrap();
        assert!((tiny.a_l - 1.0).abs() < 1e-10);
    }

    #[test]
    fn l_at_or_above_m_rejected() {
        let mut r = rates(1.0, 1.0, 0.5, 5, 4);
        r.l = 5;
        assert!(analytic_populations(&r).is_err());
    }

    #[test]
    fn single_precision() {
        let r = EngineeredRates::<f32>::new(1e3, 1e3, 0.8, 5, 4, 0.05, 1.0).unwrap();
        let sol = analytic_populations(&r).unwrap();
        assert!((sol.population(5) - 0.936_068_6).abs() < 1e-5);
    }

    #[test]
    fn suggested_truncation_meets_tail() {
        let r = rates(1e3, 1e3, 0.8, 5, 4);
        let n = suggested_n_max(&r, 1e-8, 2000);
        let sol = analytic_populations(&r).unwrap();
        assert!(n >= 30);
        assert!(sol.population(n) <= 0.5e-8);
        assert!(sol.population(n - 1) > 0.5e-8);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn branch_structure(
                m in 2usize..12,
                dl in 1usize..4,
                lg_m in -2.0f64..3.0,
                lg_l in -2.0f64..3.0,
                eps in 0.0f64..0.95,
                nbar in 0.0f64..0.5,
            ) {
                let l = m.saturating_sub(dl);
                let r = EngineeredRates::new(10f64.powf(lg_m), 10f64.powf(lg_l), eps, m, l, nbar, 1.0).unwrap();
                let sol = analytic_populations(&r).unwrap();
                prop_assert!(sol.a_l >= 1.0);
                prop_assert!(sol.b_lm <= sol.a_l);
                prop_assert!((sol.total() - 1.0).abs() < 1e-12);
                prop_assert!((0..40).all(|n| sol.population(n) >= 0.0));
                let oracle = birth_death(&r, 3000);
                for n in 0..(m + 5) {
                    prop_assert!((sol.population(n) - oracle[n]).abs() < 1e-11);
                }
            }
        }
    }
}
