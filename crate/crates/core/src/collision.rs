//! Repeated-interaction model of the atomic beam.
//!
//! Each atom crosses the cavity for a time `τ`, interacting through `ℋ₁` (ground atoms
//! with the doublet `m`, excited atoms with the doublet `l`) or `ℋ₂` (auxiliary atoms),
//! and is traced out on exit. Thermal cavity loss acts throughout, including during the
//! transits. All maps conserve the coherence offset `q = i − j` of the field, so they are
//! stored as one dense block per offset and only the offsets a state occupies are built.

use std::io::Write;
use std::sync::OnceLock;

use nalgebra::{ComplexField, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::engineering::{resonant_jc, selective_jc};
use crate::error::{Error, Result};
use crate::fock::{annihilation, DensityMatrix, HilbertSpec, StateTolerance};
use crate::lindblad::{bordered_solve, Channel, MasterEquationSpec};
use crate::reservoir::{rates_from_beam, BeamParams, EngineeredRates};
use crate::scalar::{cr, Real, C};
use crate::superop::Superoperator;

/// When atoms enter the cavity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrivals {
    /// One slot every `1 / injection_rate`, species mixed deterministically.
    Regular,
    /// Poisson arrivals at `injection_rate`, species sampled; an atom arriving while
    /// another is inside is dropped.
    Poisson { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Ground,
    Excited,
    Auxiliary,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::Ground, Species::Excited, Species::Auxiliary];

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionConfig<T: Real> {
    pub beam: BeamParams<T>,
    pub m: usize,
    pub l: usize,
    pub n_max: usize,
    pub nbar: T,
    pub gamma: T,
    pub arrivals: Arrivals,
    /// Keep thermal loss on while an atom is inside; otherwise transits are unitary
    /// and the loss acts for the whole period.
    pub dissipation_in_transit: bool,
}

impl<T: Real> CollisionConfig<T> {
    pub fn new(beam: BeamParams<T>, m: usize, l: usize, n_max: usize, nbar: T, gamma: T) -> Result<Self> {
        let cfg = Self {
            beam,
            m,
            l,
            n_max,
            nbar,
            gamma,
            arrivals: Arrivals::Regular,
            dissipation_in_transit: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.beam.validate()?;
        if self.l >= self.m {
            return Err(Error::param("l", "needs l < m"));
        }
        if self.m + 1 > self.n_max && self.beam.p_g > T::zero() {
            return Err(Error::TruncationTooSmall {
                n_max: self.n_max,
                m: self.m,
            });
        }
        if self.l + 1 > self.n_max {
            return Err(Error::range("l", self.l, format!("0..{}", self.n_max)));
        }
        if !(self.nbar >= T::zero()) || !(self.gamma >= T::zero()) {
            return Err(Error::param("nbar/gamma", "must be >= 0"));
        }
        if self.beam.injection_rate * self.beam.tau > T::one() {
            return Err(Error::param(
                "injection_rate",
                "slots shorter than the transit time; at most one atom fits in the cavity",
            ));
        }
        Ok(())
    }

    /// Slot length `1 / injection_rate` (infinite without a beam).
    pub fn period(&self) -> T {
        if self.beam.injection_rate > T::zero() {
            T::one() / self.beam.injection_rate
        } else {
            T::max_value().unwrap_or_else(|| T::lit(f64::MAX))
        }
    }

    pub fn warnings(&self) -> Vec<String> {
        self.beam.warnings()
    }

    /// Lindblad rates the beam coarse-grains to.
    pub fn coarse_grained_rates(&self) -> Result<EngineeredRates<T>> {
        rates_from_beam(&self.beam, self.m, self.l, self.nbar, self.gamma)
    }

    fn probability(&self, s: Species) -> T {
        match s {
            Species::Ground => self.beam.p_g,
            Species::Excited => self.beam.p_e,
            Species::Auxiliary => self.beam.p_i,
        }
    }
}

/// Field pairs `(i, j)` with `i − j = q`, in the order used by the offset blocks.
fn offset_pairs(d: usize, q: i64) -> impl Iterator<Item = (usize, usize)> {
    let (di, dj) = (q.max(0) as usize, (-q).max(0) as usize);
    (0..d - q.unsigned_abs() as usize).map(move |r| (r + di, r + dj))
}

struct Joint<T: Real> {
    spec: HilbertSpec,
    liouvillian: Superoperator<T>,
    start_level: usize,
}

/// Per-offset field maps of the beam.
pub struct CollisionModel<T: Real> {
    cfg: CollisionConfig<T>,
    d: usize,
    field: Superoperator<T>,
    joints: [Option<Joint<T>>; 3],
    transit: Vec<[OnceLock<DMatrix<C<T>>>; 3]>,
    arrival: Vec<OnceLock<DMatrix<C<T>>>>,
    period: Vec<OnceLock<DMatrix<C<T>>>>,
}

fn natural_channels<T: Real>(spec: &HilbertSpec, nbar: T, gamma: T) -> Vec<Channel<T>> {
    let a = annihilation::<T>(spec);
    let ad = a.adjoint();
    vec![
        Channel::new(gamma * (T::one() + nbar), a),
        Channel::new(gamma * nbar, ad),
    ]
}

/// Builds the beam maps for `cfg`.
pub fn collision_map<T: Real>(cfg: &CollisionConfig<T>) -> Result<CollisionModel<T>> {
    CollisionModel::new(cfg.clone())
}

impl<T: Real> CollisionModel<T> {
    pub fn new(cfg: CollisionConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let fspec = HilbertSpec::new(cfg.n_max)?;
        let d = fspec.field_dim();
        let field = MasterEquationSpec::new(fspec, None, natural_channels(&fspec, cfg.nbar, cfg.gamma))?
            .superoperator();
        let jspec = HilbertSpec::with_atom(cfg.n_max, 2)?;
        let zeta = cfg.beam.zeta;
        let mut joints: [Option<Joint<T>>; 3] = [None, None, None];
        for s in Species::ALL {
            if cfg.probability(s) == T::zero() {
                continue;
            }
            let (h, start) = match s {
                Species::Ground => (
                    selective_jc(cfg.m, zeta * T::lit(((cfg.m + 1) as f64).sqrt()), &jspec)?,
                    0,
                ),
                Species::Excited => (
                    selective_jc(cfg.l, zeta * T::lit(((cfg.l + 1) as f64).sqrt()), &jspec)?,
                    1,
                ),
                Species::Auxiliary => (resonant_jc(cfg.beam.lambda_tilde, &jspec)?, 1),
            };
            let channels = if cfg.dissipation_in_transit {
                natural_channels(&jspec, cfg.nbar, cfg.gamma)
            } else {
                Vec::new()
            };
            let liouvillian = MasterEquationSpec::new(jspec, Some(h), channels)?.superoperator();
            joints[s.slot()] = Some(Joint {
                spec: jspec,
                liouvillian,
                start_level: start,
            });
        }
        let n_off = 2 * d - 1;
        Ok(Self {
            cfg,
            d,
            field,
            joints,
            transit: (0..n_off).map(|_| Default::default()).collect(),
            arrival: (0..n_off).map(|_| OnceLock::new()).collect(),
            period: (0..n_off).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn config(&self) -> &CollisionConfig<T> {
        &self.cfg
    }

    pub fn field_dim(&self) -> usize {
        self.d
    }

    fn slot(&self, q: i64) -> usize {
        (q + self.d as i64 - 1) as usize
    }

    /// `exp(t L_nat)` on offset `q`.
    pub fn free_block(&self, q: i64, t: T) -> DMatrix<C<T>> {
        let d = self.d;
        let idx: Vec<usize> = offset_pairs(d, q).map(|(i, j)| i + j * d).collect();
        (self.field.block(&idx) * cr(t)).exp()
    }

    /// One atom of species `s` on offset `q`, atom traced out afterwards.
    pub fn transit_block(&self, s: Species, q: i64) -> Option<&DMatrix<C<T>>> {
        let joint = self.joints[s.slot()].as_ref()?;
        Some(self.transit[self.slot(q)][s.slot()].get_or_init(|| self.build_transit(joint, q)))
    }

    fn build_transit(&self, joint: &Joint<T>, q: i64) -> DMatrix<C<T>> {
        let d = self.d;
        let dd = joint.spec.dim();
        let exc = |a: usize| (a % d + a / d) as i64;
        let mut idx = Vec::new();
        for b in 0..dd {
            for a in 0..dd {
                if exc(a) - exc(b) == q {
                    idx.push(a + b * dd);
                }
            }
        }
        idx.sort_unstable();
        let mut pos = std::collections::HashMap::with_capacity(idx.len());
        for (k, &i) in idx.iter().enumerate() {
            pos.insert(i, k);
        }
        let prop = (joint.liouvillian.block(&idx) * cr(self.cfg.beam.tau)).exp();
        let pairs: Vec<(usize, usize)> = offset_pairs(d, q).collect();
        let n = pairs.len();
        let s0 = joint.start_level * d;
        let mut out = DMatrix::zeros(n, n);
        for (col, &(i, j)) in pairs.iter().enumerate() {
            let src = pos[&((s0 + i) + (s0 + j) * dd)];
            for (row, &(i2, j2)) in pairs.iter().enumerate() {
                let mut acc = cr(T::zero());
                for atom in 0..2 {
                    let a = atom * d;
                    if let Some(&dst) = pos.get(&((a + i2) + (a + j2) * dd)) {
                        acc += prop[(dst, src)];
                    }
                }
                out[(row, col)] = acc;
            }
        }
        out
    }

    /// Averaged single-slot map on offset `q`: the species mixture plus empty slots,
    /// each lasting `τ`.
    pub fn arrival_block(&self, q: i64) -> &DMatrix<C<T>> {
        self.arrival[self.slot(q)].get_or_init(|| {
            let n = self.d - q.unsigned_abs() as usize;
            let mut m = DMatrix::zeros(n, n);
            let mut empty = T::one();
            for s in Species::ALL {
                let p = self.cfg.probability(s);
                if let Some(b) = self.transit_block(s, q) {
                    m += b * cr(p);
                    empty -= p;
                }
            }
            if empty > T::zero() {
                let idle = if self.cfg.dissipation_in_transit {
                    self.free_block(q, self.cfg.beam.tau)
                } else {
                    DMatrix::identity(n, n)
                };
                m += idle * cr(empty);
            }
            m
        })
    }

    /// One full slot of length `1 / injection_rate` on offset `q`.
    pub fn period_block(&self, q: i64) -> &DMatrix<C<T>> {
        self.period[self.slot(q)].get_or_init(|| {
            let rest = if self.cfg.dissipation_in_transit {
                self.cfg.period() - self.cfg.beam.tau
            } else {
                self.cfg.period()
            };
            self.free_block(q, rest) * self.arrival_block(q)
        })
    }

    /// Applies the averaged single-arrival map to `rho`.
    pub fn apply_arrival(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        self.apply_blocks(rho, |q| self.arrival_block(q).clone())
    }

    fn apply_blocks<F>(&self, rho: &DensityMatrix<T>, mut block: F) -> Result<DensityMatrix<T>>
    where
        F: FnMut(i64) -> DMatrix<C<T>>,
    {
        let m = apply_offsets(self.d, rho.matrix(), |q| Some(block(q)))?;
        Ok(DensityMatrix::from_matrix_unchecked(m))
    }

    /// Field state left invariant by one full slot.
    pub fn stationary_state(&self) -> Result<DensityMatrix<T>> {
        if self.cfg.beam.injection_rate == T::zero() {
            return Err(Error::param("injection_rate", "no beam; use the cavity master equation"));
        }
        let p = self.period_block(0);
        let n = self.d;
        let a = p - DMatrix::identity(n, n);
        let all: Vec<usize> = (0..n).collect();
        let x = bordered_solve(&a, &all)
            .ok_or_else(|| Error::NonConvergence("fixed point of the slot map".into()))?;
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = cr(x[k].real());
        }
        DensityMatrix::new_with(m, StateTolerance::default())
    }
}

fn offsets_of<T: Real>(m: &DMatrix<C<T>>) -> Vec<i64> {
    let d = m.nrows();
    let mut seen = vec![false; 2 * d - 1];
    for j in 0..d {
        for i in 0..d {
            if m[(i, j)] != cr(T::zero()) {
                seen[i + d - 1 - j] = true;
            }
        }
    }
    seen.iter()
        .enumerate()
        .filter(|(_, s)| **s)
        .map(|(k, _)| k as i64 - (d as i64 - 1))
        .collect()
}

fn apply_offsets<T, F>(d: usize, rho: &DMatrix<C<T>>, mut block: F) -> Result<DMatrix<C<T>>>
where
    T: Real,
    F: FnMut(i64) -> Option<DMatrix<C<T>>>,
{
    if rho.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho.nrows(),
        });
    }
    let mut out = DMatrix::zeros(d, d);
    for q in offsets_of(rho) {
        let b = block(q).expect("block for occupied offset");
        let pairs: Vec<(usize, usize)> = offset_pairs(d, q).collect();
        let x = DVector::from_iterator(pairs.len(), pairs.iter().map(|&(i, j)| rho[(i, j)]));
        let y = b * x;
        for (k, &(i, j)) in pairs.iter().enumerate() {
            out[(i, j)] = y[k];
        }
    }
    Ok(out)
}

/// Choi matrix `Σ_ij |i><j| ⊗ Φ(|i><j|)` of the averaged single-arrival map.
pub fn choi_matrix<T: Real>(model: &CollisionModel<T>) -> DMatrix<C<T>> {
    let d = model.field_dim();
    let mut choi = DMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let q = i as i64 - j as i64;
            let b = model.arrival_block(q);
            let col = offset_pairs(d, q).position(|p| p == (i, j)).unwrap();
            for (row, (a, c)) in offset_pairs(d, q).enumerate() {
                choi[(i * d + a, j * d + c)] = b[(row, col)];
            }
        }
    }
    choi
}

#[derive(Debug, Clone)]
pub struct BeamTrajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
    /// Atoms that interacted (regular mode counts slots with any atom probability).
    pub arrivals: usize,
    /// Poisson arrivals dropped because the cavity was occupied.
    pub dropped: usize,
    pub seed: Option<u64>,
}

impl<T: Real> BeamTrajectory<T> {
    /// CSV with columns `time,p0,...,pN`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.states.first().map_or(0, |s| s.dim());
        let header: Vec<String> = std::iter::once("time".to_string())
            .chain((0..d).map(|n| format!("p{n}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut line = format!("{:.12e}", t.as_f64());
            for p in s.populations() {
                line.push_str(&format!(",{:.12e}", p.as_f64()));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

fn pow_block<T: Real>(b: &DMatrix<C<T>>, mut k: u64) -> DMatrix<C<T>> {
    let n = b.nrows();
    let mut acc = DMatrix::identity(n, n);
    let mut base = b.clone();
    while k > 0 {
        if k & 1 == 1 {
            acc = &acc * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// Runs the beam from `rho0` up to `t_end`, recording `samples + 1` states.
///
/// Regular arrivals record at whole slots (the sample spacing is rounded up to a slot
/// multiple) and jump between records by repeated squaring of the slot map.
pub fn simulate_beam<T: Real>(
    cfg: &CollisionConfig<T>,
    rho0: &DensityMatrix<T>,
    t_end: T,
    samples: usize,
) -> Result<BeamTrajectory<T>> {
    let model = CollisionModel::new(cfg.clone())?;
    simulate_with(&model, rho0, t_end, samples)
}

pub fn simulate_with<T: Real>(
    model: &CollisionModel<T>,
    rho0: &DensityMatrix<T>,
    t_end: T,
    samples: usize,
) -> Result<BeamTrajectory<T>> {
    let cfg = model.config();
    let d = model.field_dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho0.dim(),
        });
    }
    if !(t_end >= T::zero()) || samples == 0 {
        return Err(Error::param("t_end/samples", "need t_end >= 0 and samples >= 1"));
    }
    let tol = StateTolerance {
        trace: 1e-8,
        hermiticity: 1e-9,
        min_eigenvalue: 1e-8,
    };
    let no_beam = cfg.beam.injection_rate == T::zero() || cfg.beam.p_g + cfg.beam.p_e + cfg.beam.p_i == T::zero();
    match cfg.arrivals {
        _ if no_beam => {
            let dt = t_end / T::lit(samples as f64);
            let mut cache = std::collections::BTreeMap::new();
            let mut rho = rho0.matrix().clone();
            let mut traj = new_traj(rho0, None);
            for j in 1..=samples {
                rho = apply_offsets(d, &rho, |q| {
                    Some(cache.entry(q).or_insert_with(|| model.free_block(q, dt)).clone())
                })?;
                traj.times.push(dt * T::lit(j as f64));
                traj.states.push(DensityMatrix::new_with(rho.clone(), tol)?);
            }
            Ok(traj)
        }
        Arrivals::Regular => {
            let period = cfg.period();
            let total = (t_end / period).floor().to_u64().unwrap_or(0);
            let per = total.div_ceil(samples as u64).max(1);
            let mut cache = std::collections::BTreeMap::new();
            let mut rho = rho0.matrix().clone();
            let mut traj = new_traj(rho0, None);
            let mut done = 0u64;
            while done < total {
                let step = per.min(total - done);
                rho = apply_offsets(d, &rho, |q| {
                    Some(
                        cache
                            .entry((q, step))
                            .or_insert_with(|| pow_block(model.period_block(q), step))
                            .clone(),
                    )
                })?;
                done += step;
                traj.arrivals += step as usize;
                traj.times.push(period * T::lit(done as f64));
                traj.states.push(DensityMatrix::new_with(rho.clone(), tol)?);
            }
            Ok(traj)
        }
        Arrivals::Poisson { seed } => simulate_poisson(model, rho0, t_end, samples, seed, tol),
    }
}

fn new_traj<T: Real>(rho0: &DensityMatrix<T>, seed: Option<u64>) -> BeamTrajectory<T> {
    BeamTrajectory {
        times: vec![T::zero()],
        states: vec![rho0.clone()],
        arrivals: 0,
        dropped: 0,
        seed,
    }
}

fn simulate_poisson<T: Real>(
    model: &CollisionModel<T>,
    rho0: &DensityMatrix<T>,
    t_end: T,
    samples: usize,
    seed: u64,
    tol: StateTolerance,
) -> Result<BeamTrajectory<T>> {
    let cfg = model.config();
    let d = model.field_dim();
    let tau = cfg.beam.tau;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wait = Exp::new(cfg.beam.injection_rate.as_f64())
        .map_err(|e| Error::param("injection_rate", e.to_string()))?;
    let mut traj = new_traj(rho0, Some(seed));
    let mut rho = rho0.matrix().clone();
    let mut t = T::zero();
    let mut next = T::lit(wait.sample(&mut rng));
    let dt_sample = t_end / T::lit(samples as f64);
    let free = |rho: &DMatrix<C<T>>, dt: T| apply_offsets(d, rho, |q| Some(model.free_block(q, dt)));
    for j in 1..=samples {
        let t_rec = dt_sample * T::lit(j as f64);
        while next + tau <= t_rec {
            let u: f64 = rng.random();
            let atom = pick_species(cfg, u).filter(|&s| model.transit_block(s, 0).is_some());
            if let Some(s) = atom {
                rho = free(&rho, next - t)?;
                rho = apply_offsets(d, &rho, |q| model.transit_block(s, q).cloned())?;
                if !cfg.dissipation_in_transit {
                    rho = free(&rho, tau)?;
                }
                t = next + tau;
                traj.arrivals += 1;
            }
            next = next + T::lit(wait.sample(&mut rng));
            while next < t {
                traj.dropped += 1;
                next = next + T::lit(wait.sample(&mut rng));
            }
        }
        rho = free(&rho, t_rec - t)?;
        t = t_rec;
        traj.times.push(t_rec);
        traj.states.push(DensityMatrix::new_with(rho.clone(), tol)?);
    }
    Ok(traj)
}

fn pick_species<T: Real>(cfg: &CollisionConfig<T>, u: f64) -> Option<Species> {
    let mut acc = 0.0;
    for s in Species::ALL {
        acc += cfg.probability(s).as_f64();
        if u < acc {
            return Some(s);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{fock_state, thermal_state};
    use crate::lindblad::{evolve, EvolveOptions};
    use crate::reservoir::build_master_equation;

    fn beam(rate: f64, p: (f64, f64, f64), tau: f64, zeta: f64, lt: f64) -> BeamParams<f64> {
        BeamParams::new(rate, p, tau, cr(zeta), cr(lt)).unwrap()
    }

    fn random_state(d: usize, seed: u64) -> DensityMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::<C<f64>>::from_fn(d, d, |_, _| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let m = &g * g.adjoint();
        let tr = m.trace();
        DensityMatrix::new(m / tr).unwrap()
    }

    #[test]
    fn empty_beam_is_identity() {
        let b = beam(10.0, (0.0, 0.0, 0.0), 0.01, 1.0, 1.0);
        let mut cfg = CollisionConfig::new(b, 3, 2, 6, 0.1, 1.0).unwrap();
        cfg.dissipation_in_transit = false;
        let model = CollisionModel::new(cfg).unwrap();
        let rho = random_state(7, 1);
        let out = model.apply_arrival(&rho).unwrap();
        assert!((out.matrix() - rho.matrix()).camax() < 1e-15);
    }

    #[test]
    fn half_rabi_period_moves_the_doublet() {
        let m = 3;
        let tau = 0.5;
        let zeta = std::f64::consts::PI / (2.0 * tau * ((m + 1) as f64).sqrt());
        let b = beam(1.0, (1.0, 0.0, 0.0), tau, zeta, 0.0);
        let mut cfg = CollisionConfig::new(b, m, 1, 6, 0.0, 0.0).unwrap();
        cfg.dissipation_in_transit = false;
        let model = CollisionModel::new(cfg).unwrap();
        let rho = fock_state::<f64>(m + 1, &HilbertSpec::new(6).unwrap()).unwrap();
        let out = model.apply_arrival(&rho).unwrap();
        assert!((out.populations()[m] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_preserving_and_completely_positive() {
        let b = beam(20.0, (0.3, 0.3, 0.3), 0.02, 2.0, 3.0);
        let cfg = CollisionConfig::new(b, 3, 1, 5, 0.2, 1.5).unwrap();
        let model = CollisionModel::new(cfg).unwrap();
        for seed in 0..5 {
            let rho = random_state(6, seed);
            let out = model.apply_arrival(&rho).unwrap();
            assert!((out.trace() - rho.trace()).norm() < 1e-12);
        }
        let choi = choi_matrix(&model);
        let min = choi.symmetric_eigenvalues().min();
        assert!(min >= -1e-9, "{min}");
    }

    #[test]
    fn selective_atoms_stay_in_their_doublet() {
        let b = beam(1.0, (0.5, 0.5, 0.0), 0.3, 0.9, 0.0);
        let mut cfg = CollisionConfig::new(b, 4, 2, 7, 0.0, 0.0).unwrap();
        cfg.dissipation_in_transit = false;
        let model = CollisionModel::new(cfg).unwrap();
        let spec = HilbertSpec::new(7).unwrap();
        for n in [0usize, 1, 6, 7] {
            let out = model.apply_arrival(&fock_state::<f64>(n, &spec).unwrap()).unwrap();
            assert!((out.populations()[n] - 1.0).abs() < 1e-12, "n = {n}");
        }
        let out = model.apply_arrival(&fock_state::<f64>(5, &spec).unwrap()).unwrap();
        let p = out.populations();
        assert!((p[4] + p[5] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_arrivals_follow_the_cavity_equation() {
        let b = beam(0.0, (0.0, 0.0, 0.0), 0.01, 1.0, 1.0);
        let cfg = CollisionConfig::new(b, 3, 2, 8, 0.1, 1.0).unwrap();
        let spec = HilbertSpec::new(8).unwrap();
        let rho0 = fock_state::<f64>(4, &spec).unwrap();
        let traj = simulate_beam(&cfg, &rho0, 2.0, 4).unwrap();
        let rates = EngineeredRates::new(0.0, 0.0, 0.0, 3, 2, 0.1, 1.0).unwrap();
        let me = build_master_equation(&rates, &spec).unwrap();
        let reference = evolve(&me, &rho0, &traj.times, &EvolveOptions::default()).unwrap();
        for (a, b) in traj.states.iter().zip(&reference.states) {
            assert!(a.trace_distance(b).unwrap() < 1e-6);
        }
    }

    #[test]
    fn stationary_state_is_fixed() {
        let b = beam(50.0, (0.4, 0.4, 0.2), 0.01, 3.0, 4.0);
        let cfg = CollisionConfig::new(b, 3, 2, 8, 0.05, 1.0).unwrap();
        let model = CollisionModel::new(cfg).unwrap();
        let ss = model.stationary_state().unwrap();
        let once = model.apply_blocks(&ss, |q| model.period_block(q).clone()).unwrap();
        assert!(ss.trace_distance(&once).unwrap() < 1e-12);
    }

    #[test]
    fn poisson_runs_are_seeded() {
        let b = beam(40.0, (0.4, 0.3, 0.3), 0.01, 3.0, 4.0);
        let mut cfg = CollisionConfig::new(b, 3, 2, 6, 0.05, 1.0).unwrap();
        cfg.arrivals = Arrivals::Poisson { seed: 7 };
        let rho0 = thermal_state::<f64>(0.05, &HilbertSpec::new(6).unwrap()).unwrap();
        let a = simulate_beam(&cfg, &rho0, 1.0, 5).unwrap();
        let b2 = simulate_beam(&cfg, &rho0, 1.0, 5).unwrap();
        assert!(a.arrivals > 10);
        for (x, y) in a.states.iter().zip(&b2.states) {
            assert_eq!(x.matrix(), y.matrix());
        }
        cfg.arrivals = Arrivals::Poisson { seed: 8 };
        let c = simulate_beam(&cfg, &rho0, 1.0, 5).unwrap();
        assert!(c.states.last().unwrap().matrix() != a.states.last().unwrap().matrix());
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("time,p0,p1"));
        assert_eq!(text.lines().count(), 7);
    }
}
