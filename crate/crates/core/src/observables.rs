//! Photon statistics, Fock-state fidelity and the Wigner function.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::scalar::{cr, Real, C};

/// Smallest accepted points per axis.
pub const MIN_RESOLUTION: usize = 32;
/// `min W` below this flags a nonclassical state.
pub const NEGATIVITY_THRESHOLD: f64 = -1e-3;

/// Phase-space window `x = Re α`, `p = Im α`, sampled on `resolution` points per axis
/// including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    pub resolution: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_range: (-6.0, 6.0),
            p_range: (-6.0, 6.0),
            resolution: 201,
        }
    }
}

impl GridSpec {
    pub fn square(half_width: f64, resolution: usize) -> Self {
        Self {
            x_range: (-half_width, half_width),
            p_range: (-half_width, half_width),
            resolution,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.resolution < MIN_RESOLUTION {
            return Err(Error::range("resolution", self.resolution, format!(">= {MIN_RESOLUTION}")));
        }
        for (name, (a, b)) in [("x_range", self.x_range), ("p_range", self.p_range)] {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::param(name, "needs a finite interval with min < max"));
            }
        }
        Ok(())
    }

    pub fn xs(&self) -> Vec<f64> {
        axis(self.x_range, self.resolution)
    }

    pub fn ps(&self) -> Vec<f64> {
        axis(self.p_range, self.resolution)
    }

    fn cell(&self) -> f64 {
        let r = (self.resolution - 1) as f64;
        (self.x_range.1 - self.x_range.0) / r * (self.p_range.1 - self.p_range.0) / r
    }
}

fn axis((a, b): (f64, f64), n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Sampled Wigner function. `values[(ix, ip)]` holds `W(x_ix + i p_ip)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid<T: Real> {
    pub spec: GridSpec,
    pub values: DMatrix<T>,
    pub min_value: T,
    pub max_value: T,
    /// Riemann sum of `W`.
    pub integral: T,
    /// Riemann sum of `|W|` minus one.
    pub negativity_volume: T,
    /// Largest imaginary part met while summing; zero up to rounding for Hermitian `ρ`.
    pub imag_residue: T,
}

impl<T: Real> WignerGrid<T> {
    /// CSV with columns `x,p,W`, `x` varying slowest.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,p,W")?;
        let (xs, ps) = (self.spec.xs(), self.spec.ps());
        for (ix, x) in xs.iter().enumerate() {
            for (ip, p) in ps.iter().enumerate() {
                writeln!(w, "{x:.6},{p:.6},{:.12e}", self.values[(ix, ip)].as_f64())?;
            }
        }
        Ok(())
    }

    /// Dense matrix, one row per `p` (ascending) and one column per `x`, after a header
    /// line `# x_min x_max p_min p_max resolution`.
    pub fn write_matrix<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let s = &self.spec;
        writeln!(
            w,
            "# {} {} {} {} {}",
            s.x_range.0, s.x_range.1, s.p_range.0, s.p_range.1, s.resolution
        )?;
        for ip in 0..s.resolution {
            let row: Vec<String> = (0..s.resolution)
                .map(|ix| format!("{:.12e}", self.values[(ix, ip)].as_f64()))
                .collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Fills `out[(m, n)] = <m|D(β)|n>` for `m, n < d`.
///
/// Along each offset `k = m − n ≥ 0` the element is `c_k h_n` with the coherent amplitude
/// `c_k = e^{−|β|²/2} βᵏ/√k!` and `h_n = √(k! n!/(n+k)!) Lₙ⁽ᵏ⁾(|β|²)`, which obeys
/// `h_{n+1} = [(2n+1+k−x) h_n − √(n(n+k)) h_{n−1}] / √((n+1)(n+1+k))`, `h_0 = 1`.
/// Elements above the diagonal follow from `<m|D(β)|n> = conj(<n|D(−β)|m>)`.
pub fn displacement_elements<T: Real>(beta: C<T>, d: usize, out: &mut DMatrix<C<T>>) {
    displacement_offsets(beta, d, &vec![true; d], out);
}

/// As [`displacement_elements`], restricted to the offsets `|m − n|` flagged in `wanted`.
fn displacement_offsets<T: Real>(beta: C<T>, d: usize, wanted: &[bool], out: &mut DMatrix<C<T>>) {
    let x = beta.norm_sqr();
    let half = T::lit(0.5);
    let sqrt = |v: usize| T::lit(v as f64).sqrt();
    let mut c = cr((-x * half).exp());
    let mut c_neg = c;
    for k in 0..d {
        if wanted[k] {
            let (mut h_prev, mut h) = (T::zero(), T::one());
            for n in 0..d - k {
                out[(n + k, n)] = c * h;
                if k > 0 {
                    out[(n, n + k)] = (c_neg * h).conj();
                }
                let next = ((T::lit((2 * n + 1 + k) as f64) - x) * h - sqrt(n * (n + k)) * h_prev)
                    / (sqrt(n + 1) * sqrt(n + 1 + k));
                h_prev = h;
                h = next;
            }
        }
        c = c * beta / sqrt(k + 1);
        c_neg = c_neg * (-beta) / sqrt(k + 1);
    }
}

/// `W(α) = (2/π) Tr[ρ D(α) Π D(α)†] = (2/π) Σ_{mn} ρ_nm (−1)ⁿ <m|D(2α)|n>`.
pub fn wigner<T: Real>(rho: &DensityMatrix<T>, spec: &GridSpec) -> Result<WignerGrid<T>> {
    spec.validate()?;
    let d = rho.dim();
    let r = rho.matrix();
    // columns with any weight; keeps diagonal states cheap
    let band: Vec<Vec<usize>> = (0..d)
        .map(|n| (0..d).filter(|&m| r[(n, m)] != cr(T::zero())).collect())
        .collect();
    let top = (0..d).rev().find(|&n| !band[n].is_empty()).map_or(1, |n| n + 1);
    let top = band.iter().flatten().copied().max().map_or(top, |m| top.max(m + 1));
    let mut wanted = vec![false; top];
    for (n, cols) in band.iter().enumerate() {
        for &m in cols {
            wanted[m.abs_diff(n)] = true;
        }
    }

    let two_pi = T::lit(2.0) / T::pi();
    let (xs, ps) = (spec.xs(), spec.ps());
    let res = spec.resolution;
    let mut values = DMatrix::zeros(res, res);
    let mut table = DMatrix::zeros(top, top);
    let mut imag = T::zero();
    for (ix, &x) in xs.iter().enumerate() {
        for (ip, &p) in ps.iter().enumerate() {
            let beta = C::new(T::lit(2.0 * x), T::lit(2.0 * p));
            displacement_offsets(beta, top, &wanted, &mut table);
            let mut acc = cr(T::zero());
            for n in 0..top {
                let sign = if n % 2 == 0 { T::one() } else { -T::one() };
                let mut row = cr(T::zero());
                for &m in &band[n] {
                    row += r[(n, m)] * table[(m, n)];
                }
                acc += row * sign;
            }
            imag = imag.max(acc.im.abs() * two_pi);
            values[(ix, ip)] = acc.re * two_pi;
        }
    }
    let cell = T::lit(spec.cell());
    let mut min_value = T::max_value().unwrap_or_else(T::one);
    let mut max_value = -min_value;
    let (mut sum, mut abs_sum) = (T::zero(), T::zero());
    for &w in values.iter() {
        min_value = min_value.min(w);
        max_value = max_value.max(w);
        sum += w;
        abs_sum += w.abs();
    }
    Ok(WignerGrid {
        spec: *spec,
        values,
        min_value,
        max_value,
        integral: sum * cell,
        negativity_volume: abs_sum * cell - T::one(),
        imag_residue: imag,
    })
}

/// Wigner function of a diagonal state from `W(α) = (2/π) e^{−2|α|²} Σ_n ρ_nn (−1)ⁿ Lₙ(4|α|²)`.
pub fn wigner_diagonal<T: Real>(populations: &[T], alpha: C<T>) -> T {
    let r2 = alpha.norm_sqr();
    let x = T::lit(4.0) * r2;
    let (mut l0, mut l1) = (T::one(), T::one() - x);
    let mut acc = T::zero();
    for (n, &p) in populations.iter().enumerate() {
        let ln = match n {
            0 => l0,
            1 => l1,
            _ => {
                let nf = T::lit(n as f64);
                let l2 = ((T::lit(2.0) * nf - T::one() - x) * l1 - (nf - T::one()) * l0) / nf;
                l0 = l1;
                l1 = l2;
                l2
            }
        };
        let sign = if n % 2 == 0 { T::one() } else { -T::one() };
        acc += sign * p * ln;
    }
    T::lit(2.0) / T::pi() * (-T::lit(2.0) * r2).exp() * acc
}

/// Both fidelity conventions for the pure target `|n>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockFidelity<T: Real> {
    pub n: usize,
    /// `√<n|ρ|n>`: the general state fidelity for a pure target.
    pub sqrt: T,
    /// `<n|ρ|n>`.
    pub overlap: T,
}

pub fn fock_fidelity<T: Real>(rho: &DensityMatrix<T>, n: usize) -> Result<FockFidelity<T>> {
    if n >= rho.dim() {
        return Err(Error::range("n", n, format!("0..{}", rho.dim())));
    }
    let overlap = rho.matrix()[(n, n)].re.max(T::zero()).min(T::one());
    Ok(FockFidelity {
        n,
        sqrt: overlap.sqrt(),
        overlap,
    })
}

fn moments<T: Real>(pops: &[T]) -> (T, T) {
    let mut m1 = T::zero();
    let mut m2 = T::zero();
    for (n, &p) in pops.iter().enumerate() {
        let nf = T::lit(n as f64);
        m1 += nf * p;
        m2 += nf * nf * p;
    }
    (m1, m2)
}

pub fn mean_photon_number<T: Real>(rho: &DensityMatrix<T>) -> T {
    moments(&rho.populations()).0
}

/// `Q = (<n²> − <n>² − <n>) / <n>`; undefined for the vacuum.
pub fn mandel_q<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    mandel_q_populations(&rho.populations())
}

pub fn mandel_q_populations<T: Real>(pops: &[T]) -> Result<T> {
    let (m1, m2) = moments(pops);
    if m1 <= T::tol(1e-15) {
        return Err(Error::InvalidState("Mandel Q undefined: <n> = 0".into()));
    }
    Ok((m2 - m1 * m1 - m1) / m1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonclassicality<T: Real> {
    pub nonclassical: bool,
    pub min_value: T,
    pub negativity_volume: T,
}

pub fn classify_nonclassical<T: Real>(grid: &WignerGrid<T>) -> Nonclassicality<T> {
    Nonclassicality {
        nonclassical: grid.min_value < T::lit(NEGATIVITY_THRESHOLD),
        min_value: grid.min_value,
        negativity_volume: grid.negativity_volume,
    }
}

/// Summary of one field state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMetrics<T: Real> {
    pub populations: Vec<T>,
    pub fidelity: Option<FockFidelity<T>>,
    pub purity: T,
    pub mean_n: T,
    pub mandel_q: Option<T>,
    pub wigner: Option<Nonclassicality<T>>,
}

pub fn state_metrics<T: Real>(
    rho: &DensityMatrix<T>,
    target: Option<usize>,
    grid: Option<&WignerGrid<T>>,
) -> Result<StateMetrics<T>> {
    let populations = rho.populations();
    Ok(StateMetrics {
        fidelity: target.map(|n| fock_fidelity(rho, n)).transpose()?,
        purity: rho.purity(),
        mean_n: moments(&populations).0,
        mandel_q: mandel_q_populations(&populations).ok(),
        wigner: grid.map(classify_nonclassical),
        populations,
    })
}
