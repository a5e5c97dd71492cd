//! Adaptive Dormand–Prince 5(4) integrator for complex-valued linear and
//! time-dependent systems `y' = f(t, y)`.

use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Step-control settings.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size; `None` leaves it unbounded.
    pub h_max: Option<f64>,
    /// Steps smaller than `h_min · max(1, |t|)` abort the integration.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_max: None,
            h_min: 1e-14,
            max_steps: 50_000_000,
        }
    }
}

/// Counters from one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Work<T: Real> {
    k: [Vec<C<T>>; 7],
    tmp: Vec<C<T>>,
    y_new: Vec<C<T>>,
}

fn axpy_into<T: Real>(out: &mut [C<T>], y: &[C<T>], h: T, terms: &[(f64, &[C<T>])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C::new(T::zero(), T::zero());
        for &(c, k) in terms {
            acc += k[i] * T::lit(c);
        }
        *o = y[i] + acc * h;
    }
}

/// Integrates `y' = f(t, y)` from `y0` at `t_grid[0]`, returning the state at every
/// grid time. The grid must be non-decreasing.
pub fn integrate<T, F>(
    mut f: F,
    t_grid: &[T],
    y0: &[C<T>],
    opts: &OdeOptions,
) -> Result<(Vec<Vec<C<T>>>, OdeStats)>
where
    T: Real,
    F: FnMut(T, &[C<T>], &mut [C<T>]),
{
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut out = Vec::with_capacity(t_grid.len());
    if t_grid.is_empty() {
        return Ok((out, stats));
    }
    if t_grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::param("t_grid", "must be non-decreasing"));
    }

    let rtol = T::lit(opts.rtol);
    let atol = T::lit(opts.atol);
    let h_max = opts.h_max.map(T::lit);
    let zero = C::new(T::zero(), T::zero());
    let mut w = Work {
        k: std::array::from_fn(|_| vec![zero; n]),
        tmp: vec![zero; n],
        y_new: vec![zero; n],
    };

    let mut t = t_grid[0];
    let mut y = y0.to_vec();
    out.push(y.clone());

    f(t, &y, &mut w.k[0]);
    stats.rhs_evals += 1;

    let span = t_grid[t_grid.len() - 1] - t;
    let mut h = initial_step(&y, &w.k[0], rtol, atol, span);
    if let Some(hm) = h_max {
        h = h.min(hm);
    }

    for &t_target in &t_grid[1..] {
        while t < t_target {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::NonConvergence(format!(
                    "step budget {} exhausted at t = {}",
                    opts.max_steps,
                    t.as_f64()
                )));
            }
            let floor = T::lit(opts.h_min) * t.abs().max(T::one());
            if h < floor {
                return Err(Error::StepSizeUnderflow {
                    t: t.as_f64(),
                    h: h.as_f64(),
                });
            }
            let remaining = t_target - t;
            let last = h >= remaining;
            let h_step = if last { remaining } else { h };

            let err = stage(&mut f, t, &y, h_step, &mut w, rtol, atol);
            stats.rhs_evals += 6;

            if err <= T::one() {
                stats.accepted += 1;
                t = if last { t_target } else { t + h_step };
                std::mem::swap(&mut y, &mut w.y_new);
                // first-same-as-last
                let (first, rest) = w.k.split_at_mut(1);
                std::mem::swap(&mut first[0], &mut rest[5]);
                let fac = if err == T::zero() {
                    T::lit(5.0)
                } else {
                    (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
                };
                // a step clipped to hit an output time says nothing about the natural size
                if !last || h_step >= h {
                    h = h_step * fac;
                }
            } else {
                stats.rejected += 1;
                let fac = (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.1));
                h = h_step * fac;
            }
            if let Some(hm) = h_max {
                h = h.min(hm);
            }
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}

fn initial_step<T: Real>(y: &[C<T>], dy: &[C<T>], rtol: T, atol: T, span: T) -> T {
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    for (yi, fi) in y.iter().zip(dy) {
        let sc = atol + rtol * yi.modulus();
        d0 += (yi.modulus() / sc).powi(2);
        d1 += (fi.modulus() / sc).powi(2);
    }
    let n = T::lit(y.len().max(1) as f64);
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) {
        T::lit(1e-6)
    } else {
        T::lit(0.01) * d0 / d1
    };
    if span > T::zero() {
        h.min(span)
    } else {
        h
    }
}

fn stage<T, F>(f: &mut F, t: T, y: &[C<T>], h: T, w: &mut Work<T>, rtol: T, atol: T) -> T
where
    T: Real,
    F: FnMut(T, &[C<T>], &mut [C<T>]),
{
    let Work { k, tmp, y_new } = w;
    let [k1, k2, k3, k4, k5, k6, k7] = k;

    axpy_into(tmp, y, h, &[(A21, &k1[..])]);
    f(t + h * T::lit(C2), tmp, k2);
    axpy_into(tmp, y, h, &[(A31, &k1[..]), (A32, &k2[..])]);
    f(t + h * T::lit(C3), tmp, k3);
    axpy_into(tmp, y, h, &[(A41, &k1[..]), (A42, &k2[..]), (A43, &k3[..])]);
    f(t + h * T::lit(C4), tmp, k4);
    axpy_into(tmp, y, h, &[(A51, &k1[..]), (A52, &k2[..]), (A53, &k3[..]), (A54, &k4[..])]);
    f(t + h * T::lit(C5), tmp, k5);
    axpy_into(
        tmp,
        y,
        h,
        &[(A61, &k1[..]), (A62, &k2[..]), (A63, &k3[..]), (A64, &k4[..]), (A65, &k5[..])],
    );
    f(t + h, tmp, k6);
    axpy_into(
        y_new,
        y,
        h,
        &[(A71, &k1[..]), (A73, &k3[..]), (A74, &k4[..]), (A75, &k5[..]), (A76, &k6[..])],
    );
    f(t + h, y_new, k7);

    let mut acc = T::zero();
    for i in 0..y.len() {
        let e = (k1[i] * T::lit(E1)
            + k3[i] * T::lit(E3)
            + k4[i] * T::lit(E4)
            + k5[i] * T::lit(E5)
            + k6[i] * T::lit(E6)
            + k7[i] * T::lit(E7))
            * h;
        let sc = atol + rtol * y[i].modulus().max(y_new[i].modulus());
        acc += (e.modulus() / sc).powi(2);
    }
    (acc / T::lit(y.len().max(1) as f64)).sqrt()
}
