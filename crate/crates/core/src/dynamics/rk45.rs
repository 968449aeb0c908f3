//! Dormand–Prince 5(4) integrator for complex state vectors with PI step control,
//! mandatory breakpoints and dense output.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Distance kept from segment edges when evaluating the right-hand side, so that
/// coefficients are always read on the interior side of a discontinuity.
const EDGE_GUARD: f64 = 1e-11;

/// Controller settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rk45Settings {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

/// Step counters of one integration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`.
///
/// * `breakpoints` are forced step endpoints; the right-hand side is never evaluated
///   across one.
/// * `samples` (ascending, within `[t0, t1]`) are served from the dense-output
///   interpolant through `on_sample(index, t, y)`.
/// * `at_breakpoint` may adjust the state at every forced endpoint (including `t1`).
#[allow(clippy::too_many_arguments)]
pub fn integrate<F, S, B>(
    mut f: F,
    y0: Vec<C64>,
    t0: f64,
    t1: f64,
    breakpoints: &[f64],
    samples: &[f64],
    settings: &Rk45Settings,
    mut on_sample: S,
    mut at_breakpoint: B,
) -> Result<(Vec<C64>, StepStats)>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    S: FnMut(usize, f64, &[C64]) -> Result<()>,
    B: FnMut(&mut [C64]),
{
    if !(t1 > t0) {
        return Err(Error::param("t1", "> t0"));
    }
    if !(settings.rtol > 0.0 && settings.atol > 0.0 && settings.max_step > 0.0) {
        return Err(Error::param("tolerances", "> 0"));
    }
    let n = y0.len();
    let mut stats = StepStats::default();
    let mut y = y0;

    let mut ends: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > t0 + 1e-9 && b < t1 - 1e-9)
        .collect();
    ends.push(t1);
    ends.sort_by(f64::total_cmp);
    ends.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let mut next_sample = 0;
    while next_sample < samples.len() && samples[next_sample] <= t0 + 1e-12 {
        on_sample(next_sample, samples[next_sample], &y)?;
        next_sample += 1;
    }

    let mut k = vec![vec![C64::new(0.0, 0.0); n]; 7];
    let mut ytmp = vec![C64::new(0.0, 0.0); n];
    let mut ynew = vec![C64::new(0.0, 0.0); n];
    let mut yinterp = vec![C64::new(0.0, 0.0); n];
    let mut dense = vec![vec![C64::new(0.0, 0.0); n]; 5];

    let mut t = t0;
    let mut h = 0.0;
    let mut fac_old: f64 = 1e-4;
    let mut seg_start = t0;
    for &seg_end in &ends {
        let clamp = |tq: f64| tq.clamp(seg_start + EDGE_GUARD, seg_end - EDGE_GUARD);
        f(clamp(t), &y, &mut k[0]);
        stats.rhs_evals += 1;
        if h == 0.0 {
            h = initial_step(&mut f, t, &y, &k[0], seg_end, settings, &clamp);
            stats.rhs_evals += 1;
        }
        let mut last_rejected = false;
        while t < seg_end {
            if stats.accepted + stats.rejected >= settings.max_steps {
                return Err(Error::ToleranceNotMet {
                    t,
                    steps: settings.max_steps,
                });
            }
            h = h.min(settings.max_step);
            let proposal = h;
            let remaining = seg_end - t;
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            if h <= 1e-14 * t.abs().max(1.0) && !last {
                return Err(Error::StepSizeUnderflow { t, h });
            }

            stage(&mut ytmp, &y, h, &k, &[A21]);
            f(clamp(t + C2 * h), &ytmp, &mut k[1]);
            stage(&mut ytmp, &y, h, &k, &[A31, A32]);
            f(clamp(t + C3 * h), &ytmp, &mut k[2]);
            stage(&mut ytmp, &y, h, &k, &[A41, A42, A43]);
            f(clamp(t + C4 * h), &ytmp, &mut k[3]);
            stage(&mut ytmp, &y, h, &k, &[A51, A52, A53, A54]);
            f(clamp(t + C5 * h), &ytmp, &mut k[4]);
            stage(&mut ytmp, &y, h, &k, &[A61, A62, A63, A64, A65]);
            f(clamp(t + h), &ytmp, &mut k[5]);
            stage(&mut ynew, &y, h, &k, &[A71, 0.0, A73, A74, A75, A76]);
            f(clamp(t + h), &ynew, &mut k[6]);
            stats.rhs_evals += 6;

            let mut err_sq = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * k[0][i]
                        + E3 * k[2][i]
                        + E4 * k[3][i]
                        + E5 * k[4][i]
                        + E6 * k[5][i]
                        + E7 * k[6][i]);
                let sc = settings.atol + settings.rtol * y[i].norm().max(ynew[i].norm());
                err_sq += (e.norm() / sc).powi(2);
            }
            let err = (err_sq / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::NonFinite("integrator error estimate"));
            }

            if err <= 1.0 {
                let t_new = if last { seg_end } else { t + h };
                if next_sample < samples.len() && samples[next_sample] <= t_new + 1e-12 {
                    build_dense(&mut dense, &y, &ynew, &k, h);
                    while next_sample < samples.len() && samples[next_sample] <= t_new + 1e-12 {
                        let s = samples[next_sample];
                        if (s - t_new).abs() <= 1e-12 {
                            on_sample(next_sample, s, &ynew)?;
                        } else {
                            interpolate(&mut yinterp, &dense, (s - t) / h);
                            on_sample(next_sample, s, &yinterp)?;
                        }
                        next_sample += 1;
                    }
                }
                std::mem::swap(&mut y, &mut ynew);
                k.swap(0, 6);
                t = t_new;
                stats.accepted += 1;

                let fac11 = err.max(1e-10).powf(0.2 - BETA * 0.75);
                let mut fac = fac11 / fac_old.powf(BETA);
                fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h / fac;
                if last_rejected {
                    h_new = h_new.min(h);
                }
                fac_old = err.max(1e-4);
                last_rejected = false;
                // a step clipped at a breakpoint says little about the natural step size
                h = if last { h_new.max(proposal) } else { h_new };
            } else {
                let fac11 = err.powf(0.2 - BETA * 0.75);
                h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
                stats.rejected += 1;
                last_rejected = true;
            }
        }
        t = seg_end;
        at_breakpoint(&mut y);
        seg_start = seg_end;
    }
    while next_sample < samples.len() {
        on_sample(next_sample, samples[next_sample], &y)?;
        next_sample += 1;
    }
    Ok((y, stats))
}

fn stage(out: &mut [C64], y: &[C64], h: f64, k: &[Vec<C64>], a: &[f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (j, &aj) in a.iter().enumerate() {
            if aj != 0.0 {
                acc += k[j][i] * aj;
            }
        }
        *o = y[i] + acc * h;
    }
}

fn build_dense(dense: &mut [Vec<C64>], y: &[C64], ynew: &[C64], k: &[Vec<C64>], h: f64) {
    for i in 0..y.len() {
        let ydiff = ynew[i] - y[i];
        let bspl = k[0][i] * h - ydiff;
        dense[0][i] = y[i];
        dense[1][i] = ydiff;
        dense[2][i] = bspl;
        dense[3][i] = ydiff - k[6][i] * h - bspl;
        dense[4][i] = (k[0][i] * D1
            + k[2][i] * D3
            + k[3][i] * D4
            + k[4][i] * D5
            + k[5][i] * D6
            + k[6][i] * D7)
            * h;
    }
}

fn interpolate(out: &mut [C64], dense: &[Vec<C64>], theta: f64) {
    let th1 = 1.0 - theta;
    for (i, o) in out.iter_mut().enumerate() {
        *o = dense[0][i]
            + (dense[1][i] + (dense[2][i] + (dense[3][i] + dense[4][i] * th1) * theta) * th1)
                * theta;
    }
}

fn scaled_norm(v: &[C64], y: &[C64], s: &Rk45Settings) -> f64 {
    let n = v.len().max(1) as f64;
    (v.iter()
        .zip(y)
        .map(|(a, b)| (a.norm() / (s.atol + s.rtol * b.norm())).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
}

fn initial_step<F: FnMut(f64, &[C64], &mut [C64])>(
    f: &mut F,
    t: f64,
    y: &[C64],
    f0: &[C64],
    seg_end: f64,
    s: &Rk45Settings,
    clamp: &impl Fn(f64) -> f64,
) -> f64 {
    let d0 = scaled_norm(y, y, s);
    let d1 = scaled_norm(f0, y, s);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(s.max_step).min(seg_end - t);
    let y1: Vec<C64> = y.iter().zip(f0).map(|(a, b)| a + b * h0).collect();
    let mut f1 = vec![C64::new(0.0, 0.0); y.len()];
    f(clamp(t + h0), &y1, &mut f1);
    let diff: Vec<C64> = f1.iter().zip(f0).map(|(a, b)| (a - b) / h0).collect();
    let d2 = scaled_norm(&diff, y, s);
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(s.max_step)
}
