//! Dormand–Prince 5(4) integrator with PI step-size control, fourth-order
//! dense output and a guard that rejects steps whose stages leave the
//! admissible set.
//!
//! The right-hand side returns `Result`. A [`Error::FunnelViolation`] or
//! [`Error::Domain`] raised at any stage rejects the trial step and halves it;
//! only when the step would drop below `min_step` is the guard error surfaced.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IntegrationFailure, Result};

/// Solver tolerances and step bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 1e-2,
            min_step: 1e-14,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Config("rel_tol and abs_tol must be positive".into()));
        }
        if !(self.max_step > 0.0 && self.min_step >= 0.0 && self.min_step < self.max_step) {
            return Err(Error::Config(
                "step bounds must satisfy 0 <= min_step < max_step".into(),
            ));
        }
        Ok(())
    }
}

const MAX_STEPS: usize = 5_000_000;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;

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

/// Counters reported after a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
    pub guard_rejections: usize,
    pub evaluations: usize,
}

/// States sampled on a uniform output grid.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<SVector<f64, N>>,
    pub stats: SolverStats,
}

/// Fourth-order continuous extension over one accepted step.
struct Dense<const N: usize> {
    t: f64,
    h: f64,
    r: [SVector<f64, N>; 5],
}

impl<const N: usize> Dense<N> {
    fn eval(&self, t: f64) -> SVector<f64, N> {
        let theta = (t - self.t) / self.h;
        let theta1 = 1.0 - theta;
        self.r[0] + (self.r[1] + (self.r[2] + (self.r[3] + self.r[4] * theta1) * theta) * theta1) * theta
    }
}

fn is_guard(e: &Error) -> bool {
    matches!(e, Error::FunnelViolation { .. } | Error::Domain { .. })
}

fn error_norm<const N: usize>(
    err: &SVector<f64, N>,
    y0: &SVector<f64, N>,
    y1: &SVector<f64, N>,
    s: &IntegratorSettings,
) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sc = s.abs_tol + s.rel_tol * y0[i].abs().max(y1[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, sampling every
/// `sample_step` (the final time is always included).
pub fn solve<F, const N: usize>(
    f: F,
    t0: f64,
    y0: SVector<f64, N>,
    t_end: f64,
    sample_step: f64,
    settings: &IntegratorSettings,
) -> Result<Solution<N>>
where
    F: Fn(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    settings.validate()?;
    if !(t_end > t0) || !(sample_step > 0.0) {
        return Err(Error::Config(
            "integration interval and sample step must be positive".into(),
        ));
    }
    let mut stats = SolverStats::default();
    let eval = |t: f64, y: &SVector<f64, N>, stats: &mut SolverStats| {
        stats.evaluations += 1;
        f(t, y)
    };

    let n_samples = ((t_end - t0) / sample_step).round() as usize;
    let sample_time = |i: usize| (t0 + i as f64 * sample_step).min(t_end);
    let mut times = Vec::with_capacity(n_samples + 1);
    let mut states = Vec::with_capacity(n_samples + 1);
    let mut next_sample = 0usize;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = eval(t, &y, &mut stats)?;
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integration {
            t,
            reason: IntegrationFailure::NonFinite {
                state: y.as_slice().to_vec(),
            },
        });
    }
    times.push(t);
    states.push(y);
    next_sample += 1;

    let mut h = initial_step(&y, &k1, settings, t_end - t0);
    let mut fac_old = 1e-4_f64;
    let mut last_rejected = false;
    let mut steps = 0usize;
    let mut guard: Option<Error> = None;

    while t < t_end {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::Integration {
                t,
                reason: IntegrationFailure::TooManySteps { steps: MAX_STEPS },
            });
        }
        let mut last = false;
        if t + h >= t_end || t + 1.01 * h >= t_end {
            h = t_end - t;
            last = true;
        }
        if h < settings.min_step && !last {
            let state = y.as_slice().to_vec();
            let reason = match guard.take() {
                Some(e @ Error::FunnelViolation { .. }) => IntegrationFailure::Funnel {
                    source: Box::new(e),
                    state,
                },
                Some(e @ Error::Domain { .. }) => IntegrationFailure::DomainExit {
                    source: Box::new(e),
                    state,
                },
                _ => IntegrationFailure::StepUnderflow { step: h, state },
            };
            return Err(Error::Integration { t, reason });
        }

        let trial = (|| -> Result<_> {
            let k2 = eval(t + C2 * h, &(y + k1 * (A21 * h)), &mut stats)?;
            let k3 = eval(t + C3 * h, &(y + (k1 * A31 + k2 * A32) * h), &mut stats)?;
            let k4 = eval(t + C4 * h, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * h), &mut stats)?;
            let k5 = eval(
                t + C5 * h,
                &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h),
                &mut stats,
            )?;
            let k6 = eval(
                t + h,
                &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h),
                &mut stats,
            )?;
            let y1 = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
            let k7 = eval(t + h, &y1, &mut stats)?;
            Ok((k2, k3, k4, k5, k6, k7, y1))
        })();

        let (_k2, k3, k4, k5, k6, k7, y1) = match trial {
            Ok(v) => v,
            Err(e) if is_guard(&e) => {
                stats.guard_rejections += 1;
                guard = Some(e);
                h *= 0.5;
                last_rejected = true;
                continue;
            }
            Err(e) => return Err(e),
        };
        if y1.iter().chain(k7.iter()).any(|v| !v.is_finite()) {
            stats.rejected += 1;
            h *= 0.5;
            last_rejected = true;
            if h < settings.min_step {
                return Err(Error::Integration {
                    t,
                    reason: IntegrationFailure::NonFinite {
                        state: y.as_slice().to_vec(),
                    },
                });
            }
            continue;
        }

        let err_vec = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
        let err = error_norm(&err_vec, &y, &y1, settings);
        let expo = 0.2 - PI_BETA * 0.75;
        let fac11 = err.powf(expo);

        if err <= 1.0 {
            let mut fac = fac11 / fac_old.powf(PI_BETA) / SAFETY;
            fac = fac.clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            fac_old = err.max(1e-4);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            h_new = h_new.min(settings.max_step);

            let t_new = if last { t_end } else { t + h };
            let ydiff = y1 - y;
            let bspl = k1 * h - ydiff;
            let dense = Dense {
                t,
                h,
                r: [
                    y,
                    ydiff,
                    bspl,
                    ydiff - k7 * h - bspl,
                    (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * h,
                ],
            };
            while next_sample <= n_samples {
                let ts = sample_time(next_sample);
                if ts > t_new {
                    break;
                }
                times.push(ts);
                states.push(if ts == t_new { y1 } else { dense.eval(ts) });
                next_sample += 1;
            }

            stats.accepted += 1;
            t = t_new;
            y = y1;
            k1 = k7;
            h = h_new;
            last_rejected = false;
            guard = None;
        } else {
            stats.rejected += 1;
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }

    if *times.last().expect("initial sample present") < t_end {
        times.push(t_end);
        states.push(y);
    }
    Ok(Solution { times, states, stats })
}

/// Starting step from the scaled size of `y` and `y'`.
fn initial_step<const N: usize>(y: &SVector<f64, N>, dy: &SVector<f64, N>, s: &IntegratorSettings, span: f64) -> f64 {
    let sc = |i: usize| s.abs_tol + s.rel_tol * y[i].abs();
    let dnf: f64 = (0..N).map(|i| (dy[i] / sc(i)).powi(2)).sum::<f64>() / N as f64;
    let dny: f64 = (0..N).map(|i| (y[i] / sc(i)).powi(2)).sum::<f64>() / N as f64;
    let h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h.min(s.max_step).min(span).max(s.min_step.max(1e-12))
}
