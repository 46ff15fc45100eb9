//! Dormand–Prince 5(4) with per-body error control.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

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

// Fifth-order weights minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Flow {
    Continue,
    Stop,
}

/// An ODE whose state is a stack of 3-vectors.
pub(crate) trait System<const N: usize> {
    fn rhs(&mut self, t: f64, y: &SVector<f64, N>) -> Result<SVector<f64, N>>;

    /// Upper bound on the next step from the current accepted state.
    fn step_cap(&self, _t: f64, _y: &SVector<f64, N>) -> f64 {
        f64::INFINITY
    }

    /// Called on every accepted step.
    fn accept(&mut self, t: f64, y: &SVector<f64, N>) -> Result<Flow>;
}

/// Step counters of one integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Controls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

/// Largest per-block ratio |err| / (abs_tol + rel_tol·max(|y₀|, |y₁|)).
fn error_norm<const N: usize>(
    y0: &SVector<f64, N>,
    y1: &SVector<f64, N>,
    err: &SVector<f64, N>,
    ctl: &Controls,
) -> f64 {
    let mut worst = 0.0_f64;
    for b in 0..N / 3 {
        let e = err.fixed_rows::<3>(3 * b).norm();
        let scale = ctl.abs_tol
            + ctl.rel_tol * y0.fixed_rows::<3>(3 * b).norm().max(y1.fixed_rows::<3>(3 * b).norm());
        let ratio = e / scale;
        if ratio.is_nan() {
            return f64::INFINITY;
        }
        worst = worst.max(ratio);
    }
    worst
}

fn scaled_size<const N: usize>(y: &SVector<f64, N>, reference: &SVector<f64, N>, ctl: &Controls) -> f64 {
    let mut worst = 0.0_f64;
    for b in 0..N / 3 {
        let scale = ctl.abs_tol + ctl.rel_tol * reference.fixed_rows::<3>(3 * b).norm();
        worst = worst.max(y.fixed_rows::<3>(3 * b).norm() / scale);
    }
    worst
}

/// Starting step from the size of the solution and its derivatives.
fn initial_step<const N: usize, S: System<N>>(
    sys: &mut S,
    t0: f64,
    y0: &SVector<f64, N>,
    f0: &SVector<f64, N>,
    limit: f64,
    ctl: &Controls,
    stats: &mut StepStats,
) -> Result<f64> {
    let d0 = scaled_size(y0, y0, ctl);
    let d1 = scaled_size(f0, y0, ctl);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(limit);
    let y1 = y0 + f0 * h0;
    let f1 = sys.rhs(t0 + h0, &y1)?;
    stats.rhs_evaluations += 1;
    let d2 = scaled_size(&(f1 - f0), y0, ctl) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(limit))
}

/// Integrates from `t0` to `t_end`. Returns the final time and state and
/// whether the system asked to stop early.
pub(crate) fn integrate<const N: usize, S: System<N>>(
    sys: &mut S,
    t0: f64,
    y0: SVector<f64, N>,
    t_end: f64,
    ctl: &Controls,
) -> Result<(f64, SVector<f64, N>, StepStats, bool)> {
    let mut stats = StepStats::default();
    let mut t = t0;
    let mut y = y0;
    if !(t_end > t0) {
        return Ok((t, y, stats, false));
    }
    let mut k1 = sys.rhs(t, &y)?;
    stats.rhs_evaluations += 1;
    let limit = ctl.max_step.min(sys.step_cap(t, &y)).min(t_end - t0);
    let mut h = initial_step(sys, t, &y, &k1, limit, ctl, &mut stats)?;

    while t < t_end {
        if stats.accepted + stats.rejected >= ctl.max_steps {
            return Err(Error::Domain(format!(
                "step limit {} reached at t = {t} s",
                ctl.max_steps
            )));
        }
        h = h.min(ctl.max_step).min(sys.step_cap(t, &y));
        let remaining = t_end - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        let underflow = 16.0 * f64::EPSILON * t.abs().max(t_end.abs());
        if !(h > underflow) {
            return Err(Error::StepSizeUnderflow { t, h });
        }

        let k2 = sys.rhs(t + C2 * h, &(y + k1 * (A21 * h)))?;
        let k3 = sys.rhs(t + C3 * h, &(y + (k1 * A31 + k2 * A32) * h))?;
        let k4 = sys.rhs(t + C4 * h, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * h))?;
        let k5 = sys.rhs(
            t + C5 * h,
            &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h),
        )?;
        let t_new = if last { t_end } else { t + h };
        let k6 = sys.rhs(
            t_new,
            &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h),
        )?;
        let y_new = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
        let k7 = sys.rhs(t_new, &y_new)?;
        stats.rhs_evaluations += 6;

        let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
        let norm = error_norm(&y, &y_new, &err, ctl);

        if norm <= 1.0 {
            stats.accepted += 1;
            t = t_new;
            y = y_new;
            k1 = k7;
            if sys.accept(t, &y)? == Flow::Stop {
                return Ok((t, y, stats, true));
            }
            let factor = if norm == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            h *= factor;
        } else {
            stats.rejected += 1;
            let factor = if norm.is_finite() {
                (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
            } else {
                MIN_FACTOR
            };
            h *= factor;
        }
    }
    Ok((t, y, stats, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    /// Uniform rotation x' = ω × x, stacked twice.
    struct Rotation {
        omega: f64,
        samples: Vec<(f64, SVector<f64, 6>)>,
    }

    impl System<6> for Rotation {
        fn rhs(&mut self, _t: f64, y: &SVector<f64, 6>) -> Result<SVector<f64, 6>> {
            let w = Vector3::new(0.0, 0.0, self.omega);
            let mut out = SVector::<f64, 6>::zeros();
            out.fixed_rows_mut::<3>(0).copy_from(&w.cross(&y.fixed_rows::<3>(0).into_owned()));
            out.fixed_rows_mut::<3>(3).copy_from(&w.cross(&y.fixed_rows::<3>(3).into_owned()));
            Ok(out)
        }

        fn accept(&mut self, t: f64, y: &SVector<f64, 6>) -> Result<Flow> {
            self.samples.push((t, *y));
            Ok(Flow::Continue)
        }
    }

    fn controls(rel_tol: f64) -> Controls {
        Controls {
            rel_tol,
            abs_tol: 1e-14,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }

    #[test]
    fn rotation_is_accurate() {
        let mut sys = Rotation {
            omega: 2.0,
            samples: Vec::new(),
        };
        let y0 = SVector::<f64, 6>::from_column_slice(&[1.0, 0.0, 0.0, 0.0, 3.0, 0.0]);
        let t_end = 10.0;
        let (t, y, stats, stopped) = integrate(&mut sys, 0.0, y0, t_end, &controls(1e-12)).unwrap();
        assert_eq!(t, t_end);
        assert!(!stopped);
        let (s, c) = (2.0 * t_end).sin_cos();
        assert!((y[0] - c).abs() < 1e-10 && (y[1] - s).abs() < 1e-10);
        assert!((y[3] + 3.0 * s).abs() < 3e-10 && (y[4] - 3.0 * c).abs() < 3e-10);
        assert_eq!(stats.accepted, sys.samples.len());
        assert_eq!(stats.rhs_evaluations, 2 + 6 * (stats.accepted + stats.rejected));
    }

    #[test]
    fn error_shrinks_with_order_five() {
        let run = |h: f64| {
            let mut sys = Rotation {
                omega: 1.0,
                samples: Vec::new(),
            };
            let mut ctl = controls(1e-3);
            ctl.max_step = h;
            let y0 = SVector::<f64, 6>::from_column_slice(&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
            let (_, y, _, _) = integrate(&mut sys, 0.0, y0, 4.0, &ctl).unwrap();
            ((y[0] - 4.0_f64.cos()).powi(2) + (y[1] - 4.0_f64.sin()).powi(2)).sqrt()
        };
        let coarse = run(0.2);
        let fine = run(0.1);
        assert!(coarse / fine > 20.0, "{coarse} / {fine}");
    }

    #[test]
    fn empty_span_returns_initial_state() {
        let mut sys = Rotation {
            omega: 1.0,
            samples: Vec::new(),
        };
        let y0 = SVector::<f64, 6>::repeat(1.0);
        let (t, y, stats, _) = integrate(&mut sys, 3.0, y0, 3.0, &controls(1e-9)).unwrap();
        assert_eq!((t, y), (3.0, y0));
        assert_eq!(stats, StepStats::default());
    }
}
