//! Numerical integration of the central-field equations and of the retarded
//! two-body law.
//!
//! Both integrators step the position and u = γv with an adaptive
//! Dormand–Prince 5(4) scheme; velocities are recovered by the exact
//! inversion v = u/√(1 + |u|²/c²).

mod pair;
mod rk;

pub use pair::{integrate_retarded_pair, CausalityAudit, PairRun};
pub use rk::StepStats;

use nalgebra::{SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kepler::conserved_quantities;
use crate::lw::Trajectory;
use crate::state::{velocity_from_momentum, SpatialState};

/// How the past of a delay system is synthesized when the supplied
/// histories are too short.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryBootstrap {
    /// Constant-velocity motion extrapolated backwards.
    StraightLinePast,
    /// Motion integrated backwards in the partner's static field, with the
    /// partner held at its initial position.
    KeplerianPast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    /// Absolute tolerance, in m for positions and m/s for u.
    pub abs_tol: f64,
    pub max_step: f64,
    /// `None` disables history synthesis.
    pub history_bootstrap: Option<HistoryBootstrap>,
    /// Collision radius (m).
    pub r_min: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-6,
            max_step: 1e7,
            history_bootstrap: Some(HistoryBootstrap::StraightLinePast),
            r_min: 1e3,
            max_steps: 50_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let tol = |field: &str, v: f64| {
            if v > 0.0 && v < 1e-2 {
                Ok(())
            } else {
                Err(Error::Validation {
                    field: field.into(),
                    message: format!("{v} must lie in (0, 1e-2)"),
                })
            }
        };
        tol("rel_tol", self.rel_tol)?;
        tol("abs_tol", self.abs_tol)?;
        if !(self.max_step > 0.0) {
            return Err(Error::Validation {
                field: "max_step".into(),
                message: format!("{} must be positive", self.max_step),
            });
        }
        if !(self.r_min > 0.0 && self.r_min.is_finite()) {
            return Err(Error::Validation {
                field: "r_min".into(),
                message: format!("{} must be positive and finite", self.r_min),
            });
        }
        if self.max_steps == 0 {
            return Err(Error::Validation {
                field: "max_steps".into(),
                message: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    pub(crate) fn controls(&self) -> rk::Controls {
        rk::Controls {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Stopped because a separation fell below `r_min`.
    Collision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralRun {
    pub trajectory: Trajectory,
    pub status: RunStatus,
    pub stats: StepStats,
}

/// Acceleration du/dt = −k x/|x|³ of the central-field equations.
pub fn central_acceleration(x: &Vector3<f64>, m10g: f64) -> Vector3<f64> {
    let r2 = x.norm_squared();
    -x * (m10g / (r2 * r2.sqrt()))
}

pub(crate) fn split<const N: usize>(y: &SVector<f64, N>, body: usize) -> (Vector3<f64>, Vector3<f64>) {
    (
        y.fixed_rows::<3>(6 * body).into_owned(),
        y.fixed_rows::<3>(6 * body + 3).into_owned(),
    )
}

pub(crate) fn pack<const N: usize>(y: &mut SVector<f64, N>, body: usize, a: &Vector3<f64>, b: &Vector3<f64>) {
    y.fixed_rows_mut::<3>(6 * body).copy_from(a);
    y.fixed_rows_mut::<3>(6 * body + 3).copy_from(b);
}

/// A body in the static field of a source of mass parameter `k` at `center`.
/// `k` may be negative (repulsion). Time runs backwards when `reversed`.
pub(crate) struct CentralSystem {
    pub k: f64,
    pub c: f64,
    pub center: Vector3<f64>,
    pub r_min: f64,
    pub t0: f64,
    pub reversed: bool,
    pub samples: Vec<SpatialState>,
    pub collided: bool,
}

impl CentralSystem {
    fn sample(&self, t: f64, y: &SVector<f64, 6>) -> SpatialState {
        let (x, u) = split(y, 0);
        let v = velocity_from_momentum(&u, self.c);
        if self.reversed {
            SpatialState::new(2.0 * self.t0 - t, x + self.center, -v)
        } else {
            SpatialState::new(t, x + self.center, v)
        }
    }
}

impl rk::System<6> for CentralSystem {
    fn rhs(&mut self, _t: f64, y: &SVector<f64, 6>) -> Result<SVector<f64, 6>> {
        let (x, u) = split(y, 0);
        let mut out = SVector::<f64, 6>::zeros();
        pack(&mut out, 0, &velocity_from_momentum(&u, self.c), &central_acceleration(&x, self.k));
        Ok(out)
    }

    fn accept(&mut self, t: f64, y: &SVector<f64, 6>) -> Result<rk::Flow> {
        if y.fixed_rows::<3>(0).norm() < self.r_min {
            self.collided = true;
            return Ok(rk::Flow::Stop);
        }
        let s = self.sample(t, y);
        self.samples.push(s);
        Ok(rk::Flow::Continue)
    }
}

/// Runs the central system and returns its samples (the initial state
/// first), in forward time order when `reversed` is false.
pub(crate) fn run_central(
    state0: &SpatialState,
    k: f64,
    center: Vector3<f64>,
    duration: f64,
    reversed: bool,
    c: f64,
    cfg: &IntegratorConfig,
) -> Result<(Vec<SpatialState>, bool, StepStats)> {
    let v0 = if reversed { -state0.v } else { state0.v };
    let u0 = v0 * crate::state::lorentz_factor(&v0, c);
    let mut y0 = SVector::<f64, 6>::zeros();
    pack(&mut y0, 0, &(state0.x - center), &u0);
    let mut sys = CentralSystem {
        k,
        c,
        center,
        r_min: cfg.r_min,
        t0: state0.t,
        reversed,
        samples: vec![*state0],
        collided: false,
    };
    let (_, _, stats, _) = rk::integrate(&mut sys, state0.t, y0, state0.t + duration, &cfg.controls())?;
    Ok((sys.samples, sys.collided, stats))
}

/// Integrates a body in the field of a Sun with mass parameter `m10g`
/// resting at the origin, from `state0.t` to `t_end`, sampling every
/// accepted step.
pub fn integrate_central(
    state0: &SpatialState,
    m10g: f64,
    t_end: f64,
    c: f64,
    cfg: &IntegratorConfig,
) -> Result<CentralRun> {
    cfg.validate()?;
    if !state0.is_finite() {
        return Err(Error::Domain("initial state is not finite".into()));
    }
    state0.check_subluminal(c)?;
    let r0 = state0.x.norm();
    if !(r0 > cfg.r_min) {
        return Err(Error::SingularEvaluation {
            distance: r0,
            r_min: cfg.r_min,
        });
    }
    if !(m10g > 0.0 && m10g.is_finite()) {
        return Err(Error::Validation {
            field: "m10g".into(),
            message: format!("{m10g} must be positive and finite"),
        });
    }
    if !(t_end >= state0.t && t_end.is_finite()) {
        return Err(Error::Validation {
            field: "t_end".into(),
            message: format!("{t_end} must be finite and not before t0 = {}", state0.t),
        });
    }
    let (samples, collided, stats) =
        run_central(state0, m10g, Vector3::zeros(), t_end - state0.t, false, c, cfg)?;
    Ok(CentralRun {
        trajectory: Trajectory::new(samples, c)?,
        status: if collided {
            RunStatus::Collision
        } else {
            RunStatus::Completed
        },
        stats,
    })
}

/// Drift of the central-field integrals along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConservationReport {
    /// max |E − E₀| relative to the initial binding energy |E₀ − c²|.
    pub max_rel_drift_e: f64,
    /// max |M − M₀| / |M₀|.
    pub max_rel_drift_m: f64,
    /// Worst |γ² − |u|²/c² − 1| with u = γv from the stored velocities.
    pub fourvel_norm_residual: f64,
}

pub fn conservation_report(traj: &Trajectory, m10g: f64) -> ConservationReport {
    let c = traj.c();
    let quantities: Vec<_> = traj
        .samples()
        .iter()
        .filter_map(|s| conserved_quantities(s, m10g, c).ok())
        .collect();
    let mut report = ConservationReport::default();
    let Some(q0) = quantities.first() else {
        return report;
    };
    let e_scale = if q0.binding != 0.0 { q0.binding.abs() } else { c * c };
    let m_scale = q0.m.norm();
    for q in &quantities {
        let de = (q.binding - q0.binding).abs() / e_scale;
        let dm = (q.m - q0.m).norm();
        let dm = if m_scale > 0.0 {
            dm / m_scale
        } else if dm == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        report.max_rel_drift_e = report.max_rel_drift_e.max(de);
        report.max_rel_drift_m = report.max_rel_drift_m.max(dm);
    }
    for s in traj.samples() {
        let gamma = s.lorentz_factor(c);
        let u = s.v * gamma / c;
        let residual = (gamma * gamma - u.norm_squared() - 1.0).abs();
        report.fourvel_norm_residual = report.fourvel_norm_residual.max(residual);
    }
    report
}
