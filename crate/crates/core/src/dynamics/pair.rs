//! Two bodies, each moving in the other's retarded field.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use super::rk::{self, Flow, StepStats, System};
use super::{pack, run_central, split, HistoryBootstrap, IntegratorConfig, RunStatus};
use crate::error::{Error, Result};
use crate::lw::{field_strength_with_point, Event, RetardedPoint, SourceSpec, Trajectory};
use crate::state::{lorentz_factor, velocity_from_momentum, SpatialState};

/// Record of which partner samples the field evaluations read.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CausalityAudit {
    pub evaluations: usize,
    /// Largest gap between the retarded time and the latest sample of the
    /// interpolation interval used (s).
    pub max_sample_lead_s: f64,
    /// Widest interpolation interval used (s).
    pub max_stencil_s: f64,
    /// Evaluations whose latest sample lay beyond one interval past t′.
    pub violations: usize,
    /// Largest t′ minus the last accepted partner sample (s); never positive.
    pub max_retarded_past_history_s: f64,
}

impl CausalityAudit {
    fn record(&mut self, p: &RetardedPoint, history: &Trajectory) {
        let samples = history.samples();
        let right = samples[(p.segment + 1).min(samples.len() - 1)].t;
        let stencil = right - samples[p.segment].t;
        let lead = right - p.t;
        if self.evaluations == 0 {
            self.max_retarded_past_history_s = f64::NEG_INFINITY;
        }
        self.evaluations += 1;
        self.max_sample_lead_s = self.max_sample_lead_s.max(lead);
        self.max_stencil_s = self.max_stencil_s.max(stencil);
        if lead > stencil {
            self.violations += 1;
        }
        self.max_retarded_past_history_s = self.max_retarded_past_history_s.max(p.t - history.end());
    }

    pub fn holds(&self) -> bool {
        self.violations == 0 && self.max_retarded_past_history_s <= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRun {
    /// Full histories, including any synthesized past before `t0`.
    pub a: Trajectory,
    pub b: Trajectory,
    pub t0: f64,
    pub status: RunStatus,
    pub stats: StepStats,
    pub audit: CausalityAudit,
}

impl PairRun {
    /// Samples of body 0 (`a`) or 1 (`b`) from `t0` on.
    pub fn integrated(&self, body: usize) -> &[SpatialState] {
        let traj = if body == 0 { &self.a } else { &self.b };
        let s = traj.samples();
        let start = s.partition_point(|x| x.t < self.t0);
        &s[start..]
    }
}

struct PairSystem {
    sources: [SourceSpec; 2],
    ratios: [f64; 2],
    c: f64,
    r_min: f64,
    audit: CausalityAudit,
    collided: bool,
}

impl System<12> for PairSystem {
    fn rhs(&mut self, t: f64, y: &SVector<f64, 12>) -> Result<SVector<f64, 12>> {
        let mut out = SVector::<f64, 12>::zeros();
        for k in 0..2 {
            let partner = &self.sources[1 - k];
            let (x, u) = split(y, k);
            let v = velocity_from_momentum(&u, self.c);
            let event = Event::at_time(t, x, self.c);
            let (f, p) = field_strength_with_point(&event, partner)?;
            self.audit.record(&p, &partner.worldline);
            pack(&mut out, k, &v, &(f.lorentz_force(&v, self.c) * self.ratios[k]));
        }
        Ok(out)
    }

    fn step_cap(&self, _t: f64, y: &SVector<f64, 12>) -> f64 {
        let (xa, _) = split(y, 0);
        let (xb, _) = split(y, 1);
        0.5 * (xa - xb).norm() / self.c
    }

    fn accept(&mut self, t: f64, y: &SVector<f64, 12>) -> Result<Flow> {
        let (xa, ua) = split(y, 0);
        let (xb, ub) = split(y, 1);
        if (xa - xb).norm() < self.r_min {
            self.collided = true;
            return Ok(Flow::Stop);
        }
        self.sources[0]
            .worldline
            .push(SpatialState::new(t, xa, velocity_from_momentum(&ua, self.c)))?;
        self.sources[1]
            .worldline
            .push(SpatialState::new(t, xb, velocity_from_momentum(&ub, self.c)))?;
        Ok(Flow::Continue)
    }
}

/// Extends `history` backwards so that it starts no later than `target`.
fn bootstrap(
    history: &Trajectory,
    target: f64,
    partner: &SpatialState,
    k_eff: f64,
    mode: HistoryBootstrap,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let first = *history.first();
    if first.t <= target {
        return Ok(history.clone());
    }
    let missing = first.t - target;
    let c = history.c();
    let mut past = match mode {
        HistoryBootstrap::StraightLinePast => {
            vec![SpatialState::new(target, first.x - first.v * missing, first.v)]
        }
        HistoryBootstrap::KeplerianPast => {
            let (mut s, collided, _) = run_central(&first, k_eff, partner.x, missing, true, c, cfg)?;
            if collided {
                return Err(Error::Domain(format!(
                    "backward history reached the partner within {missing} s"
                )));
            }
            s.reverse();
            s.pop();
            s
        }
    };
    past.extend_from_slice(history.samples());
    Trajectory::new(past, c)
}

/// Integrates two point sources, each accelerated by the other's retarded
/// field, from the common time of their last history samples to `t_end`.
///
/// `masses` are inertial mass parameters (m G, m³/s²); body k's
/// charge-to-mass ratio is `strength_k / masses[k]`. When the histories do
/// not reach back over the light-travel span they are extended with
/// `cfg.history_bootstrap`. Both bodies share one step, capped at half the
/// light-travel time between them, so every field evaluation within a step
/// reads only accepted samples.
pub fn integrate_retarded_pair(
    a: &SourceSpec,
    b: &SourceSpec,
    masses: [f64; 2],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<PairRun> {
    cfg.validate()?;
    for (i, m) in masses.iter().enumerate() {
        if !(*m > 0.0 && m.is_finite()) {
            return Err(Error::Validation {
                field: format!("masses[{i}]"),
                message: format!("{m} must be positive and finite"),
            });
        }
    }
    for (name, s) in [("a.strength", a.strength), ("b.strength", b.strength)] {
        if !s.is_finite() {
            return Err(Error::Validation {
                field: name.into(),
                message: format!("{s} is not finite"),
            });
        }
    }
    let c = a.worldline.c();
    if b.worldline.c() != c {
        return Err(Error::Validation {
            field: "b.worldline".into(),
            message: "both worldlines must use the same speed of light".into(),
        });
    }
    let (sa, sb) = (*a.worldline.last(), *b.worldline.last());
    if sa.t != sb.t {
        return Err(Error::Validation {
            field: "worldlines".into(),
            message: format!("histories must end at a common time, got {} and {}", sa.t, sb.t),
        });
    }
    let t0 = sa.t;
    if !(t_end >= t0 && t_end.is_finite()) {
        return Err(Error::Validation {
            field: "t_end".into(),
            message: format!("{t_end} must be finite and not before t0 = {t0}"),
        });
    }
    let r0 = (sa.x - sb.x).norm();
    if !(r0 > cfg.r_min) {
        return Err(Error::SingularEvaluation {
            distance: r0,
            r_min: cfg.r_min,
        });
    }
    let ratios = [a.strength / masses[0], b.strength / masses[1]];

    let (hist_a, hist_b) = match cfg.history_bootstrap {
        None => (a.worldline.clone(), b.worldline.clone()),
        Some(mode) => {
            let vmax = sa.v.norm().max(sb.v.norm());
            let span = 2.0 * r0 / (c - vmax);
            let target = t0 - span;
            let first_a = *a.worldline.first();
            let first_b = *b.worldline.first();
            (
                bootstrap(&a.worldline, target, &first_b, ratios[0] * b.strength, mode, cfg)?,
                bootstrap(&b.worldline, target, &first_a, ratios[1] * a.strength, mode, cfg)?,
            )
        }
    };

    let mut y0 = SVector::<f64, 12>::zeros();
    pack(&mut y0, 0, &sa.x, &(sa.v * lorentz_factor(&sa.v, c)));
    pack(&mut y0, 1, &sb.x, &(sb.v * lorentz_factor(&sb.v, c)));
    let mut sys = PairSystem {
        sources: [
            SourceSpec::new(a.strength, hist_a),
            SourceSpec::new(b.strength, hist_b),
        ],
        ratios,
        c,
        r_min: cfg.r_min,
        audit: CausalityAudit::default(),
        collided: false,
    };
    let (_, _, stats, _) = rk::integrate(&mut sys, t0, y0, t_end, &cfg.controls())?;
    let [sa, sb] = sys.sources;
    Ok(PairRun {
        a: sa.worldline,
        b: sb.worldline,
        t0,
        status: if sys.collided {
            RunStatus::Collision
        } else {
            RunStatus::Completed
        },
        stats,
        audit: sys.audit,
    })
}

