//! Retarded-time solving and Liénard–Wiechert potentials and fields of
//! sampled worldlines.
//!
//! Index conventions: coordinates x^μ = (ct, x), metric η = diag(1, −1, −1, −1).
//! Potentials and field strengths carry lower indices. A source of strength
//! `s` (m³/s², `s = m G` for a positive gravitating mass) produces
//!
//! A_μ = s ż_μ / (c|R| − R·v),  ż^μ = (c, v),
//!
//! evaluated at the retarded time t′ where x⁰ − ct′ = |x − z(t′)| and
//! R = x − z(t′). For a resting source this is A₀ = s/|R|, A_i = 0.

mod trajectory;

pub use trajectory::{HermiteSegment, Trajectory};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Field points closer than this to the source are singular (m).
pub const R_MIN: f64 = 1e-6;
/// Relative floor for the denominator c|R| − R·v.
pub const EPS_DENOM: f64 = 1e-12;
/// Relative tolerance of the retarded-time solve.
pub const TOL_RET: f64 = 1e-12;

const MAX_NEWTON_ITERS: usize = 100;

/// A spacetime point, x⁰ = ct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub x0: f64,
    pub x: Vector3<f64>,
}

impl Event {
    pub fn new(x0: f64, x: Vector3<f64>) -> Self {
        Self { x0, x }
    }

    pub fn at_time(t: f64, x: Vector3<f64>, c: f64) -> Self {
        Self { x0: c * t, x }
    }

    /// Component μ of the coordinate vector.
    pub fn coord(&self, mu: usize) -> f64 {
        if mu == 0 {
            self.x0
        } else {
            self.x[mu - 1]
        }
    }

    pub fn shifted(&self, mu: usize, delta: f64) -> Self {
        let mut e = *self;
        if mu == 0 {
            e.x0 += delta;
        } else {
            e.x[mu - 1] += delta;
        }
        e
    }

    pub fn is_finite(&self) -> bool {
        self.x0.is_finite() && self.x.iter().all(|v| v.is_finite())
    }
}

/// A gravitating (or charged) point source: signed strength and worldline.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    /// s = −qK; for gravity (K = −G) this is ±mG (m³/s²).
    pub strength: f64,
    pub worldline: Trajectory,
}

impl SourceSpec {
    pub fn new(strength: f64, worldline: Trajectory) -> Self {
        Self { strength, worldline }
    }
}

/// Lower-index four-potential A_μ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourPotential(pub [f64; 4]);

impl FourPotential {
    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Antisymmetric field strength F_μν, stored as its six independent entries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldStrength {
    /// F_{i0}, i = 1..3.
    pub electric: [f64; 3],
    /// F_{12}, F_{13}, F_{23}.
    pub magnetic: [f64; 3],
}

impl FieldStrength {
    pub fn get(&self, mu: usize, nu: usize) -> f64 {
        match (mu, nu) {
            (a, b) if a == b => 0.0,
            (i, 0) => self.electric[i - 1],
            (0, i) => -self.electric[i - 1],
            (1, 2) => self.magnetic[0],
            (1, 3) => self.magnetic[1],
            (2, 3) => self.magnetic[2],
            (b, a) => -self.get(a, b),
        }
    }

    pub fn matrix(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for (mu, row) in m.iter_mut().enumerate() {
            for (nu, v) in row.iter_mut().enumerate() {
                *v = self.get(mu, nu);
            }
        }
        m
    }

    /// Builds F_μν = G[μ][ν] − G[ν][μ] from a gradient table G[μ][ν] = ∂_μ A_ν.
    pub fn from_gradient(grad: &[[f64; 4]; 4]) -> Self {
        let f = |mu: usize, nu: usize| grad[mu][nu] - grad[nu][mu];
        Self {
            electric: [f(1, 0), f(2, 0), f(3, 0)],
            magnetic: [f(1, 2), f(1, 3), f(2, 3)],
        }
    }

    /// Spatial part of −η^{μμ} Σ_ν c⁻¹ (dx^ν/dt) F_μν for a body moving with
    /// coordinate velocity `v`: F_{i0} + Σ_j (v^j/c) F_{ij}.
    pub fn lorentz_force(&self, v: &Vector3<f64>, c: f64) -> Vector3<f64> {
        Vector3::from_fn(|i, _| {
            let mu = i + 1;
            self.get(mu, 0) + (1..4).map(|nu| v[nu - 1] / c * self.get(mu, nu)).sum::<f64>()
        })
    }

    /// Time component −η^{00} Σ_ν c⁻¹ (dx^ν/dt) F_0ν = −Σ_i (v^i/c) F_{0i}.
    pub fn power(&self, v: &Vector3<f64>, c: f64) -> f64 {
        -(1..4).map(|i| v[i - 1] / c * self.get(0, i)).sum::<f64>()
    }
}

/// Source kinematics at the retarded time of a field event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetardedPoint {
    pub t: f64,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
    /// R = x − z(t′).
    pub separation: Vector3<f64>,
    pub distance: f64,
    /// c|R| − R·v.
    pub denominator: f64,
    /// Index of the interpolation interval used (its two end samples).
    pub segment: usize,
}

/// Solves x⁰ − ct′ = |x − z(t′)| for the retarded time t′.
pub fn retarded_time(event: &Event, source: &Trajectory) -> Result<f64> {
    retarded_point(event, source).map(|p| p.t)
}

/// Retarded time together with the source state there.
///
/// The bracketing interval is found from the signs of the light-cone
/// residual at the samples; the root is then polished by safeguarded Newton
/// iteration on that interval's cubic only. Samples past the interval are
/// never read beyond that sign test.
pub fn retarded_point(event: &Event, source: &Trajectory) -> Result<RetardedPoint> {
    if !event.is_finite() {
        return Err(Error::Domain("field event has non-finite coordinates".into()));
    }
    let c = source.c();
    let samples = source.samples();
    let residual_at = |i: usize| {
        let s = &samples[i];
        event.x0 - c * s.t - (event.x - s.x).norm()
    };
    let out_of_span = || Error::InsufficientHistory {
        start: source.start(),
        end: source.end(),
    };

    let n = samples.len();
    let g_last = residual_at(n - 1);
    if g_last > 0.0 {
        return Err(out_of_span());
    }
    let g_first = residual_at(0);
    if g_first < 0.0 {
        return Err(out_of_span());
    }

    // Exact hits on a sample.
    let hit = if g_last == 0.0 {
        Some(n - 1)
    } else if g_first == 0.0 {
        Some(0)
    } else {
        None
    };
    if let Some(i) = hit {
        let seg_idx = if n == 1 { 0 } else { i.min(n - 2) };
        let acceleration = if n == 1 {
            Vector3::zeros()
        } else {
            source.segment(seg_idx).acceleration(samples[i].t)
        };
        return finish(event, c, samples[i].t, samples[i].x, samples[i].v, acceleration, seg_idx);
    }

    // g is strictly decreasing: find i with g(t_i) > 0 > g(t_{i+1}).
    let (mut lo, mut hi) = (0usize, n - 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if residual_at(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let seg = source.segment(lo);
    let g = |t: f64| event.x0 - c * t - (event.x - seg.position(t)).norm();

    let (g_lo, g_hi) = (residual_at(lo), residual_at(hi));
    let (mut a, mut b) = (samples[lo].t, samples[hi].t);
    let mut t = a + (b - a) * g_lo / (g_lo - g_hi);
    let scale = t.abs().max(seg.h);
    for _ in 0..MAX_NEWTON_ITERS {
        let pos = seg.position(t);
        let vel = seg.velocity(t);
        let sep = event.x - pos;
        let dist = sep.norm();
        let gt = event.x0 - c * t - dist;
        if gt == 0.0 {
            break;
        }
        if gt > 0.0 {
            a = t;
        } else {
            b = t;
        }
        let slope = if dist > 0.0 { -c + sep.dot(&vel) / dist } else { -c };
        let mut next = t - gt / slope;
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        let step = next - t;
        t = next;
        if step.abs() <= 1e-3 * TOL_RET * scale || a >= b {
            break;
        }
    }
    debug_assert!(g(t).abs() <= 1e-9 * event.x0.abs().max(event.x.norm()).max(1.0));
    finish(event, c, t, seg.position(t), seg.velocity(t), seg.acceleration(t), lo)
}

fn finish(
    event: &Event,
    c: f64,
    t: f64,
    position: Vector3<f64>,
    velocity: Vector3<f64>,
    acceleration: Vector3<f64>,
    segment: usize,
) -> Result<RetardedPoint> {
    let separation = event.x - position;
    let distance = separation.norm();
    if distance < R_MIN {
        return Err(Error::SingularEvaluation {
            distance,
            r_min: R_MIN,
        });
    }
    let denominator = c * distance - separation.dot(&velocity);
    let threshold = EPS_DENOM * c * distance;
    if !(denominator >= threshold) {
        return Err(Error::NearLuminal {
            denominator,
            threshold,
        });
    }
    Ok(RetardedPoint {
        t,
        position,
        velocity,
        acceleration,
        separation,
        distance,
        denominator,
        segment,
    })
}

fn lower_velocity(v: &Vector3<f64>, c: f64) -> [f64; 4] {
    [c, -v.x, -v.y, -v.z]
}

fn potential_from_point(p: &RetardedPoint, strength: f64, c: f64) -> FourPotential {
    let zdot = lower_velocity(&p.velocity, c);
    FourPotential(zdot.map(|z| strength * z / p.denominator))
}

/// Liénard–Wiechert four-potential A_μ at a field event.
pub fn lw_potential(event: &Event, source: &SourceSpec) -> Result<FourPotential> {
    let c = source.worldline.c();
    let p = retarded_point(event, &source.worldline)?;
    Ok(potential_from_point(&p, source.strength, c))
}

/// Analytic gradient G[ν][μ] = ∂A_μ/∂x^ν, including the dependence of the
/// retarded time on the field point, ∂_ν t′ = R_ν / (c|R| − R·v).
pub fn potential_gradient(event: &Event, source: &SourceSpec) -> Result<[[f64; 4]; 4]> {
    let c = source.worldline.c();
    let p = retarded_point(event, &source.worldline)?;
    Ok(gradient_from_point(&p, source.strength, c))
}

fn gradient_from_point(p: &RetardedPoint, s: f64, c: f64) -> [[f64; 4]; 4] {
    let d = p.denominator;
    let zdot = lower_velocity(&p.velocity, c);
    let zddot = [0.0, -p.acceleration.x, -p.acceleration.y, -p.acceleration.z];
    // R_ν with R⁰ = |R| on the light cone.
    let r_lower = [p.distance, -p.separation.x, -p.separation.y, -p.separation.z];
    let dt = r_lower.map(|r| r / d);
    let zz = c * c - p.velocity.norm_squared();
    let r_acc = p.separation.dot(&p.acceleration);
    let mut grad = [[0.0; 4]; 4];
    for nu in 0..4 {
        let d_denominator = zdot[nu] - (zz + r_acc) * dt[nu];
        for mu in 0..4 {
            grad[nu][mu] = s * (zddot[mu] * dt[nu] / d - zdot[mu] * d_denominator / (d * d));
        }
    }
    grad
}

/// F_μν = ∂_μ A_ν − ∂_ν A_μ, evaluated analytically.
pub fn field_strength(event: &Event, source: &SourceSpec) -> Result<FieldStrength> {
    potential_gradient(event, source).map(|g| FieldStrength::from_gradient(&g))
}

/// Field strength together with the retarded point it was evaluated at.
pub fn field_strength_with_point(
    event: &Event,
    source: &SourceSpec,
) -> Result<(FieldStrength, RetardedPoint)> {
    let c = source.worldline.c();
    let p = retarded_point(event, &source.worldline)?;
    let g = gradient_from_point(&p, source.strength, c);
    Ok((FieldStrength::from_gradient(&g), p))
}

/// Finite-difference step h = max(10⁻⁶|x|, 10⁻³ m).
pub fn difference_step(event: &Event) -> f64 {
    (1e-6 * event.x.norm()).max(1e-3)
}

/// Σ_μ η^{μμ} ∂_μ A_μ by central differences with the default step.
pub fn gauge_divergence(event: &Event, source: &SourceSpec) -> Result<f64> {
    gauge_divergence_with_step(event, source, difference_step(event))
}

pub fn gauge_divergence_with_step(event: &Event, source: &SourceSpec, h: f64) -> Result<f64> {
    let mut div = 0.0;
    for mu in 0..4 {
        let plus = lw_potential(&event.shifted(mu, h), source)?.0[mu];
        let minus = lw_potential(&event.shifted(mu, -h), source)?.0[mu];
        let eta = if mu == 0 { 1.0 } else { -1.0 };
        div += eta * (plus - minus) / (2.0 * h);
    }
    Ok(div)
}

/// Σ_μ η^{μμ} ∂_μ A_μ from the analytic gradient.
pub fn gauge_divergence_analytic(event: &Event, source: &SourceSpec) -> Result<f64> {
    let g = potential_gradient(event, source)?;
    Ok(g[0][0] - g[1][1] - g[2][2] - g[3][3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::SpatialState;

    fn static_source(strength: f64, c: f64, t_end: f64) -> SourceSpec {
        let s0 = SpatialState::new(0.0, Vector3::zeros(), Vector3::zeros());
        let s1 = SpatialState::new(t_end, Vector3::zeros(), Vector3::zeros());
        SourceSpec::new(strength, Trajectory::new(vec![s0, s1], c).unwrap())
    }

    #[test]
    fn static_delay_equals_distance() {
        let src = static_source(1.0, 1.0, 10.0);
        let ev = Event::new(10.0, Vector3::new(3.0, 4.0, 0.0));
        assert_eq!(retarded_time(&ev, &src.worldline).unwrap(), 5.0);
    }

    #[test]
    fn event_on_worldline_is_singular() {
        let src = static_source(1.0, 1.0, 10.0);
        let ev = Event::new(4.0, Vector3::zeros());
        assert!(matches!(
            retarded_time(&ev, &src.worldline),
            Err(Error::SingularEvaluation { .. })
        ));
    }

    #[test]
    fn outside_span_is_insufficient_history() {
        let src = static_source(1.0, 1.0, 10.0);
        // Retarded time would be −5 s.
        let early = Event::new(0.0, Vector3::new(3.0, 4.0, 0.0));
        assert!(matches!(
            retarded_time(&early, &src.worldline),
            Err(Error::InsufficientHistory { .. })
        ));
        // Retarded time would be 15 s, past the last sample.
        let late = Event::new(20.0, Vector3::new(3.0, 4.0, 0.0));
        assert!(matches!(
            retarded_time(&late, &src.worldline),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn static_potential_is_coulomb() {
        let k = 1.327e20;
        let src = static_source(k, 299_792_458.0, 1.0e3);
        let x = Vector3::new(3.0e10, -4.0e10, 1.2e10);
        let ev = Event::at_time(600.0, x, 299_792_458.0);
        let a = lw_potential(&ev, &src).unwrap();
        assert!((a.0[0] - k / x.norm()).abs() <= 1e-15 * k / x.norm());
        assert_eq!(&a.0[1..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_strength_gives_zero_potential() {
        let src = static_source(0.0, 1.0, 10.0);
        let ev = Event::new(10.0, Vector3::new(3.0, 4.0, 0.0));
        assert_eq!(lw_potential(&ev, &src).unwrap().0, [0.0; 4]);
        assert_eq!(field_strength(&ev, &src).unwrap(), FieldStrength::default());
    }

    #[test]
    fn static_field_is_radial() {
        let k = 2.5;
        let src = static_source(k, 1.0, 100.0);
        let x = Vector3::new(3.0, 4.0, 12.0);
        let ev = Event::new(50.0, x);
        let f = field_strength(&ev, &src).unwrap();
        let r3 = x.norm().powi(3);
        for i in 0..3 {
            assert!((f.electric[i] + k * x[i] / r3).abs() < 1e-15);
            assert_eq!(f.magnetic[i], 0.0);
        }
        assert_eq!(gauge_divergence(&ev, &src).unwrap(), 0.0);
    }

    #[test]
    fn field_strength_accessors_are_antisymmetric() {
        let f = FieldStrength {
            electric: [1.0, 2.0, 3.0],
            magnetic: [4.0, 5.0, 6.0],
        };
        let m = f.matrix();
        for mu in 0..4 {
            for nu in 0..4 {
                assert_eq!(m[mu][nu], -m[nu][mu]);
            }
        }
        assert_eq!(f.get(2, 1), -4.0);
        assert_eq!(f.get(0, 3), -3.0);
    }

    #[test]
    fn near_luminal_source_rejected() {
        // Source racing towards the field point at almost c.
        let c = 1.0;
        let v = Vector3::new(1.0 - 1e-13, 0.0, 0.0);
        let s0 = SpatialState::new(0.0, Vector3::zeros(), v);
        let s1 = SpatialState::new(1.0, v, v);
        let src = SourceSpec::new(1.0, Trajectory::new(vec![s0, s1], c).unwrap());
        // Retarded time 0.5 s, when the source is 0.7 m away and closing.
        let ev = Event::new(1.2 + 0.5 * (1.0 - v.x), Vector3::new(1.2, 0.0, 0.0));
        assert!(matches!(lw_potential(&ev, &src), Err(Error::NearLuminal { .. })));
    }
}
