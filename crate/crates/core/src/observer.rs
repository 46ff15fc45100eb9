//! Mercury's perihelion advance as seen from the Earth.
//!
//! Mercury is observed at two of its perihelion passages l₁ < l₂. The
//! advance is the angle between the two Earth→Mercury sight lines. Orbits
//! are the closed-form precessing ellipses of module `kepler`, placed in a
//! frame whose third axis is normal to the Earth's orbit; Mercury's plane is
//! tilted by its inclination about the first axis.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::ephemeris::{Planet, PlanetRecord, PlanetTable};
use crate::error::{Error, Result};
use crate::kepler::{effective_eccentricity, perihelion_parameter, precession_coefficient, PrecessionModel};

const LIGHT_TIME_TOL: f64 = 1e-12;
const MAX_LIGHT_TIME_ITERS: usize = 50;

/// How the Earth's reception time is related to Mercury's emission time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightTime {
    /// Solve c(t₃ − t₁) = |x₁(t₁) − x₃(t₃)| for t₃.
    Exact,
    /// Take the Earth at the emission time, t₃ = t₁.
    NeglectEarthVelocity,
}

impl fmt::Display for LightTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LightTime::Exact => "exact",
            LightTime::NeglectEarthVelocity => "neglect-earth-velocity",
        })
    }
}

impl FromStr for LightTime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(LightTime::Exact),
            "neglect-earth-velocity" | "neglect_earth_velocity" | "neglect" => {
                Ok(LightTime::NeglectEarthVelocity)
            }
            _ => Err(Error::Validation {
                field: "light_time".into(),
                message: format!("unknown light-time mode `{s}` (expected exact or neglect-earth-velocity)"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationScenario {
    pub phi1_0_rad: f64,
    pub phi3_0_rad: f64,
    pub l1: i64,
    pub l2: i64,
    pub model: PrecessionModel,
    pub light_time: LightTime,
}

impl ObservationScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2 > self.l1) {
            return Err(Error::Validation {
                field: "l2".into(),
                message: format!("perihelion indices need l2 > l1, got l1 = {}, l2 = {}", self.l1, self.l2),
            });
        }
        for (field, v) in [("phi1_0", self.phi1_0_rad), ("phi3_0", self.phi3_0_rad)] {
            if !v.is_finite() {
                return Err(Error::Validation {
                    field: field.into(),
                    message: format!("{v} is not finite"),
                });
            }
        }
        Ok(())
    }
}

/// Mercury at a perihelion passage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MercuryPerihelion {
    pub tau: f64,
    pub t_s: f64,
    pub r_m: f64,
}

/// One Earth→Mercury sight line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SightLine {
    pub l: i64,
    pub t1_s: f64,
    pub t3_s: f64,
    pub phi1_rad: f64,
    pub tau3: f64,
    /// r₃ / a₃.
    pub earth_radius: f64,
    pub phi3_rad: f64,
    pub mercury_m: Vector3<f64>,
    pub earth_m: Vector3<f64>,
}

impl SightLine {
    /// x₁ − x₃.
    pub fn direction(&self) -> Vector3<f64> {
        self.mercury_m - self.earth_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvanceResult {
    pub scenario: ObservationScenario,
    pub alpha_rad: f64,
    pub alpha_deg: f64,
    pub first: SightLine,
    pub second: SightLine,
}

impl AdvanceResult {
    pub fn tau3(&self) -> [f64; 2] {
        [self.first.tau3, self.second.tau3]
    }

    pub fn earth_radii(&self) -> [f64; 2] {
        [self.first.earth_radius, self.second.earth_radius]
    }

    pub fn earth_angles(&self) -> [f64; 2] {
        [self.first.phi3_rad, self.second.phi3_rad]
    }

    /// Mercury and Earth positions at the first and second observation.
    pub fn positions(&self) -> [Vector3<f64>; 4] {
        [self.first.mercury_m, self.first.earth_m, self.second.mercury_m, self.second.earth_m]
    }
}

/// Perihelion indices (l₁, l₂) = (0, n) spanning `centuries` hundred Earth
/// periods: the smallest n with nT₁ ≤ 100·centuries·T₃ ≤ (n + 1)T₁.
pub fn select_perihelion_pair(centuries: u32, table: &PlanetTable) -> Result<(i64, i64)> {
    if centuries == 0 {
        return Err(Error::Validation {
            field: "centuries".into(),
            message: "must be at least 1".into(),
        });
    }
    let ratio = period_ratio(table) * 100.0 * f64::from(centuries);
    Ok((0, ratio.ceil() as i64 - 1))
}

/// T₃ / T₁ = ω₁ / ω₃.
pub fn period_ratio(table: &PlanetTable) -> f64 {
    table.mercury().mean_frequency / table.earth().mean_frequency
}

/// τ₁ = π(2l + 3/2), ω₁t₁ = τ₁ + e₁(1 − ω₁²a₁²c⁻²), r₁ = a₁(1 − e₁).
pub fn mercury_perihelion(l: i64, table: &PlanetTable) -> MercuryPerihelion {
    let m = table.mercury();
    let tau = perihelion_parameter(l);
    MercuryPerihelion {
        tau,
        t_s: (tau + effective_eccentricity(m, table.c())) / m.mean_frequency,
        r_m: m.semi_major * (1.0 - m.eccentricity),
    }
}

/// Mercury's polar angle at its `l`-th perihelion, φ₁;₀ + 2πl/γ₁.
pub fn mercury_perihelion_angle(l: i64, phi1_0: f64, table: &PlanetTable, model: PrecessionModel) -> Result<f64> {
    let gamma = precession_coefficient(table.mercury(), model, table.c())?;
    Ok(phi1_0 + TAU * l as f64 / gamma)
}

/// Solves τ − e(1 − ω²a²c⁻²)(cos τ − 1) = ωt for a planet's orbit parameter.
pub fn orbit_param_at_time(planet: &PlanetRecord, t: f64, c: f64) -> f64 {
    let w = planet.mean_frequency * t;
    let e = effective_eccentricity(planet, c);
    let f = |tau: f64| tau - e * (tau.cos() - 1.0) - w;
    let tol = 1e-12_f64.max(4.0 * f64::EPSILON * w.abs());
    // f is increasing (f' = 1 + e sin τ > 0), and the root lies within e·2 of w.
    let (mut lo, mut hi) = (w - 2.0 * e - 1e-9, w + 1e-9);
    let mut tau = w;
    for _ in 0..100 {
        let ft = f(tau);
        if ft.abs() <= tol {
            break;
        }
        if ft > 0.0 {
            hi = tau;
        } else {
            lo = tau;
        }
        let mut next = tau - ft / (1.0 + e * tau.sin());
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == tau {
            break;
        }
        tau = next;
    }
    tau
}

/// Earth's orbit parameter τ₃ at time `t`.
pub fn earth_param_at_time(t: f64, table: &PlanetTable) -> f64 {
    orbit_param_at_time(table.earth(), t, table.c())
}

/// Right-hand side −(e + sin τ)/(1 + e sin τ) of the angle equation
/// cos γ(φ − φ₀) = −(e + sin τ)/(1 + e sin τ).
pub fn angle_equation_rhs(e: f64, tau: f64) -> f64 {
    let s = tau.sin();
    -(e + s) / (1.0 + e * s)
}

/// γ(φ − φ₀) at orbit parameter τ, on the branch that increases
/// continuously with τ and vanishes at the perihelion τ = −π/2.
pub fn orbit_phase(e: f64, tau: f64) -> f64 {
    let principal = angle_equation_rhs(e, tau).clamp(-1.0, 1.0).acos();
    let shifted = tau + 0.5 * PI;
    let turns = (shifted / TAU).floor();
    let within = shifted - turns * TAU;
    if within <= PI {
        turns * TAU + principal
    } else {
        turns * TAU + TAU - principal
    }
}

/// Earth's r₃/a₃ = 1 + e₃ sin τ₃ and polar angle φ₃.
pub fn earth_radius_angle(
    tau3: f64,
    phi3_0: f64,
    table: &PlanetTable,
    model: PrecessionModel,
) -> Result<(f64, f64)> {
    let earth = table.earth();
    let gamma = precession_coefficient(earth, model, table.c())?;
    let e = earth.eccentricity;
    Ok((1.0 + e * tau3.sin(), phi3_0 + orbit_phase(e, tau3) / gamma))
}

/// Position of Mercury (orbit tilted by its inclination θ about the first
/// axis) or the Earth (in the reference plane) at radius `r` and polar
/// angle `phi`.
pub fn position3d(planet: Planet, r: f64, phi: f64, table: &PlanetTable) -> Result<Vector3<f64>> {
    let (s, c) = phi.sin_cos();
    match planet {
        Planet::Mercury => {
            let (st, ct) = table.mercury().inclination().sin_cos();
            Ok(Vector3::new(r * c, -r * ct * s, r * st * s))
        }
        Planet::Earth => Ok(Vector3::new(r * c, r * s, 0.0)),
        other => Err(Error::Domain(format!(
            "observer geometry is defined for Mercury and the Earth only, not {other}"
        ))),
    }
}

fn earth_position(t: f64, phi3_0: f64, table: &PlanetTable, model: PrecessionModel) -> Result<(f64, f64, f64, Vector3<f64>)> {
    let tau3 = earth_param_at_time(t, table);
    let (radius, phi3) = earth_radius_angle(tau3, phi3_0, table, model)?;
    let x = position3d(Planet::Earth, radius * table.earth().semi_major, phi3, table)?;
    Ok((tau3, radius, phi3, x))
}

/// Sight line at Mercury's `l`-th perihelion.
pub fn sight_line(l: i64, scenario: &ObservationScenario, table: &PlanetTable) -> Result<SightLine> {
    let c = table.c();
    let merc = mercury_perihelion(l, table);
    let phi1 = mercury_perihelion_angle(l, scenario.phi1_0_rad, table, scenario.model)?;
    let x1 = position3d(Planet::Mercury, merc.r_m, phi1, table)?;
    let mut t3 = merc.t_s;
    let mut earth = earth_position(t3, scenario.phi3_0_rad, table, scenario.model)?;
    if scenario.light_time == LightTime::Exact {
        let mut delay = 0.0_f64;
        for _ in 0..MAX_LIGHT_TIME_ITERS {
            let next = (x1 - earth.3).norm() / c;
            let done = (next - delay).abs() <= LIGHT_TIME_TOL * next;
            delay = next;
            t3 = merc.t_s + delay;
            earth = earth_position(t3, scenario.phi3_0_rad, table, scenario.model)?;
            if done {
                break;
            }
        }
    }
    let (tau3, earth_radius, phi3, x3) = earth;
    if (x1 - x3).norm() == 0.0 {
        return Err(Error::Domain(format!(
            "Mercury and the Earth coincide at perihelion l = {l}; the sight line is undefined"
        )));
    }
    Ok(SightLine {
        l,
        t1_s: merc.t_s,
        t3_s: t3,
        phi1_rad: phi1,
        tau3,
        earth_radius,
        phi3_rad: phi3,
        mercury_m: x1,
        earth_m: x3,
    })
}

/// Angle between two nonzero vectors, in [0, π].
pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// The perihelion advance α seen from the Earth between passages l₁ and l₂.
pub fn advance_angle(scenario: &ObservationScenario, table: &PlanetTable) -> Result<AdvanceResult> {
    scenario.validate()?;
    let first = sight_line(scenario.l1, scenario, table)?;
    let second = sight_line(scenario.l2, scenario, table)?;
    let alpha = angle_between(&first.direction(), &second.direction());
    Ok(AdvanceResult {
        scenario: *scenario,
        alpha_rad: alpha,
        alpha_deg: alpha.to_degrees(),
        first,
        second,
    })
}

/// α over a grid of perihelion angles; `alpha_rad[i][j]` belongs to
/// (`phi1_0[i]`, `phi3_0[j]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvanceSweep {
    pub phi1_0_rad: Vec<f64>,
    pub phi3_0_rad: Vec<f64>,
    pub alpha_rad: Vec<Vec<f64>>,
}

impl AdvanceSweep {
    /// CSV with header `phi1_0_rad,phi3_0_rad,alpha_deg`, one row per cell.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["phi1_0_rad", "phi3_0_rad", "alpha_deg"]).map_err(io)?;
        for (i, p1) in self.phi1_0_rad.iter().enumerate() {
            for (j, p3) in self.phi3_0_rad.iter().enumerate() {
                w.write_record([
                    format!("{p1:.16e}"),
                    format!("{p3:.16e}"),
                    format!("{:.16e}", self.alpha_rad[i][j].to_degrees()),
                ])
                .map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}

pub fn advance_sweep(
    phi1_grid: &[f64],
    phi3_grid: &[f64],
    base: &ObservationScenario,
    table: &PlanetTable,
) -> Result<AdvanceSweep> {
    if phi1_grid.is_empty() || phi3_grid.is_empty() {
        return Err(Error::Validation {
            field: "grid".into(),
            message: "sweep grids must be nonempty".into(),
        });
    }
    let alpha_rad = phi1_grid
        .iter()
        .map(|&p1| {
            phi3_grid
                .iter()
                .map(|&p3| {
                    let s = ObservationScenario {
                        phi1_0_rad: p1,
                        phi3_0_rad: p3,
                        ..*base
                    };
                    advance_angle(&s, table).map(|r| r.alpha_rad)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AdvanceSweep {
        phi1_0_rad: phi1_grid.to_vec(),
        phi3_0_rad: phi3_grid.to_vec(),
        alpha_rad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ephemeris::builtin_table;

    #[test]
    fn phase_is_continuous_and_increasing() {
        let e = 0.3;
        let mut prev = orbit_phase(e, -2.0);
        let mut tau = -2.0;
        while tau < 20.0 {
            tau += 1e-3;
            let p = orbit_phase(e, tau);
            assert!(p > prev, "at {tau}");
            assert!(p - prev < 1e-2);
            prev = p;
        }
    }

    #[test]
    fn phase_at_apsides() {
        assert_eq!(orbit_phase(0.2, -0.5 * PI), 0.0);
        assert!((orbit_phase(0.2, 0.5 * PI) - PI).abs() < 1e-7);
        assert!((orbit_phase(0.2, 3.5 * PI) - 2.0 * TAU).abs() < 1e-7);
    }

    #[test]
    fn circular_phase_is_shifted_parameter() {
        for tau in [0.0, 0.3, 2.0, 4.0, 10.0] {
            assert!((orbit_phase(0.0, tau) - (tau + 0.5 * PI)).abs() < 1e-7);
        }
    }

    #[test]
    fn param_solve_is_tight() {
        let table = builtin_table();
        let earth = table.earth();
        let e = effective_eccentricity(earth, table.c());
        for t in [0.0, 1.0e5, 3.0e7, 3.1e9, 6.3e9] {
            let tau = earth_param_at_time(t, &table);
            let res = tau - e * (tau.cos() - 1.0) - earth.mean_frequency * t;
            assert!(res.abs() < 1e-12, "t = {t}: {res}");
        }
        assert_eq!(earth_param_at_time(0.0, &table), 0.0);
    }

    #[test]
    fn scenario_needs_increasing_indices() {
        let s = ObservationScenario {
            phi1_0_rad: 0.0,
            phi3_0_rad: 0.0,
            l1: 3,
            l2: 3,
            model: PrecessionModel::Causal,
            light_time: LightTime::Exact,
        };
        assert!(advance_angle(&s, &builtin_table()).is_err());
    }

    #[test]
    fn other_planets_have_no_geometry() {
        assert!(position3d(Planet::Mars, 1.0, 0.0, &builtin_table()).is_err());
    }

    #[test]
    fn light_time_names_round_trip() {
        for m in [LightTime::Exact, LightTime::NeglectEarthVelocity] {
            assert_eq!(m.to_string().parse::<LightTime>().unwrap(), m);
        }
        assert!("later".parse::<LightTime>().is_err());
    }
}
