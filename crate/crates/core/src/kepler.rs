//! Closed-form relativistic Kepler problem in the field of a resting Sun.
//!
//! The orbit is r = p / (1 + e cos γ(φ − φ₀)) with a precession coefficient
//! γ slightly below one. Everything here uses the exact expressions; the
//! first-order expansions only appear in tests.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::ephemeris::PlanetRecord;
use crate::error::{Error, Result};
pub use crate::state::SpatialState;

/// Arcseconds in a full turn.
const ARCSEC_PER_TURN: f64 = 360.0 * 3600.0;

/// Integrals of motion of the central-field equations.
///
/// `m` is the angular momentum per unit rest mass, x × γv (m²/s). `e` is the
/// energy c²γ − m₁₀G/|x| (m²/s²); `binding` holds e − c² computed without
/// cancellation so that the orbit size is resolved to full precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedQuantities {
    pub m: Vector3<f64>,
    pub e: f64,
    pub binding: f64,
}

impl ConservedQuantities {
    pub fn new(m: Vector3<f64>, e: f64, c: f64) -> Self {
        Self {
            m,
            e,
            binding: e - c * c,
        }
    }

    /// c⁴ − E², evaluated as −b(2c² + b).
    pub fn c4_minus_e2(&self, c: f64) -> f64 {
        -self.binding * (2.0 * c * c + self.binding)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecessionModel {
    /// Retarded-potential law: 1 − γ ≈ ½ω²a²c⁻²(1 − e²)⁻¹.
    Causal,
    /// Geodesic orbits: γ = 1 − 3ω²a²c⁻²(1 − e²)⁻¹.
    GeneralRelativity,
}

impl PrecessionModel {
    /// Leading-order factor in front of ω²a²c⁻²(1 − e²)⁻¹.
    pub fn factor(self) -> f64 {
        match self {
            PrecessionModel::Causal => 0.5,
            PrecessionModel::GeneralRelativity => 3.0,
        }
    }
}

impl fmt::Display for PrecessionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrecessionModel::Causal => "causal",
            PrecessionModel::GeneralRelativity => "gr",
        })
    }
}

impl FromStr for PrecessionModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "causal" => Ok(PrecessionModel::Causal),
            "gr" | "general_relativity" | "general-relativity" => {
                Ok(PrecessionModel::GeneralRelativity)
            }
            other => Err(Error::Validation {
                field: "model".into(),
                message: format!("unknown precession model `{other}` (expected causal or gr)"),
            }),
        }
    }
}

/// Shape, orientation and timing of a precessing ellipse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitParams {
    /// Semi-latus rectum (m).
    pub p: f64,
    pub e: f64,
    /// Precession coefficient γ.
    pub gamma: f64,
    /// 1 − γ, kept separately because it is ~10⁻⁸ for the planets.
    pub gamma_defect: f64,
    /// Perihelion angle φ₀ (rad).
    pub phi0: f64,
    /// Semi-major axis (m).
    pub a: f64,
    /// Semi-minor axis (m).
    pub b: f64,
    /// Radial "period" (s).
    pub period: f64,
    /// Mean angular frequency 2π/T (rad/s).
    pub omega: f64,
}

impl OrbitParams {
    /// Orbit of a tabulated planet under the given precession model.
    pub fn from_planet(
        planet: &PlanetRecord,
        model: PrecessionModel,
        phi0: f64,
        c: f64,
    ) -> Result<Self> {
        let defect = precession_defect(planet, model, c)?;
        let e = planet.eccentricity;
        let a = planet.semi_major;
        Ok(Self {
            p: a * (1.0 - e * e),
            e,
            gamma: 1.0 - defect,
            gamma_defect: defect,
            phi0,
            a,
            b: a * (1.0 - e * e).sqrt(),
            period: TAU / planet.mean_frequency,
            omega: planet.mean_frequency,
        })
    }

    pub fn perihelion_radius(&self) -> f64 {
        self.p / (1.0 + self.e)
    }

    pub fn aphelion_radius(&self) -> f64 {
        self.p / (1.0 - self.e)
    }
}

fn validate_state(state: &SpatialState, c: f64) -> Result<f64> {
    let r = state.x.norm();
    if !(r > 0.0) {
        return Err(Error::SingularEvaluation {
            distance: r,
            r_min: 0.0,
        });
    }
    state.check_subluminal(c)?;
    Ok(r)
}

/// Angular momentum and energy of a state in the field of a Sun with mass
/// parameter `m10g` resting at the origin.
pub fn conserved_quantities(state: &SpatialState, m10g: f64, c: f64) -> Result<ConservedQuantities> {
    let r = validate_state(state, c)?;
    let v2 = state.v.norm_squared();
    let gamma = 1.0 / (1.0 - v2 / (c * c)).sqrt();
    let m = state.x.cross(&state.v) * gamma;
    // c²(γ − 1) = γ²v²/(γ + 1), exact and free of cancellation.
    let kinetic = gamma * gamma * v2 / (gamma + 1.0);
    let binding = kinetic - m10g / r;
    Ok(ConservedQuantities {
        m,
        e: c * c * gamma - m10g / r,
        binding,
    })
}

/// Orbit parameters from the integrals of motion.
pub fn orbit_from_invariants(
    q: &ConservedQuantities,
    m10g: f64,
    phi0: f64,
    c: f64,
) -> Result<OrbitParams> {
    let c2 = c * c;
    let m_abs = q.m.norm();
    let k2 = m10g * m10g;
    let cm2 = c2 * m_abs * m_abs;
    if !(cm2 - k2 > 0.0) {
        return Err(Error::UnsupportedOrbit {
            inequality: "c²|M|² − m₁₀²G² > 0",
            detail: format!("c²|M|² = {cm2:e}, m₁₀²G² = {k2:e}"),
        });
    }
    if !(q.e > 0.0) {
        return Err(Error::UnsupportedOrbit {
            inequality: "E > 0",
            detail: format!("E = {:e}", q.e),
        });
    }
    if !(q.binding < 0.0) {
        return Err(Error::UnboundOrbit {
            energy: q.e,
            c2,
        });
    }
    let c4_e2 = q.c4_minus_e2(c);
    let e2_c4 = -c4_e2;
    if !(m_abs * m_abs * e2_c4 + k2 * c2 > 0.0) {
        return Err(Error::UnsupportedOrbit {
            inequality: "|M|²(E² − c⁴) + m₁₀²G²c² > 0",
            detail: format!("|M|² = {:e}, E² − c⁴ = {e2_c4:e}", m_abs * m_abs),
        });
    }
    let ke = m10g * q.e;
    let p = (cm2 - k2) / ke;
    let ecc = (cm2 * e2_c4 + k2 * c2 * c2).max(0.0).sqrt() / ke;
    let z = k2 / cm2;
    let gamma = (1.0 - z).sqrt();
    let a = ke / c4_e2;
    let b = (cm2 - k2).sqrt() / c4_e2.sqrt();
    let period = TAU * m10g * c2 * c / c4_e2.powf(1.5);
    Ok(OrbitParams {
        p,
        e: ecc,
        gamma,
        gamma_defect: z / (1.0 + gamma),
        phi0,
        a,
        b,
        period,
        omega: TAU / period,
    })
}

/// Mean frequency from the energy, ω = (c⁴ − E²)^{3/2} / (m₁₀G c³).
pub fn frequency_from_energy(q: &ConservedQuantities, m10g: f64, c: f64) -> f64 {
    q.c4_minus_e2(c).powf(1.5) / (m10g * c * c * c)
}

/// Inverse of [`frequency_from_energy`]: E = c √(c² − (ω m₁₀G)^{2/3}).
pub fn energy_from_frequency(omega: f64, m10g: f64, c: f64) -> f64 {
    c * (c * c - (omega * m10g).powf(2.0 / 3.0)).sqrt()
}

/// r = p / (1 + e cos γ(φ − φ₀)).
pub fn radius_at_angle(orbit: &OrbitParams, phi: f64) -> f64 {
    orbit.p / (1.0 + orbit.e * (orbit.gamma * (phi - orbit.phi0)).cos())
}

/// 1 − γ for a tabulated planet, computed without cancellation.
pub fn precession_defect(planet: &PlanetRecord, model: PrecessionModel, c: f64) -> Result<f64> {
    let x = planet.speed_ratio_sq(c);
    let one_minus_e2 = 1.0 - planet.eccentricity * planet.eccentricity;
    match model {
        PrecessionModel::Causal => {
            let disc = 1.0 - 4.0 * x;
            if !(disc > 0.0) {
                return Err(Error::Domain(format!(
                    "ωa = {:e} m/s must be below c/2",
                    planet.mean_frequency * planet.semi_major
                )));
            }
            let s = 1.0 + disc.sqrt();
            let y = 4.0 * x / (one_minus_e2 * s * s);
            let root = (1.0 + y).sqrt();
            Ok(y / (root * (root + 1.0)))
        }
        PrecessionModel::GeneralRelativity => {
            let defect = 3.0 * x / one_minus_e2;
            if !(defect < 1.0) {
                return Err(Error::Domain(format!(
                    "3ω²a²c⁻²(1 − e²)⁻¹ = {defect} leaves no positive precession coefficient"
                )));
            }
            Ok(defect)
        }
    }
}

/// Precession coefficient γ of a tabulated planet.
pub fn precession_coefficient(planet: &PlanetRecord, model: PrecessionModel, c: f64) -> Result<f64> {
    precession_defect(planet, model, c).map(|d| 1.0 - d)
}

/// Perihelion advance accumulated over `periods_per_century` revolutions,
/// (1 − γ)·360·N·3600 arcseconds.
pub fn century_advance(
    planet: &PlanetRecord,
    model: PrecessionModel,
    periods_per_century: u32,
    c: f64,
) -> Result<f64> {
    if periods_per_century == 0 {
        return Err(Error::Domain("periods_per_century must be positive".into()));
    }
    let defect = precession_defect(planet, model, c)?;
    Ok(advance_arcsec(defect, periods_per_century))
}

pub(crate) fn advance_arcsec(gamma_defect: f64, periods: u32) -> f64 {
    gamma_defect * ARCSEC_PER_TURN * f64::from(periods)
}

/// Polar angle of the `l`-th perihelion passage, φ₀ + 2πl/γ.
pub fn perihelion_angle(orbit: &OrbitParams, l: i64) -> f64 {
    orbit.phi0 + TAU * l as f64 / orbit.gamma
}

/// Radius and time at the dimensionless orbit parameter τ, normalised so
/// that t(0) = 0:
///
/// r/a = 1 + e sin τ, ωt = τ − e(1 − ω²a²c⁻²)(cos τ − 1).
///
/// Perihelion passages sit at τ = π(2l + 3/2).
pub fn parametric_state(planet: &PlanetRecord, tau: f64, c: f64) -> (f64, f64) {
    let e = planet.eccentricity;
    let r = planet.semi_major * (1.0 + e * tau.sin());
    let t = parametric_phase(planet, tau, c) / planet.mean_frequency;
    (r, t)
}

/// ωt as a function of τ.
pub fn parametric_phase(planet: &PlanetRecord, tau: f64, c: f64) -> f64 {
    let e_eff = effective_eccentricity(planet, c);
    tau - e_eff * (tau.cos() - 1.0)
}

/// e(1 − ω²a²c⁻²), the eccentricity entering the time law.
pub fn effective_eccentricity(planet: &PlanetRecord, c: f64) -> f64 {
    planet.eccentricity * (1.0 - planet.speed_ratio_sq(c))
}

/// τ of the `l`-th perihelion passage.
pub fn perihelion_parameter(l: i64) -> f64 {
    PI * (2.0 * l as f64 + 1.5)
}

fn sun_mass_branch(omega: f64, a: f64, c: f64, sigma: f64) -> Result<f64> {
    let x4 = 4.0 * (omega * a / c).powi(2);
    if !(x4 < 1.0) {
        return Err(Error::Domain(format!(
            "4ω²a²c⁻² = {x4} must be below 1 for a real mass parameter"
        )));
    }
    let half = 0.5 * (1.0 + sigma * (1.0 - x4).sqrt());
    Ok(omega * omega * a.powi(3) / half.powf(1.5))
}

/// Sun mass parameter m₁₀G implied by a planet's a and ω (physical branch).
pub fn sun_mass_from_orbit(planet: &PlanetRecord, c: f64) -> Result<f64> {
    sun_mass_branch(planet.mean_frequency, planet.semi_major, c, 1.0)
}

/// Circular-orbit residual (1 − a²ω²c⁻²)^{−1/2} a³ω² − m₁₀G; zero on a
/// consistent circular orbit.
pub fn circular_check(a: f64, omega: f64, m10g: f64, c: f64) -> f64 {
    let beta2 = (a * omega / c).powi(2);
    a.powi(3) * omega * omega / (1.0 - beta2).sqrt() - m10g
}

/// Speed-scaled momentum |γv| of the circular orbit of radius `a`.
pub fn circular_momentum(a: f64, m10g: f64, c: f64) -> f64 {
    // u²/√(1 + u²/c²) = k/a  ⇒  u⁴ − (q/c²)u² − q = 0 with q = (k/a)².
    let q = (m10g / a).powi(2);
    let b = q / (c * c);
    let u2 = 0.5 * (b + (b * b + 4.0 * q).sqrt());
    u2.sqrt()
}

/// State on the circular orbit of radius `a` in the (x, y) plane, at φ = 0.
pub fn circular_state(a: f64, m10g: f64, c: f64) -> SpatialState {
    let u = circular_momentum(a, m10g, c);
    SpatialState::from_momentum(0.0, Vector3::new(a, 0.0, 0.0), Vector3::new(0.0, u, 0.0), c)
}

/// Angular frequency of the circular orbit of radius `a`.
pub fn circular_frequency(a: f64, m10g: f64, c: f64) -> f64 {
    circular_state(a, m10g, c).v.norm() / a
}

/// Perihelion state, in the (x, y) plane at polar angle `phi0`, of the orbit
/// whose invariants give semi-major axis `a` and eccentricity `e`.
pub fn perihelion_state(a: f64, e: f64, m10g: f64, c: f64, phi0: f64) -> Result<SpatialState> {
    if !(a > 0.0 && (0.0..1.0).contains(&e)) {
        return Err(Error::Domain(format!("need a > 0 and 0 ≤ e < 1, got a = {a}, e = {e}")));
    }
    let c2 = c * c;
    let ka = m10g / a;
    // b = E − c² solves b² + (2c² + k/a)b + (k/a)c² = 0 (from a = kE/(c⁴ − E²)).
    let s = 2.0 * c2 + ka;
    let binding = -2.0 * ka * c2 / (s + (s * s - 4.0 * ka * c2).sqrt());
    let energy = c2 + binding;
    let p = a * (1.0 - e * e);
    let m2 = (p * m10g * energy + m10g * m10g) / c2;
    let rp = p / (1.0 + e);
    let u = m2.sqrt() / rp;
    let (sin, cos) = phi0.sin_cos();
    Ok(SpatialState::from_momentum(
        0.0,
        Vector3::new(rp * cos, rp * sin, 0.0),
        Vector3::new(-u * sin, u * cos, 0.0),
        c,
    ))
}
