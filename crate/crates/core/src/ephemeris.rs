//! Physical constants and the nine-planet orbital data table.
//!
//! The built-in values are the textbook figures (semi-major axes, the
//! combinations ω²a³/c², and the two printed ω/c values for Mercury and the
//! Earth). Mercury's eccentricity is kept at 0.21 rather than the modern
//! 0.2056 so the reproduced checkpoints line up; an override file can change it.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kepler;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Gravitation constant (m³ kg⁻¹ s⁻²).
pub const GRAVITATION_CONSTANT: f64 = 6.673e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Speed of light (m/s).
    pub c: f64,
    /// Gravitation constant (m³ kg⁻¹ s⁻²).
    pub g: f64,
    /// Sun mass parameter m₁₀G (m³/s²).
    pub sun_mass_parameter: f64,
}

impl Constants {
    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("c", self.c),
            ("G", self.g),
            ("sun_mass_parameter", self.sun_mass_parameter),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Validation {
                    field: field.into(),
                    message: format!("must be finite and positive, got {value}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Planet {
    Mercury,
    Venus,
    Earth,
    Mars,
    Jupiter,
    Saturn,
    Uranus,
    Neptune,
    Pluto,
}

impl Planet {
    pub const ALL: [Planet; 9] = [
        Planet::Mercury,
        Planet::Venus,
        Planet::Earth,
        Planet::Mars,
        Planet::Jupiter,
        Planet::Saturn,
        Planet::Uranus,
        Planet::Neptune,
        Planet::Pluto,
    ];

    /// Ordinal counted from the Sun, Mercury = 1.
    pub fn index(self) -> usize {
        self as usize + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Planet::Mercury => "mercury",
            Planet::Venus => "venus",
            Planet::Earth => "earth",
            Planet::Mars => "mars",
            Planet::Jupiter => "jupiter",
            Planet::Saturn => "saturn",
            Planet::Uranus => "uranus",
            Planet::Neptune => "neptune",
            Planet::Pluto => "pluto",
        }
    }
}

impl fmt::Display for Planet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Planet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Planet::ALL
            .into_iter()
            .find(|p| p.name() == lower)
            .ok_or_else(|| Error::Validation {
                field: "planet".into(),
                message: format!("unknown planet `{s}`"),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanetRecord {
    pub planet: Planet,
    /// Orbit eccentricity eₖ.
    pub eccentricity: f64,
    /// Semi-major axis aₖ (m).
    pub semi_major: f64,
    /// Mean angular frequency ωₖ (rad/s).
    pub mean_frequency: f64,
    /// The combination ωₖ²aₖ³/c² (m).
    pub omega2a3_over_c2: f64,
    /// Orbit plane inclination against the Earth's orbit (degrees).
    pub inclination_deg: f64,
}

impl PlanetRecord {
    pub fn inclination(&self) -> f64 {
        self.inclination_deg.to_radians()
    }

    /// ωₖaₖ/c, the mean orbital speed in units of c.
    pub fn speed_ratio(&self, c: f64) -> f64 {
        self.mean_frequency * self.semi_major / c
    }

    /// ωₖ²aₖ²/c².
    pub fn speed_ratio_sq(&self, c: f64) -> f64 {
        let b = self.speed_ratio(c);
        b * b
    }

    /// Orbit "period" 2π/ωₖ (s).
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.mean_frequency
    }

    pub fn validate(&self, c: f64) -> Result<()> {
        let field = |name: &str| format!("{}.{name}", self.planet);
        if !(self.eccentricity > 0.0 && self.eccentricity < 1.0) {
            return Err(Error::Validation {
                field: field("e"),
                message: format!("eccentricity must lie in (0, 1), got {}", self.eccentricity),
            });
        }
        if !(self.semi_major.is_finite() && self.semi_major > 0.0) {
            return Err(Error::Validation {
                field: field("a_m"),
                message: format!("semi-major axis must be positive, got {}", self.semi_major),
            });
        }
        if !(self.mean_frequency.is_finite() && self.mean_frequency > 0.0) {
            return Err(Error::Validation {
                field: field("omega_rad_s"),
                message: format!("mean frequency must be positive, got {}", self.mean_frequency),
            });
        }
        if !self.inclination_deg.is_finite() {
            return Err(Error::Validation {
                field: field("theta_deg"),
                message: "inclination must be finite".into(),
            });
        }
        let combo = self.mean_frequency.powi(2) * self.semi_major.powi(3) / (c * c);
        let rel = (self.omega2a3_over_c2 - combo).abs() / self.omega2a3_over_c2;
        if !(rel < 1e-2) {
            return Err(Error::Validation {
                field: field("omega_rad_s"),
                message: format!(
                    "ω²a³/c² = {combo:.1} m disagrees with the tabulated {:.1} m",
                    self.omega2a3_over_c2
                ),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanetTable {
    pub records: BTreeMap<Planet, PlanetRecord>,
    pub constants: Constants,
}

// (planet, e, a [m], ω²a³/c² [m], printed ω/c [1/m] when available)
const BUILTIN_ROWS: [(Planet, f64, f64, f64, Option<f64>); 9] = [
    (Planet::Mercury, 0.21, 0.5791e11, 1477.0, Some(275.8e-17)),
    (Planet::Venus, 0.007, 1.0821e11, 1477.0, None),
    (Planet::Earth, 0.017, 1.4960e11, 1477.0, Some(66.41e-17)),
    (Planet::Mars, 0.093, 2.2794e11, 1477.0, None),
    (Planet::Jupiter, 0.048, 7.783e11, 1478.0, None),
    (Planet::Saturn, 0.056, 14.27e11, 1477.0, None),
    (Planet::Uranus, 0.047, 28.69e11, 1476.0, None),
    (Planet::Neptune, 0.009, 44.98e11, 1478.0, None),
    (Planet::Pluto, 0.249, 59.00e11, 1469.0, None),
];

const MERCURY_INCLINATION_DEG: f64 = 7.0;

fn frequency_from_combination(combo: f64, a: f64, c: f64) -> f64 {
    (c * c * combo / a.powi(3)).sqrt()
}

/// The built-in table.
pub fn builtin_table() -> PlanetTable {
    let c = SPEED_OF_LIGHT;
    let records = BUILTIN_ROWS
        .iter()
        .map(|&(planet, e, a, combo, omega_over_c)| {
            let omega = match omega_over_c {
                Some(w) => w * c,
                None => frequency_from_combination(combo, a, c),
            };
            let rec = PlanetRecord {
                planet,
                eccentricity: e,
                semi_major: a,
                mean_frequency: omega,
                omega2a3_over_c2: combo,
                inclination_deg: if planet == Planet::Mercury {
                    MERCURY_INCLINATION_DEG
                } else {
                    0.0
                },
            };
            (planet, rec)
        })
        .collect::<BTreeMap<_, _>>();
    let sun_mass_parameter = kepler::sun_mass_from_orbit(&records[&Planet::Mercury], c)
        .expect("built-in Mercury row is sub-relativistic");
    PlanetTable {
        records,
        constants: Constants {
            c,
            g: GRAVITATION_CONSTANT,
            sun_mass_parameter,
        },
    }
}

impl PlanetTable {
    pub fn get(&self, planet: Planet) -> &PlanetRecord {
        &self.records[&planet]
    }

    pub fn mercury(&self) -> &PlanetRecord {
        self.get(Planet::Mercury)
    }

    pub fn earth(&self) -> &PlanetRecord {
        self.get(Planet::Earth)
    }

    pub fn c(&self) -> f64 {
        self.constants.c
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        for rec in self.records.values() {
            rec.validate(self.constants.c)?;
        }
        Ok(())
    }

    /// Serializes every record in the override-file format. Reloading the
    /// output reproduces the table exactly.
    pub fn to_ini(&self) -> String {
        let mut out = String::new();
        for rec in self.records.values() {
            // Display for f64 is the shortest round-trip representation.
            let _ = writeln!(out, "[{}]", rec.planet);
            let _ = writeln!(out, "e = {}", rec.eccentricity);
            let _ = writeln!(out, "a_m = {}", rec.semi_major);
            let _ = writeln!(out, "omega_rad_s = {}", rec.mean_frequency);
            let _ = writeln!(out, "theta_deg = {}", rec.inclination_deg);
            out.push('\n');
        }
        out
    }

    /// Applies override text (see [`load_table`]) on top of this table.
    pub fn with_overrides(&self, text: &str) -> Result<PlanetTable> {
        let overrides = parse_overrides(text)?;
        let mut table = self.clone();
        let c = table.constants.c;
        for ov in overrides {
            let rec = table.records.get_mut(&ov.planet).expect("all planets present");
            if let Some(e) = ov.e {
                rec.eccentricity = e;
            }
            if let Some(theta) = ov.theta_deg {
                rec.inclination_deg = theta;
            }
            let a_changed = ov.a_m.is_some_and(|a| a != rec.semi_major);
            let w_changed = ov.omega_rad_s.is_some_and(|w| w != rec.mean_frequency);
            if a_changed || w_changed {
                if let Some(a) = ov.a_m {
                    rec.semi_major = a;
                }
                rec.mean_frequency = match ov.omega_rad_s {
                    Some(w) => w,
                    None => frequency_from_combination(rec.omega2a3_over_c2, rec.semi_major, c),
                };
                rec.omega2a3_over_c2 =
                    rec.mean_frequency.powi(2) * rec.semi_major.powi(3) / (c * c);
            }
        }
        table.validate()?;
        table.constants.sun_mass_parameter = kepler::sun_mass_from_orbit(table.mercury(), c)?;
        Ok(table)
    }
}

/// Loads an override file and applies it over [`builtin_table`].
///
/// The file is INI-style: one `[planet]` section per overridden body with
/// keys `e`, `a_m`, `omega_rad_s`, `theta_deg`. `#` and `;` start comments.
/// Overriding `a_m` alone keeps ω²a³/c² and rederives ω.
pub fn load_table(path: impl AsRef<Path>) -> Result<PlanetTable> {
    let text = std::fs::read_to_string(path)?;
    builtin_table().with_overrides(&text)
}

#[derive(Debug, Default)]
struct Override {
    planet: Option<Planet>,
    e: Option<f64>,
    a_m: Option<f64>,
    omega_rad_s: Option<f64>,
    theta_deg: Option<f64>,
}

struct PlanetOverride {
    planet: Planet,
    e: Option<f64>,
    a_m: Option<f64>,
    omega_rad_s: Option<f64>,
    theta_deg: Option<f64>,
}

fn parse_overrides(text: &str) -> Result<Vec<PlanetOverride>> {
    let mut sections: Vec<Override> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let malformed = |message: String| Error::MalformedConfig {
            line: line_no,
            message,
        };
        let line = raw
            .split(['#', ';'])
            .next()
            .unwrap_or_default()
            .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| malformed(format!("unterminated section header `{line}`")))?;
            let planet: Planet = name
                .parse()
                .map_err(|_| malformed(format!("unknown section `{}`", name.trim())))?;
            if sections.iter().any(|s| s.planet == Some(planet)) {
                return Err(malformed(format!("duplicate section `{planet}`")));
            }
            sections.push(Override {
                planet: Some(planet),
                ..Default::default()
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| malformed(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| malformed(format!("`{}` is not a number", value.trim())))?;
        if !value.is_finite() {
            return Err(malformed(format!("`{key}` must be finite")));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| malformed(format!("key `{key}` outside of any section")))?;
        let slot = match key {
            "e" => &mut section.e,
            "a_m" => &mut section.a_m,
            "omega_rad_s" => &mut section.omega_rad_s,
            "theta_deg" => &mut section.theta_deg,
            _ => return Err(malformed(format!("unknown key `{key}`"))),
        };
        if slot.replace(value).is_some() {
            return Err(malformed(format!("duplicate key `{key}`")));
        }
    }
    Ok(sections
        .into_iter()
        .map(|s| PlanetOverride {
            planet: s.planet.expect("section always set"),
            e: s.e,
            a_m: s.a_m,
            omega_rad_s: s.omega_rad_s,
            theta_deg: s.theta_deg,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values() {
        let t = builtin_table();
        assert_eq!(t.records.len(), 9);
        assert_eq!(t.mercury().eccentricity, 0.21);
        assert_eq!(t.earth().semi_major, 1.4960e11);
        assert_eq!(t.get(Planet::Pluto).omega2a3_over_c2, 1469.0);
        assert_eq!(t.get(Planet::Pluto).eccentricity, 0.249);
        assert_eq!(t.get(Planet::Uranus).omega2a3_over_c2, 1476.0);
        assert_eq!(t.get(Planet::Jupiter).omega2a3_over_c2, 1478.0);
        assert_eq!(t.mercury().inclination_deg, 7.0);
        assert_eq!(t.constants.g, 6.673e-11);
        t.validate().unwrap();
    }

    #[test]
    fn derived_frequencies_match_printed_values() {
        let t = builtin_table();
        let c = t.c();
        for (planet, printed) in [(Planet::Mercury, 275.8e-17), (Planet::Earth, 66.41e-17)] {
            let rec = t.get(planet);
            let derived = frequency_from_combination(rec.omega2a3_over_c2, rec.semi_major, c) / c;
            // 4 significant figures: within one unit in the last printed digit.
            assert!(
                ((derived - printed) / printed).abs() < 2e-4,
                "{planet}: {derived} vs {printed}"
            );
        }
    }

    #[test]
    fn empty_override_is_identity() {
        let t = builtin_table().with_overrides("").unwrap();
        assert_eq!(t, builtin_table());
        let t = builtin_table().with_overrides("# nothing\n\n; here\n").unwrap();
        assert_eq!(t, builtin_table());
    }

    #[test]
    fn single_field_override() {
        let base = builtin_table();
        let t = base.with_overrides("[mercury]\ne = 0.2056\n").unwrap();
        assert_eq!(t.mercury().eccentricity, 0.2056);
        let mut expected = base.clone();
        expected
            .records
            .get_mut(&Planet::Mercury)
            .unwrap()
            .eccentricity = 0.2056;
        assert_eq!(t, expected);
    }

    #[test]
    fn eccentricity_out_of_range() {
        let err = builtin_table()
            .with_overrides("[Mercury]\ne = 1.3\n")
            .unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "mercury.e"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_lines_are_reported() {
        let cases = [
            ("[mercury]\nfoo = 1\n", 2),
            ("e = 0.1\n", 1),
            ("[mercury]\n\ne = abc\n", 3),
            ("[vulcan]\n", 1),
            ("[mercury\n", 1),
            ("[mercury]\ne = 0.1\ne = 0.2\n", 3),
            ("[earth]\njust text\n", 2),
        ];
        for (text, line) in cases {
            match builtin_table().with_overrides(text) {
                Err(Error::MalformedConfig { line: got, .. }) => assert_eq!(got, line, "{text:?}"),
                other => panic!("{text:?}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn semi_major_override_keeps_kepler_combination() {
        let t = builtin_table()
            .with_overrides("[mars]\na_m = 2.3e11\n")
            .unwrap();
        let mars = t.get(Planet::Mars);
        assert_eq!(mars.semi_major, 2.3e11);
        assert!((mars.omega2a3_over_c2 - 1477.0).abs() < 1e-9);
        mars.validate(t.c()).unwrap();
    }

    #[test]
    fn explicit_frequency_redefines_combination() {
        let t = builtin_table()
            .with_overrides("[earth]\nomega_rad_s = 1e-7\n")
            .unwrap();
        assert!((t.earth().mean_frequency - 1e-7).abs() < 1e-20);
        t.earth().validate(t.c()).unwrap();
    }

    #[test]
    fn planet_names_parse() {
        for p in Planet::ALL {
            assert_eq!(p.name().parse::<Planet>().unwrap(), p);
            assert_eq!(p.name().to_uppercase().parse::<Planet>().unwrap(), p);
        }
        assert!("vulcan".parse::<Planet>().is_err());
        assert_eq!(Planet::Mercury.index(), 1);
        assert_eq!(Planet::Pluto.index(), 9);
    }
}
