use std::path::PathBuf;

use causal_gravity::ephemeris::Planet;
use causal_gravity::kepler::PrecessionModel;
use causal_gravity::observer::LightTime;
use clap::{Args, Parser, Subcommand};

/// Retarded-gravity orbits and the Mercury perihelion advance seen from the Earth.
#[derive(Debug, Parser)]
#[command(name = "causal-gravity", version)]
pub struct Cli {
    /// INI file of planet overrides applied on top of the built-in table.
    #[arg(long, global = true, value_name = "PATH")]
    pub ephemeris: Option<PathBuf>,

    /// Directory for bulk output files.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Machine-readable JSON on stdout instead of a summary.
    #[arg(long, global = true)]
    pub json: bool,

    /// Read input angles in degrees instead of radians.
    #[arg(long, global = true)]
    pub deg: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Orbit parameters, precession coefficient and century advance.
    Orbit {
        #[arg(value_parser = parse_planet)]
        planet: Planet,
        /// Precession model used for the orbit parameters.
        #[arg(long, default_value = "causal", value_parser = parse_model)]
        model: PrecessionModel,
    },
    /// Integrate a planet in the Sun's static field from perihelion.
    Integrate {
        #[arg(value_parser = parse_planet)]
        planet: Planet,
        #[arg(long, default_value_t = 1.0)]
        periods: f64,
        #[command(flatten)]
        tolerances: Tolerances,
    },
    /// Integrate two bodies in each other's retarded field (scenario JSON).
    Pair {
        scenario: PathBuf,
    },
    /// Advance angle between the sight lines at two perihelion passages.
    Advance {
        #[command(flatten)]
        observation: Observation,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phi1: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phi3: f64,
    },
    /// Advance angle over a uniform grid of perihelion angles in [0, 2π).
    Sweep {
        #[command(flatten)]
        observation: Observation,
        #[arg(long, default_value_t = 36)]
        phi1_steps: usize,
        #[arg(long, default_value_t = 36)]
        phi3_steps: usize,
    },
    /// Print the planet table.
    Constants,
}

#[derive(Debug, Args)]
pub struct Tolerances {
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Largest step (s).
    #[arg(long)]
    pub max_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Observation {
    /// Length of the observation window in centuries.
    #[arg(long, default_value_t = 1)]
    pub centuries: u32,
    #[arg(long, default_value = "causal", value_parser = parse_model)]
    pub model: PrecessionModel,
    #[arg(long, default_value = "exact", value_parser = parse_light_time)]
    pub light_time: LightTime,
}

fn parse_planet(s: &str) -> Result<Planet, String> {
    s.parse().map_err(|e: causal_gravity::Error| e.to_string())
}

fn parse_model(s: &str) -> Result<PrecessionModel, String> {
    s.parse().map_err(|e: causal_gravity::Error| e.to_string())
}

fn parse_light_time(s: &str) -> Result<LightTime, String> {
    s.parse().map_err(|e: causal_gravity::Error| e.to_string())
}
