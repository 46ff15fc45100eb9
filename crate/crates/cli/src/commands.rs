use std::f64::consts::TAU;
use std::fs::{self, File};
use std::fmt::Write as _;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use causal_gravity::dynamics::{
    conservation_report, integrate_central, integrate_retarded_pair, IntegratorConfig,
};
use causal_gravity::ephemeris::{Planet, PlanetTable};
use causal_gravity::kepler::{
    century_advance, conserved_quantities, orbit_from_invariants, perihelion_state, OrbitParams, PrecessionModel,
};
use causal_gravity::lw::{SourceSpec, Trajectory};
use causal_gravity::observer::{advance_angle, advance_sweep, select_perihelion_pair, ObservationScenario};
use causal_gravity::SpatialState;
use nalgebra::Vector3;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::{Observation, Tolerances};

/// Observed advance quoted in the literature, degrees per century. Reported
/// alongside α for reference only.
const OBSERVED_ADVANCE_DEG: f64 = 1.55548;

pub struct Session {
    pub table: PlanetTable,
    pub out: PathBuf,
    pub json: bool,
    pub deg: bool,
}

/// Six significant digits for console summaries.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-3..1e6).contains(&a) {
        format!("{x:.5e}")
    } else {
        let digits = if a == 0.0 { 0 } else { a.log10().floor() as i32 };
        format!("{x:.*}", (5 - digits).max(0) as usize)
    }
}

fn to_json(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok((path, BufWriter::new(file)))
}

/// Whole revolutions of `planet` within one century of Earth years.
fn periods_per_century(table: &PlanetTable, planet: Planet) -> u32 {
    (100.0 * table.get(planet).mean_frequency / table.earth().mean_frequency).floor() as u32
}

pub fn orbit(ctx: &Session, planet: Planet, model: PrecessionModel) -> Result<String> {
    let mut out = String::new();
    let c = ctx.table.c();
    let rec = ctx.table.get(planet);
    let orbit = OrbitParams::from_planet(rec, model, 0.0, c)?;
    let n = periods_per_century(&ctx.table, planet);
    let models = [PrecessionModel::Causal, PrecessionModel::GeneralRelativity];
    let per_model: Vec<(PrecessionModel, f64, Option<f64>)> = models
        .iter()
        .map(|&m| {
            let o = OrbitParams::from_planet(rec, m, 0.0, c)?;
            let advance = if n > 0 { Some(century_advance(rec, m, n, c)?) } else { None };
            Ok((m, o.gamma_defect, advance))
        })
        .collect::<Result<_>>()?;

    if ctx.json {
        let advances: serde_json::Map<String, Value> = per_model
            .iter()
            .map(|(m, defect, adv)| {
                (m.to_string(), json!({ "gamma_defect": defect, "century_advance_arcsec": adv }))
            })
            .collect();
        return to_json(&json!({
            "planet": planet.name(),
            "model": model.to_string(),
            "semi_latus_rectum_m": orbit.p,
            "eccentricity": orbit.e,
            "gamma": orbit.gamma,
            "gamma_defect": orbit.gamma_defect,
            "phi0_rad": orbit.phi0,
            "semi_major_m": orbit.a,
            "semi_minor_m": orbit.b,
            "period_s": orbit.period,
            "omega_rad_s": orbit.omega,
            "periods_per_century": n,
            "models": advances,
        }));
    }
    writeln!(out, "planet             {planet}")?;
    writeln!(out, "semi-major axis    {} m", num(orbit.a))?;
    writeln!(out, "semi-minor axis    {} m", num(orbit.b))?;
    writeln!(out, "semi-latus rectum  {} m", num(orbit.p))?;
    writeln!(out, "eccentricity       {}", num(orbit.e))?;
    writeln!(out, "period             {} s", num(orbit.period))?;
    writeln!(out, "gamma ({model})     {:.12}", orbit.gamma)?;
    for (m, defect, adv) in &per_model {
        match adv {
            Some(a) => writeln!(
                out,
                "{:<7} 1 - gamma = {}, century advance = {} arcsec over {n} periods",
                m.to_string(),
                num(*defect),
                num(*a)
            ),
            None => writeln!(out, "{:<7} 1 - gamma = {} (no full period within a century)", m.to_string(), num(*defect)),
        }?;
    }
    Ok(out)
}

fn integrator_config(tol: &Tolerances) -> IntegratorConfig {
    let mut cfg = IntegratorConfig::default();
    if let Some(v) = tol.rel_tol {
        cfg.rel_tol = v;
    }
    if let Some(v) = tol.abs_tol {
        cfg.abs_tol = v;
    }
    if let Some(v) = tol.max_step {
        cfg.max_step = v;
    }
    cfg
}

pub fn integrate(ctx: &Session, planet: Planet, periods: f64, tol: &Tolerances) -> Result<String> {
    let mut out = String::new();
    if !(periods > 0.0 && periods.is_finite()) {
        bail!("--periods must be positive and finite, got {periods}");
    }
    let c = ctx.table.c();
    let k = ctx.table.constants.sun_mass_parameter;
    let rec = ctx.table.get(planet);
    let state = perihelion_state(rec.semi_major, rec.eccentricity, k, c, 0.0)?;
    let q = conserved_quantities(&state, k, c)?;
    let orbit = orbit_from_invariants(&q, k, 0.0, c)?;
    let duration = periods * orbit.period;
    let cfg = integrator_config(tol);
    let run = integrate_central(&state, k, duration, c, &cfg)?;
    let report = conservation_report(&run.trajectory, k);

    let (csv_path, mut w) = create(&ctx.out, &format!("{planet}_trajectory.csv"))?;
    run.trajectory.write_csv(&mut w)?;
    w.flush()?;
    let summary = json!({
        "planet": planet.name(),
        "periods": periods,
        "duration_s": duration,
        "status": run.status,
        "integrator": cfg,
        "samples": run.trajectory.len(),
        "stats": run.stats,
        "conservation": report,
        "trajectory_csv": csv_path.display().to_string(),
    });
    let (json_path, mut w) = create(&ctx.out, &format!("{planet}_conservation.json"))?;
    serde_json::to_writer_pretty(&mut w, &summary)?;
    writeln!(w)?;
    w.flush()?;

    if ctx.json {
        return to_json(&summary);
    }
    writeln!(out, "integrated {planet} for {} periods ({} s), {:?}", num(periods), num(duration), run.status)?;
    writeln!(out, "accepted steps     {}", run.stats.accepted)?;
    writeln!(out, "energy drift       {}", num(report.max_rel_drift_e))?;
    writeln!(out, "momentum drift     {}", num(report.max_rel_drift_m))?;
    writeln!(out, "norm residual      {}", num(report.fourvel_norm_residual))?;
    writeln!(out, "trajectory         {}", csv_path.display())?;
    writeln!(out, "report             {}", json_path.display())?;
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BodySpec {
    strength_m3_s2: f64,
    mass_m3_s2: f64,
    x_m: [f64; 3],
    v_m_s: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairScenario {
    duration_s: f64,
    bodies: [BodySpec; 2],
    #[serde(default)]
    integrator: IntegratorConfig,
}

pub fn pair(ctx: &Session, scenario: &Path) -> Result<String> {
    let mut out = String::new();
    let text = fs::read_to_string(scenario).with_context(|| format!("cannot read {}", scenario.display()))?;
    let sc: PairScenario =
        serde_json::from_str(&text).with_context(|| format!("malformed scenario {}", scenario.display()))?;
    let c = ctx.table.c();
    let source = |b: &BodySpec| -> Result<SourceSpec> {
        let s = SpatialState::new(0.0, Vector3::from(b.x_m), Vector3::from(b.v_m_s));
        Ok(SourceSpec::new(b.strength_m3_s2, Trajectory::starting_at(s, c)?))
    };
    let [a, b] = &sc.bodies;
    let run = integrate_retarded_pair(
        &source(a)?,
        &source(b)?,
        [a.mass_m3_s2, b.mass_m3_s2],
        sc.duration_s,
        &sc.integrator,
    )?;
    let mut files = Vec::new();
    for (i, traj) in [&run.a, &run.b].into_iter().enumerate() {
        let (path, mut w) = create(&ctx.out, &format!("pair_body{i}.csv"))?;
        traj.write_csv(&mut w)?;
        w.flush()?;
        files.push(path.display().to_string());
    }
    let (ea, eb) = (run.a.last(), run.b.last());
    let summary = json!({
        "t0_s": run.t0,
        "t_end_s": ea.t,
        "status": run.status,
        "final_separation_m": (ea.x - eb.x).norm(),
        "integrator": sc.integrator,
        "stats": run.stats,
        "causality": run.audit,
        "causality_holds": run.audit.holds(),
        "trajectory_csv": files,
    });
    if ctx.json {
        return to_json(&summary);
    }
    writeln!(out, "pair run to t = {} s, {:?}", num(ea.t), run.status)?;
    writeln!(out, "final separation   {} m", num((ea.x - eb.x).norm()))?;
    writeln!(out, "accepted steps     {}", run.stats.accepted)?;
    writeln!(out, "causality holds    {}", run.audit.holds())?;
    for f in files {
        writeln!(out, "trajectory         {f}")?;
    }
    Ok(out)
}

fn scenario(ctx: &Session, obs: &Observation, phi1: f64, phi3: f64) -> Result<ObservationScenario> {
    let (l1, l2) = select_perihelion_pair(obs.centuries, &ctx.table)?;
    let to_rad = |x: f64| if ctx.deg { x.to_radians() } else { x };
    Ok(ObservationScenario {
        phi1_0_rad: to_rad(phi1),
        phi3_0_rad: to_rad(phi3),
        l1,
        l2,
        model: obs.model,
        light_time: obs.light_time,
    })
}

pub fn advance(ctx: &Session, obs: &Observation, phi1: f64, phi3: f64) -> Result<String> {
    let mut out = String::new();
    let s = scenario(ctx, obs, phi1, phi3)?;
    let result = advance_angle(&s, &ctx.table)?;
    if ctx.json {
        let mut v = serde_json::to_value(result)?;
        v["observed_advance_deg_per_century"] = json!(OBSERVED_ADVANCE_DEG);
        return to_json(&v);
    }
    writeln!(out, "perihelia          l1 = {}, l2 = {}", s.l1, s.l2)?;
    writeln!(out, "model              {}, light time {}", s.model, s.light_time)?;
    writeln!(out, "phi1_0, phi3_0     {} rad, {} rad", num(s.phi1_0_rad), num(s.phi3_0_rad))?;
    writeln!(out, "alpha_deg = {}", num(result.alpha_deg))?;
    writeln!(out, "alpha_rad = {}", num(result.alpha_rad))?;
    writeln!(out, "observed advance (literature) {OBSERVED_ADVANCE_DEG} deg per century")?;
    Ok(out)
}

pub fn sweep(ctx: &Session, obs: &Observation, n1: usize, n3: usize) -> Result<String> {
    let mut out = String::new();
    let grid = |n: usize| (0..n).map(|i| TAU * i as f64 / n as f64).collect::<Vec<_>>();
    let base = scenario(ctx, obs, 0.0, 0.0)?;
    let sweep = advance_sweep(&grid(n1), &grid(n3), &base, &ctx.table)?;
    let (path, mut w) = create(&ctx.out, "alpha_sweep.csv")?;
    sweep.write_csv(&mut w)?;
    w.flush()?;
    let all = sweep.alpha_rad.iter().flatten().map(|a| a.to_degrees());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| (lo.min(a), hi.max(a)));
    if ctx.json {
        return to_json(&json!({
            "scenario": base,
            "cells": n1 * n3,
            "alpha_min_deg": lo,
            "alpha_max_deg": hi,
            "csv": path.display().to_string(),
        }));
    }
    writeln!(out, "{} cells, alpha from {} to {} deg", n1 * n3, num(lo), num(hi))?;
    writeln!(out, "grid               {}", path.display())?;
    Ok(out)
}

pub fn constants(ctx: &Session) -> Result<String> {
    let mut out = String::new();
    let t = &ctx.table;
    let rows: Vec<Value> = t
        .records
        .values()
        .map(|r| {
            json!({
                "planet": r.planet.name(),
                "eccentricity": r.eccentricity,
                "semi_major_m": r.semi_major,
                "omega_rad_s": r.mean_frequency,
                "omega2a3_over_c2_m": r.omega2a3_over_c2,
                "inclination_deg": r.inclination_deg,
                "period_s": r.period(),
            })
        })
        .collect();
    if ctx.json {
        return to_json(&json!({
            "c_m_s": t.constants.c,
            "g_m3_kg_s2": t.constants.g,
            "sun_mass_parameter_m3_s2": t.constants.sun_mass_parameter,
            "planets": rows,
        }));
    }
    writeln!(out, "c = {} m/s, G = {} m^3/(kg s^2), m10G = {} m^3/s^2", num(t.constants.c), num(t.constants.g), num(t.constants.sun_mass_parameter))?;
    writeln!(out, "{:<8} {:>9} {:>12} {:>12} {:>12} {:>8}", "planet", "e", "a_m", "omega_rad_s", "w2a3/c2_m", "theta")?;
    for r in t.records.values() {
        writeln!(
            out,
            "{:<8} {:>9} {:>12} {:>12} {:>12} {:>8}",
            r.planet.name(),
            num(r.eccentricity),
            num(r.semi_major),
            num(r.mean_frequency),
            num(r.omega2a3_over_c2),
            num(r.inclination_deg)
        )?;
    }
    Ok(out)
}
