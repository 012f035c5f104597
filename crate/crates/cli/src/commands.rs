//! The pipeline commands. Each writes its files plus `MANIFEST.json`.

use crate::config::RunConfig;
use crate::manifest::{GridSummary, Manifest, OutputDir};
use crate::CliError;
use clap::ValueEnum;
use hj_inverse::envelope::{obstacle_residual, semiconcave_envelope};
use hj_inverse::inverse_set::{xset_exposed, Inversion, XSetMask};
use hj_inverse::reachability::{default_tol_reach, full_report_with, ReachabilityReport};
use hj_inverse::viscosity::{parabolic_backward, parabolic_forward};
use hj_inverse::{hopflax, GridFn};
use serde_json::{json, Map, Value};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum XSetChoice {
    Gradient,
    Exposed,
}

pub const DEFAULT_OUT: &str = "hjinv-out";

pub fn manifest_for(command: &str, cfg: &RunConfig) -> Manifest {
    let mut tolerances = Map::new();
    if let Some(r) = cfg.tol.reach {
        tolerances.insert("reach_override".into(), r.into());
    }
    if let Some(d) = cfg.tol.diff {
        tolerances.insert("diff_override".into(), d.into());
    }
    Manifest {
        command: command.into(),
        source: cfg.source_label(),
        hamiltonian: serde_json::to_value(&cfg.descriptor).unwrap_or(Value::Null),
        horizon: cfg.horizon,
        region_of_interest: Some(GridSummary::from(&cfg.roi)),
        computational_grid: None,
        margin_cells: vec![],
        tolerances,
        timings_ms: Map::new(),
        results: Map::new(),
        checks: vec![],
        files: vec![],
    }
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn solver(e: hj_inverse::Error) -> CliError {
    CliError::Solver(e)
}

/// Reachability report with the tolerance override applied.
pub fn report(cfg: &RunConfig, target: &GridFn) -> Result<ReachabilityReport, CliError> {
    let tol = cfg.tol.reach.unwrap_or_else(|| default_tol_reach(target, cfg.horizon));
    full_report_with(&cfg.hamiltonian, target, cfg.horizon, tol).map_err(solver)
}

pub fn transform(cfg: &RunConfig, dir: Direction, eps: Option<f64>) -> Result<(), CliError> {
    let h = &cfg.hamiltonian;
    let t = cfg.horizon;
    let pass_h = match dir {
        Direction::Forward => h.clone(),
        Direction::Backward => h.reflected(),
    };
    let input = cfg.input_for_pass(&pass_h).map_err(solver)?;
    let mut out = OutputDir::create(&out_dir(cfg), manifest_for("transform", cfg))?;
    out.manifest.computational_grid = Some(GridSummary::from(input.grid()));
    out.manifest.margin_cells = hopflax::shrink_cells(&pass_h, input.grid(), input.lipschitz_estimate(), t).map_err(solver)?;
    out.lap("setup");
    let full = match dir {
        Direction::Forward => hopflax::forward(h, &input, t),
        Direction::Backward => hopflax::backward(h, &input, t),
    }
    .map_err(solver)?;
    let result = cfg.report_on_roi(&full).map_err(solver)?;
    out.lap("hopf_lax");
    out.write("output.csv", &result.to_csv())?;
    out.manifest.results.insert("direction".into(), json!(format!("{dir:?}").to_lowercase()));
    out.manifest.results.insert("min".into(), result.min().into());
    out.manifest.results.insert("max".into(), result.max().into());
    if let Some(eps) = eps {
        let visc = match dir {
            Direction::Forward => parabolic_forward(h, &input, t, eps),
            Direction::Backward => parabolic_backward(h, &input, t, eps),
        }
        .map_err(solver)?;
        let visc = visc.restrict(result.grid()).map_err(solver)?;
        out.lap("viscosity");
        out.manifest.results.insert("epsilon".into(), eps.into());
        out.manifest.results.insert("oracle_sup_diff".into(), visc.sup_norm_diff(&result).map_err(solver)?.into());
        out.write("oracle.csv", &visc.to_csv())?;
    }
    finish(out)
}

pub fn reach(cfg: &RunConfig) -> Result<(), CliError> {
    let target = cfg.target().map_err(solver)?;
    let r = report(cfg, &target)?;
    println!("{}", serde_json::to_string_pretty(&r).map_err(|e| CliError::Io(e.to_string()))?);
    if cfg.out.is_some() {
        let mut out = OutputDir::create(&out_dir(cfg), manifest_for("reach", cfg))?;
        out.manifest.computational_grid = Some(GridSummary::from(target.grid()));
        out.manifest.tolerances.insert("tol_reach".into(), r.tol_reach.into());
        out.manifest.results.insert("verdict".into(), json!(r.verdict));
        out.write_json("report.json", &r)?;
        out.finish("MANIFEST.json")?;
    }
    Ok(())
}

pub fn envelope(cfg: &RunConfig) -> Result<(), CliError> {
    let h = &cfg.hamiltonian;
    let t = cfg.horizon;
    let target = cfg.target().map_err(solver)?;
    let mut out = OutputDir::create(&out_dir(cfg), manifest_for("envelope", cfg))?;
    out.manifest.computational_grid = Some(GridSummary::from(target.grid()));
    out.manifest.margin_cells = hopflax::round_trip_cells(h, target.grid(), target.lipschitz_estimate(), t).map_err(solver)?;
    let projection = hopflax::compose_project(h, &target, t).map_err(solver)?;
    out.lap("projection");
    // the hull construction needs a quadratic Hamiltonian; the projection stands in otherwise
    let env = if h.as_quadratic().is_some() {
        let e = semiconcave_envelope(h, &target, t).map_err(solver)?;
        let r = obstacle_residual(&e, &target, h, t).map_err(solver)?;
        out.manifest.results.insert("obstacle_residual".into(), serde_json::to_value(r).unwrap_or(Value::Null));
        out.manifest.results.insert("projection_vs_envelope".into(), projection.sup_norm_diff_common(&e).map_err(solver)?.into());
        out.lap("envelope");
        e
    } else {
        projection.clone()
    };
    let env = cfg.report_on_roi(&env).map_err(solver)?;
    let projection = cfg.report_on_roi(&projection).map_err(solver)?;
    let below = env.zip_with(&target.restrict(env.grid()).map_err(solver)?, |e, u| e - u).map_err(solver)?.min();
    out.manifest.results.insert("min_envelope_minus_target".into(), below.into());
    out.write("envelope.csv", &env.to_csv())?;
    out.write("projection.csv", &projection.to_csv())?;
    finish(out)
}

pub fn inversion(cfg: &RunConfig, target: &GridFn) -> Result<Inversion, CliError> {
    let tol = cfg.tol.reach.unwrap_or_else(|| default_tol_reach(target, cfg.horizon));
    Inversion::with_tol(&cfg.hamiltonian, target, cfg.horizon, tol).map_err(solver)
}

fn write_mask(out: &mut OutputDir, prefix: &str, mask: &XSetMask) -> Result<(), CliError> {
    out.write(&format!("{prefix}mask.csv"), &mask.to_csv().map_err(solver)?)?;
    out.write(&format!("{prefix}mask.json"), &(mask.sidecar_json().map_err(solver)? + "\n"))?;
    out.manifest.results.insert(format!("{prefix}mask_nodes"), mask.count().into());
    if mask.grid.dim() == 1 {
        let holes = mask.complement_intervals().map_err(solver)?;
        out.manifest.results.insert(format!("{prefix}complement_intervals"), json!(holes));
    }
    Ok(())
}

pub fn xset(cfg: &RunConfig, method: XSetChoice) -> Result<(), CliError> {
    let target = cfg.target().map_err(solver)?;
    let inv = inversion(cfg, &target)?;
    let mut out = OutputDir::create(&out_dir(cfg), manifest_for("xset", cfg))?;
    out.manifest.computational_grid = Some(GridSummary::from(target.grid()));
    out.manifest.tolerances.insert("tol_reach".into(), inv.tol_reach.into());
    out.manifest.results.insert("fixedpoint_residual".into(), inv.residual.into());
    let mask = match method {
        XSetChoice::Gradient => inv.xset_gradient(cfg.tol.diff).map_err(solver)?,
        XSetChoice::Exposed => xset_exposed(&cfg.hamiltonian, &inv.minimal, &target, cfg.horizon).map_err(solver)?,
    };
    out.lap("xset");
    write_mask(&mut out, "", &mask)?;
    out.write("minimal.csv", &inv.minimal.to_csv())?;
    finish(out)
}

pub fn member(cfg: &RunConfig, candidate: &PathBuf) -> Result<(), CliError> {
    let target = cfg.target().map_err(solver)?;
    let inv = inversion(cfg, &target)?;
    let u0 = RunConfig::load_candidate(candidate, inv.minimal.grid())?;
    let rep = inv.membership(&u0, true).map_err(solver)?;
    println!("{}", serde_json::to_string_pretty(&rep).map_err(|e| CliError::Io(e.to_string()))?);
    if cfg.out.is_some() {
        let mut out = OutputDir::create(&out_dir(cfg), manifest_for("member", cfg))?;
        out.manifest.results.insert("member".into(), rep.member.into());
        out.write_json("membership.json", &rep)?;
        out.finish("MANIFEST.json")?;
    }
    Ok(())
}

fn finish(out: OutputDir) -> Result<(), CliError> {
    let m = out.finish("MANIFEST.json")?;
    for f in &m.files {
        println!("{}  {}", f.sha256, f.path);
    }
    Ok(())
}
