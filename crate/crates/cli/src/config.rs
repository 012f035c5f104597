//! Turns command-line flags into a validated run configuration.

use crate::CliError;
use clap::Args;
use hj_inverse::catalog::{self, CatalogEntry, Role};
use hj_inverse::grid::{parse_box, parse_res};
use hj_inverse::{hopflax, Grid, GridFn, Hamiltonian, HamiltonianDescriptor, PiecewiseSpec};
use serde::Serialize;
use std::fs;
use std::io::BufReader;
use std::path::PathBuf;

pub const MIN_RES: usize = 11;
pub const MAX_RES: usize = 4001;

/// Flags shared by every pipeline command.
#[derive(Args, Clone, Debug, Default)]
pub struct InputArgs {
    /// Built-in example u1..u6
    #[arg(long)]
    pub catalog: Option<String>,
    /// Piecewise function description (JSON)
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Sampled function (CSV with a `# box=... res=...` header)
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Horizon
    #[arg(long = "T")]
    pub t: Option<f64>,
    /// Hamiltonian: `quadratic:1`, `quadratic:[[2,1],[1,1]]`, `scalar1d:EXPR:P` or JSON
    #[arg(long = "H")]
    pub h: Option<String>,
    /// Region of interest `lo:hi[,lo:hi]`
    #[arg(long = "box", allow_hyphen_values = true)]
    pub bbox: Option<String>,
    /// Nodes per axis `N[,N]`
    #[arg(long)]
    pub res: Option<String>,
    /// Tolerance overrides `reach=V,diff=V`
    #[arg(long)]
    pub tol: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub enum Source {
    Catalog(CatalogEntry),
    Spec(PiecewiseSpec),
    Grid(GridFn),
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Overrides {
    pub reach: Option<f64>,
    pub diff: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub descriptor: HamiltonianDescriptor,
    pub hamiltonian: Hamiltonian,
    pub source: Source,
    pub horizon: f64,
    /// Grid the results are reported on.
    pub roi: Grid,
    pub tol: Overrides,
    pub out: Option<PathBuf>,
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_overrides(s: &str) -> Result<Overrides, CliError> {
    let mut o = Overrides::default();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| config(format!("bad tolerance override {part:?}, expected key=value")))?;
        let v: f64 = v.trim().parse().map_err(|_| config(format!("bad tolerance value {v:?}")))?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(config(format!("tolerance {k} must be positive, got {v}")));
        }
        match k.trim() {
            "reach" => o.reach = Some(v),
            "diff" => o.diff = Some(v),
            other => return Err(config(format!("unknown tolerance {other:?}; expected reach or diff"))),
        }
    }
    Ok(o)
}

impl RunConfig {
    pub fn from_args(a: &InputArgs) -> Result<Self, CliError> {
        let given = [a.catalog.is_some(), a.spec.is_some(), a.grid.is_some()].iter().filter(|b| **b).count();
        if given != 1 {
            return Err(config("exactly one of --catalog, --spec, --grid is required"));
        }
        let source = if let Some(name) = &a.catalog {
            Source::Catalog(catalog::entry(name).map_err(|e| config(e.to_string()))?)
        } else if let Some(p) = &a.spec {
            let text = fs::read_to_string(p).map_err(|e| config(format!("cannot read {}: {e}", p.display())))?;
            Source::Spec(PiecewiseSpec::from_json(&text).map_err(|e| config(format!("{}: {e}", p.display())))?)
        } else {
            let p = a.grid.as_ref().unwrap();
            let f = fs::File::open(p).map_err(|e| config(format!("cannot read {}: {e}", p.display())))?;
            Source::Grid(GridFn::from_csv(BufReader::new(f)).map_err(|e| config(format!("{}: {e}", p.display())))?)
        };
        let dim = match &source {
            Source::Catalog(e) => e.spec.dimension,
            Source::Spec(s) => s.dimension,
            Source::Grid(g) => g.dim(),
        };

        let descriptor = match (&a.h, &source) {
            (Some(s), _) => HamiltonianDescriptor::parse(s).map_err(|e| config(e.to_string()))?,
            (None, Source::Catalog(e)) => e.hamiltonian.clone(),
            (None, _) => HamiltonianDescriptor::Quadratic {
                a: (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
            },
        };
        let hamiltonian = descriptor.build().map_err(|e| config(e.to_string()))?;
        if hamiltonian.dim() != dim {
            return Err(config(format!("hamiltonian is {}D but the input is {dim}D", hamiltonian.dim())));
        }

        let horizon = match (a.t, &source) {
            (Some(t), _) => t,
            (None, Source::Catalog(e)) => e.horizon,
            (None, _) => return Err(config("--T is required unless --catalog supplies a default")),
        };
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(config(format!("T must be positive, got {horizon}")));
        }

        let bounds = match (&a.bbox, &source) {
            (Some(b), _) => parse_box(b).map_err(|e| config(e.to_string()))?,
            (None, Source::Catalog(e)) => e.default_box.clone(),
            (None, Source::Grid(g)) => g.grid().bounds(),
            (None, Source::Spec(_)) => vec![(-4.0, 4.0); dim],
        };
        if bounds.len() != dim {
            return Err(config(format!("--box has {} intervals for a {dim}D input", bounds.len())));
        }
        let mut res = match (&a.res, &source) {
            (Some(r), _) => parse_res(r).map_err(|e| config(e.to_string()))?,
            (None, Source::Catalog(e)) => e.default_res.clone(),
            (None, Source::Grid(g)) => g.grid().shape()[..dim].to_vec(),
            (None, Source::Spec(_)) => vec![if dim == 1 { 1001 } else { 161 }; dim],
        };
        if res.len() == 1 && dim == 2 {
            res.push(res[0]);
        }
        if res.len() != dim {
            return Err(config(format!("--res has {} entries for a {dim}D input", res.len())));
        }
        if let Some(r) = res.iter().find(|r| !(MIN_RES..=MAX_RES).contains(*r)) {
            return Err(config(format!("resolution {r} outside [{MIN_RES}, {MAX_RES}]")));
        }
        let roi = match &source {
            // a sampled input fixes the lattice; the box selects a part of it
            Source::Grid(g) if a.bbox.is_some() => g.grid().sub_box(&bounds).map_err(|e| config(e.to_string()))?,
            Source::Grid(g) => g.grid().clone(),
            _ => Grid::from_box(&bounds, &res).map_err(|e| config(e.to_string()))?,
        };
        let tol = match &a.tol {
            Some(s) => parse_overrides(s)?,
            None => Overrides::default(),
        };
        Ok(RunConfig { descriptor, hamiltonian, source, horizon, roi, tol, out: a.out.clone() })
    }

    pub fn source_label(&self) -> String {
        match &self.source {
            Source::Catalog(e) => format!("catalog:{}", e.name),
            Source::Spec(_) => "spec".into(),
            Source::Grid(_) => "grid".into(),
        }
    }

    fn analytic(&self) -> Option<&PiecewiseSpec> {
        match &self.source {
            Source::Catalog(e) => Some(&e.spec),
            Source::Spec(s) => Some(s),
            Source::Grid(_) => None,
        }
    }

    /// The raw input, sampled on a box large enough that one pass of `h`
    /// covers the region of interest.
    pub fn input_for_pass(&self, h: &Hamiltonian) -> hj_inverse::Result<GridFn> {
        match self.analytic() {
            Some(s) => s.sample(&catalog::initial_grid_for(h, &self.roi, s.analytic_lipschitz(), self.horizon)?),
            None => self.grid_input(),
        }
    }

    /// The target at the horizon. Catalog initial data are pushed forward
    /// first; analytic inputs are sampled wide enough for the round trip.
    pub fn target(&self) -> hj_inverse::Result<GridFn> {
        let h = &self.hamiltonian;
        let t = self.horizon;
        let Some(spec) = self.analytic() else { return self.grid_input() };
        let lip = spec.analytic_lipschitz();
        let cells = hopflax::round_trip_cells(h, &self.roi, lip, t)?;
        let wide = self.roi.grow(&cells.iter().map(|&c| c as i64).collect::<Vec<_>>())?;
        match &self.source {
            Source::Catalog(e) if e.role == Role::InitialDatum => {
                let u0 = spec.sample(&catalog::initial_grid_for(h, &wide, lip, t)?)?;
                hopflax::forward(h, &u0, t)?.restrict(&wide)
            }
            _ => spec.sample(&wide),
        }
    }

    fn grid_input(&self) -> hj_inverse::Result<GridFn> {
        match &self.source {
            Source::Grid(g) => Ok(g.clone()),
            _ => unreachable!("analytic sources are sampled"),
        }
    }

    /// Restricts `f` to the region of interest, or to the part of it `f`
    /// covers when the input was a fixed grid.
    pub fn report_on_roi(&self, f: &GridFn) -> hj_inverse::Result<GridFn> {
        match &self.source {
            Source::Grid(_) => f.restrict(&f.grid().intersect(&self.roi)?),
            _ => f.restrict(&self.roi),
        }
    }

    /// Samples a candidate initial datum given as a spec or CSV file on `grid`.
    pub fn load_candidate(path: &PathBuf, grid: &Grid) -> Result<GridFn, CliError> {
        let text = fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            let spec = PiecewiseSpec::from_json(&text).map_err(|e| config(format!("{}: {e}", path.display())))?;
            spec.sample(grid).map_err(|e| config(format!("{}: {e}", path.display())))
        } else {
            let f = GridFn::from_csv(text.as_bytes()).map_err(|e| config(format!("{}: {e}", path.display())))?;
            f.rebase_onto(grid).map_err(|e| config(format!("{}: {e}", path.display())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(catalog: &str) -> InputArgs {
        InputArgs { catalog: Some(catalog.into()), ..Default::default() }
    }

    #[test]
    fn catalog_defaults_fill_in() {
        let c = RunConfig::from_args(&args("u3")).unwrap();
        assert_eq!(c.horizon, 1.0);
        assert_eq!(c.roi.shape()[0], 1001);
        assert_eq!(c.source_label(), "catalog:u3");
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut a = args("u1");
        a.res = Some("5".into());
        assert!(matches!(RunConfig::from_args(&a), Err(CliError::Config(_))));
        let mut a = args("u1");
        a.t = Some(-1.0);
        assert!(RunConfig::from_args(&a).is_err());
        let mut a = args("u1");
        a.spec = Some("x.json".into());
        assert!(RunConfig::from_args(&a).is_err());
        let mut a = args("u5");
        a.h = Some("quadratic:1".into());
        assert!(RunConfig::from_args(&a).is_err());
        let mut a = args("u1");
        a.tol = Some("reach=0,diff=1".into());
        assert!(RunConfig::from_args(&a).is_err());
    }

    #[test]
    fn overrides_parse() {
        let o = parse_overrides("reach=0.1, diff=0.02").unwrap();
        assert_eq!(o.reach, Some(0.1));
        assert_eq!(o.diff, Some(0.02));
        assert!(parse_overrides("speed=1").is_err());
    }

    #[test]
    fn single_resolution_broadcasts_in_the_plane() {
        let mut a = args("u2");
        a.res = Some("41".into());
        assert_eq!(RunConfig::from_args(&a).unwrap().roi.shape(), [41, 41]);
    }
}
