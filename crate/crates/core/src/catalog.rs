//! Built-in example functions with their default horizon and Hamiltonian.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFn};
use crate::hamiltonian::{Hamiltonian, HamiltonianDescriptor};
use crate::hopflax;
use crate::piecewise::{Clause, ClauseExpr, PiecewiseSpec, Region};

/// What the example is used for: a datum pushed forward to build a reachable
/// target, or a target handed directly to the projection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    InitialDatum,
    Target,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub spec: PiecewiseSpec,
    pub horizon: f64,
    pub hamiltonian: HamiltonianDescriptor,
    pub role: Role,
    pub default_box: Vec<(f64, f64)>,
    pub default_res: Vec<usize>,
}

impl CatalogEntry {
    pub fn default_grid(&self) -> Result<Grid> {
        Grid::from_box(&self.default_box, &self.default_res)
    }

    /// The target at the entry's horizon, sampled on `roi` grown far enough
    /// that the backward-forward projection is defined on all of `roi`.
    /// Initial data are pushed forward first.
    pub fn target_covering(&self, roi: &Grid) -> Result<GridFn> {
        let h = self.hamiltonian.build()?;
        let lip = self.spec.analytic_lipschitz();
        let t = self.horizon;
        let cells = hopflax::round_trip_cells(&h, roi, lip, t)?;
        let g = roi.grow(&as_i64(&cells))?;
        match self.role {
            Role::Target => self.spec.sample(&g),
            Role::InitialDatum => {
                let u0 = self.spec.sample(&initial_grid_for(&h, &g, lip, t)?)?;
                hopflax::forward(&h, &u0, t)?.restrict(&g)
            }
        }
    }

    /// [`target_covering`](Self::target_covering) on the default box.
    pub fn target(&self) -> Result<GridFn> {
        self.target_covering(&self.default_grid()?)
    }
}

/// A grid for initial data whose forward image covers `out`.
pub fn initial_grid_for(h: &Hamiltonian, out: &Grid, lip: f64, t: f64) -> Result<Grid> {
    let mut cells = hopflax::shrink_cells(h, out, lip, t)?;
    // the window is computed with the Lipschitz estimate of the sampled data,
    // which gains a little at the grown box; one extra cell absorbs it
    for c in &mut cells {
        *c += 1;
    }
    out.grow(&as_i64(&cells))
}

fn as_i64(cells: &[usize]) -> Vec<i64> {
    cells.iter().map(|&c| c as i64).collect()
}

pub const NAMES: [&str; 6] = ["u1", "u2", "u3", "u4", "u5", "u6"];

fn interval(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Region {
    Region::Interval { lo, hi, lo_open, hi_open }
}

fn cone(center: &[f64], scale: f64, offset: f64) -> ClauseExpr {
    ClauseExpr::Cone { center: center.to_vec(), scale, offset }
}

fn open_ball(center: &[f64], radius: f64) -> Region {
    Region::Ball { center: center.to_vec(), radius, open: true }
}

/// Two tents (or wells) of half-width `w` and height `peak` centred at ±1,
/// with the left piece on `(-1-w, 0]` and the right on `(0, 1+w)`.
fn twin_1d(w: f64, slope: f64, peak: f64) -> PiecewiseSpec {
    PiecewiseSpec {
        dimension: 1,
        clauses: vec![
            Clause { region: interval(-1.0 - w, 0.0, true, false), expr: cone(&[-1.0], slope, peak) },
            Clause { region: interval(0.0, 1.0 + w, true, true), expr: cone(&[1.0], slope, peak) },
        ],
        default: 0.0,
    }
}

fn unit_1d() -> HamiltonianDescriptor {
    HamiltonianDescriptor::Quadratic { a: vec![vec![1.0]] }
}

fn skew_2d() -> HamiltonianDescriptor {
    HamiltonianDescriptor::Quadratic { a: vec![vec![2.0, 1.0], vec![1.0, 1.0]] }
}

fn line_box() -> (Vec<(f64, f64)>, Vec<usize>) {
    (vec![(-4.0, 4.0)], vec![1001])
}

fn plane_box() -> (Vec<(f64, f64)>, Vec<usize>) {
    (vec![(-4.0, 4.0), (-4.0, 4.0)], vec![161, 161])
}

fn bump_and_well(sign: f64) -> PiecewiseSpec {
    PiecewiseSpec {
        dimension: 2,
        clauses: vec![
            Clause { region: open_ball(&[-1.0, 0.0], 1.0), expr: cone(&[-1.0, 0.0], -sign, sign) },
            Clause {
                region: open_ball(&[1.0, 0.0], 1.0),
                expr: cone(&[1.0, 0.0], -0.5 * sign, 0.5 * sign),
            },
        ],
        default: 0.0,
    }
}

pub fn entry(name: &str) -> Result<CatalogEntry> {
    let (b1, r1) = line_box();
    let (b2, r2) = plane_box();
    let e = match name {
        "u1" => CatalogEntry {
            name: "u1",
            spec: twin_1d(1.0, -1.0, 1.0),
            horizon: 0.5,
            hamiltonian: unit_1d(),
            role: Role::InitialDatum,
            default_box: b1,
            default_res: r1,
        },
        "u2" => CatalogEntry {
            name: "u2",
            spec: PiecewiseSpec {
                dimension: 2,
                clauses: vec![
                    Clause { region: open_ball(&[-2.0, 0.0], 1.0), expr: cone(&[-2.0, 0.0], 1.0, -1.0) },
                    Clause { region: open_ball(&[2.0, 0.0], 1.0), expr: cone(&[2.0, 0.0], -1.0, 1.0) },
                ],
                default: 0.0,
            },
            horizon: 0.5,
            hamiltonian: HamiltonianDescriptor::Quadratic { a: vec![vec![1.0, 0.0], vec![0.0, 1.0]] },
            role: Role::InitialDatum,
            default_box: b2,
            default_res: r2,
        },
        "u3" => CatalogEntry {
            name: "u3",
            spec: twin_1d(1.0, 1.0, -1.0),
            horizon: 1.0,
            hamiltonian: unit_1d(),
            role: Role::Target,
            default_box: b1,
            default_res: r1,
        },
        "u4" => CatalogEntry {
            name: "u4",
            spec: twin_1d(0.5, -2.0, 1.0),
            horizon: 0.5,
            hamiltonian: unit_1d(),
            role: Role::Target,
            default_box: b1,
            default_res: r1,
        },
        "u5" => CatalogEntry {
            name: "u5",
            spec: bump_and_well(1.0),
            horizon: 1.0,
            hamiltonian: skew_2d(),
            role: Role::Target,
            default_box: b2,
            default_res: r2,
        },
        "u6" => CatalogEntry {
            name: "u6",
            spec: bump_and_well(-1.0),
            horizon: 0.5,
            hamiltonian: skew_2d(),
            role: Role::Target,
            default_box: b2,
            default_res: r2,
        },
        other => {
            return Err(Error::InvalidSpec(format!(
                "unknown catalog entry {other:?}; expected one of {NAMES:?}"
            )))
        }
    };
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(name: &str) -> GridFn {
        let e = entry(name).unwrap();
        e.spec.sample(&e.default_grid().unwrap()).unwrap()
    }

    #[test]
    fn targets_cover_the_default_box() {
        for n in ["u1", "u3"] {
            let e = entry(n).unwrap();
            let ut = e.target().unwrap();
            let h = e.hamiltonian.build().unwrap();
            let p = hopflax::compose_project(&h, &ut, e.horizon).unwrap();
            assert!(p.grid().contains_grid(&e.default_grid().unwrap()), "{n}");
        }
    }

    #[test]
    fn all_entries_validate() {
        for n in NAMES {
            let e = entry(n).unwrap();
            e.spec.validate().unwrap();
            e.hamiltonian.build().unwrap();
        }
        assert!(entry("u7").is_err());
    }

    #[test]
    fn one_dimensional_values() {
        let u1 = sampled("u1");
        let u3 = sampled("u3");
        let u4 = sampled("u4");
        let at = |f: &GridFn, x: f64| f.nearest(&[x]).unwrap();
        assert_eq!(at(&u1, -1.0), 1.0);
        assert_eq!(at(&u1, 0.0), 0.0);
        assert_eq!(at(&u3, -1.0), -1.0);
        assert_eq!(at(&u3, 1.0), -1.0);
        assert_eq!(at(&u4, -1.0), 1.0);
        assert_eq!(at(&u4, 0.0), -1.0);
        assert!((at(&u4, 1.248) - 0.504).abs() < 1e-9);
        assert!((u3.lipschitz_estimate() - 1.0).abs() < 1e-9);
        assert!((u4.lipschitz_estimate() - 2.0).abs() < 1e-9);
        // [-4,-2] and [2,4] hold 251 nodes each, plus the node at 0
        assert_eq!(u3.values().iter().filter(|v| **v == 0.0).count(), 503);
    }

    #[test]
    fn two_dimensional_values() {
        let u5 = sampled("u5");
        let u6 = sampled("u6");
        assert_eq!(u5.nearest(&[-1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(u5.nearest(&[1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(u6.nearest(&[-1.0, 0.0]).unwrap(), -1.0);
        let u2 = sampled("u2");
        assert_eq!(u2.nearest(&[-2.0, 0.0]).unwrap(), -1.0);
        assert_eq!(u2.nearest(&[2.0, 0.0]).unwrap(), 1.0);
    }
}
