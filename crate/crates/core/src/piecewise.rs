//! Declarative piecewise functions: ordered clauses `(region, expression)`,
//! first match wins, with a constant default elsewhere.

use crate::error::{Error, Result};
use crate::grid::{Extension, Grid, GridFn};
use serde::{Deserialize, Serialize};

pub const TOL_CONT: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    /// One-dimensional interval; endpoints closed unless flagged open.
    Interval {
        lo: f64,
        hi: f64,
        #[serde(default)]
        lo_open: bool,
        #[serde(default)]
        hi_open: bool,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        open: bool,
    },
}

impl Region {
    fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Interval { lo, hi, lo_open, hi_open } => {
                let t = x[0];
                let above = if *lo_open { t > *lo } else { t >= *lo };
                let below = if *hi_open { t < *hi } else { t <= *hi };
                above && below
            }
            Region::Ball { center, radius, open } => {
                let r = dist(x, center);
                if *open {
                    r < *radius
                } else {
                    r <= *radius
                }
            }
        }
    }

    fn contains_closed(&self, x: &[f64]) -> bool {
        match self {
            Region::Interval { lo, hi, .. } => x[0] >= *lo && x[0] <= *hi,
            Region::Ball { center, radius, .. } => dist(x, center) <= *radius,
        }
    }

    fn bounding_box(&self, dim: usize) -> Vec<(f64, f64)> {
        match self {
            Region::Interval { lo, hi, .. } => vec![(*lo, *hi)],
            Region::Ball { center, radius, .. } => {
                (0..dim).map(|k| (center[k] - radius, center[k] + radius)).collect()
            }
        }
    }

    fn boundary_probes(&self, dim: usize) -> Vec<Vec<f64>> {
        match self {
            Region::Interval { lo, hi, .. } => vec![vec![*lo], vec![*hi]],
            Region::Ball { center, radius, .. } => {
                if dim == 1 {
                    vec![vec![center[0] - radius], vec![center[0] + radius]]
                } else {
                    (0..64)
                        .map(|k| {
                            let a = std::f64::consts::TAU * k as f64 / 64.0;
                            vec![center[0] + radius * a.cos(), center[1] + radius * a.sin()]
                        })
                        .collect()
                }
            }
        }
    }

    fn dim_ok(&self, dim: usize) -> bool {
        match self {
            Region::Interval { lo, hi, .. } => dim == 1 && lo < hi,
            Region::Ball { center, radius, .. } => center.len() == dim && *radius > 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClauseExpr {
    /// `slope · x + intercept`.
    Affine { slope: Vec<f64>, intercept: f64 },
    /// `offset + scale · |x - center|`; a negative scale gives an upside-down cone.
    Cone { center: Vec<f64>, scale: f64, offset: f64 },
}

impl ClauseExpr {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ClauseExpr::Affine { slope, intercept } => {
                intercept + slope.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            }
            ClauseExpr::Cone { center, scale, offset } => offset + scale * dist(x, center),
        }
    }

    fn lipschitz(&self) -> f64 {
        match self {
            ClauseExpr::Affine { slope, .. } => slope.iter().map(|s| s * s).sum::<f64>().sqrt(),
            ClauseExpr::Cone { scale, .. } => scale.abs(),
        }
    }

    fn dim_ok(&self, dim: usize) -> bool {
        match self {
            ClauseExpr::Affine { slope, .. } => slope.len() == dim,
            ClauseExpr::Cone { center, .. } => center.len() == dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub region: Region,
    pub expr: ClauseExpr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSpec {
    pub dimension: usize,
    pub clauses: Vec<Clause>,
    #[serde(default)]
    pub default: f64,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

impl PiecewiseSpec {
    pub fn from_json(src: &str) -> Result<Self> {
        let s: PiecewiseSpec = serde_json::from_str(src)?;
        s.validate()?;
        Ok(s)
    }

    pub fn constant(dimension: usize, value: f64) -> Self {
        PiecewiseSpec { dimension, clauses: Vec::new(), default: value }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.clauses
            .iter()
            .find(|c| c.region.contains(x))
            .map(|c| c.expr.eval(x))
            .unwrap_or(self.default)
    }

    /// Largest clause slope; the function is Lipschitz with this constant when continuous.
    pub fn analytic_lipschitz(&self) -> f64 {
        self.clauses.iter().map(|c| c.expr.lipschitz()).fold(0.0, f64::max)
    }

    /// Checks dimensions and continuity across clause boundaries.
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.dimension > 2 {
            return Err(Error::InvalidSpec(format!(
                "dimension must be 1 or 2, got {}",
                self.dimension
            )));
        }
        for (k, c) in self.clauses.iter().enumerate() {
            if !c.region.dim_ok(self.dimension) || !c.expr.dim_ok(self.dimension) {
                return Err(Error::InvalidSpec(format!(
                    "clause {k} does not match dimension {}",
                    self.dimension
                )));
            }
        }
        for (k, c) in self.clauses.iter().enumerate() {
            for p in c.region.boundary_probes(self.dimension) {
                // an earlier clause owns this point outright
                if self.clauses[..k].iter().any(|e| e.region.contains(&p)) {
                    continue;
                }
                let inside = c.expr.eval(&p);
                let outside = self.clauses[k + 1..]
                    .iter()
                    .find(|e| e.region.contains_closed(&p))
                    .map(|e| e.expr.eval(&p))
                    .unwrap_or(self.default);
                if (inside - outside).abs() > TOL_CONT {
                    return Err(Error::InvalidSpec(format!(
                        "discontinuity of size {:.3e} at {p:?} on the boundary of clause {k}",
                        (inside - outside).abs()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Samples the spec at every node of `grid`.
    pub fn sample(&self, grid: &Grid) -> Result<GridFn> {
        self.validate()?;
        if grid.dim() != self.dimension {
            return Err(Error::GridMismatch(format!(
                "spec of dimension {} sampled on a {}D grid",
                self.dimension,
                grid.dim()
            )));
        }
        let bounds = grid.bounds();
        for (k, c) in self.clauses.iter().enumerate() {
            for (a, (lo, hi)) in c.region.bounding_box(self.dimension).into_iter().enumerate() {
                if lo < bounds[a].0 - TOL_CONT || hi > bounds[a].1 + TOL_CONT {
                    return Err(Error::BoxTooSmall(format!(
                        "clause {k} extends over [{lo}, {hi}] on axis {a}, outside the box [{}, {}]",
                        bounds[a].0, bounds[a].1
                    )));
                }
            }
        }
        let f = GridFn::from_fn(grid.clone(), |x| self.eval(x))?;
        let lip = self.analytic_lipschitz().max(f.lipschitz_estimate());
        f.with_extension(Extension::LinearLipschitz(lip))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent() -> PiecewiseSpec {
        PiecewiseSpec {
            dimension: 1,
            clauses: vec![Clause {
                region: Region::Interval { lo: -1.0, hi: 1.0, lo_open: true, hi_open: true },
                expr: ClauseExpr::Cone { center: vec![0.0], scale: -1.0, offset: 1.0 },
            }],
            default: 0.0,
        }
    }

    #[test]
    fn evaluates_first_match() {
        let s = tent();
        assert_eq!(s.eval(&[0.0]), 1.0);
        assert_eq!(s.eval(&[0.5]), 0.5);
        assert_eq!(s.eval(&[3.0]), 0.0);
        assert_eq!(s.analytic_lipschitz(), 1.0);
    }

    #[test]
    fn detects_discontinuity() {
        let mut s = tent();
        s.default = 0.5;
        assert!(matches!(s.validate(), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn box_must_cover_clauses() {
        let g = Grid::line(-0.5, 4.0, 10).unwrap();
        assert!(matches!(tent().sample(&g), Err(Error::BoxTooSmall(_))));
        let g = Grid::line(-4.0, 4.0, 81).unwrap();
        let f = tent().sample(&g).unwrap();
        assert_eq!(f.values()[40], 1.0);
    }

    #[test]
    fn sampling_is_bit_exact() {
        let g = Grid::line(-4.0, 4.0, 1001).unwrap();
        let s = tent();
        let f = s.sample(&g).unwrap();
        for k in 0..g.len() {
            let p = g.point(k);
            assert_eq!(f.values()[k].to_bits(), s.eval(&p[..1]).to_bits());
        }
    }

    #[test]
    fn json_round_trip() {
        let s = tent();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(PiecewiseSpec::from_json(&j).unwrap(), s);
        let src = r#"{"dimension":2,"clauses":[{"region":{"type":"ball","center":[1,0],"radius":1,"open":true},
            "expr":{"type":"cone","center":[1,0],"scale":-0.5,"offset":0.5}}],"default":0}"#;
        let s = PiecewiseSpec::from_json(src).unwrap();
        assert_eq!(s.eval(&[1.0, 0.0]), 0.5);
    }
}
