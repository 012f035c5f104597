//! Reachability of a target: the fixed-point test, the differential test,
//! and semiconcavity constants.

use crate::envelope::{self, quadratic_shift};
use crate::error::{Error, Result};
use crate::grid::GridFn;
use crate::hamiltonian::Hamiltonian;
use crate::hopflax;
use rayon::prelude::*;
use serde::Serialize;

/// Multiplier in the default fixed-point tolerance `c·h·(1 + Lip)·(1 + 1/T)`.
pub const REACH_FACTOR: f64 = 1.0;

pub fn default_tol_reach(ut: &GridFn, t: f64) -> f64 {
    REACH_FACTOR * ut.grid().max_step() * (1.0 + ut.lipschitz_estimate()) * (1.0 + 1.0 / t)
}

/// Sup-norm of `compose_project(uT) - uT` on the grid where the projection is defined.
pub fn fixedpoint_residual(h: &Hamiltonian, ut: &GridFn, t: f64) -> Result<f64> {
    let p = hopflax::compose_project(h, ut, t)?;
    p.sup_norm_diff_common(ut)
}

pub fn check_fixedpoint(h: &Hamiltonian, ut: &GridFn, t: f64, tol_reach: f64) -> Result<(bool, f64)> {
    let r = fixedpoint_residual(h, ut, t)?;
    Ok((r <= tol_reach, r))
}

/// Differential reachability test.
///
/// Quadratic Hamiltonians: `uT - <A^{-1}x,x>/(2T)` must equal its concave
/// envelope within the same band as the fixed-point test, since both measure
/// the distance to one envelope. Scalar 1D Hamiltonians: at every interior
/// node the interpolating parabola `φ` of the 3-point stencil must satisfy
/// `φ'' <= (1 + slack)/(T·H_pp(φ')) + 10h`.
pub fn check_differential(h: &Hamiltonian, ut: &GridFn, t: f64) -> Result<bool> {
    check_differential_with(h, ut, t, default_tol_reach(ut, t))
}

/// As [`check_differential`] with an explicit sup-norm band for the quadratic case.
pub fn check_differential_with(h: &Hamiltonian, ut: &GridFn, t: f64, tol: f64) -> Result<bool> {
    match h {
        Hamiltonian::Quadratic(a) => {
            let q = quadratic_shift(a, ut.grid(), t)?;
            let f = ut.zip_with(&q, |u, q| u - q)?;
            envelope::discrete_concavity_check_with(&f, tol)
        }
        Hamiltonian::Scalar1D(s) => {
            if ut.dim() != 1 {
                return Err(Error::UnsupportedCase(
                    "the differential test for a scalar hamiltonian is one-dimensional".into(),
                ));
            }
            scalar_stencil_check(s, ut, t, SCALAR_SLACK)
        }
    }
}

/// Relative slack on the curvature bound in the scalar stencil test.
pub const SCALAR_SLACK: f64 = 0.5;

fn scalar_stencil_check(s: &crate::hamiltonian::Scalar1D, ut: &GridFn, t: f64, slack: f64) -> Result<bool> {
    let v = ut.values();
    let hstep = ut.grid().axis(0).step;
    for i in 1..v.len() - 1 {
        let second = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (hstep * hstep);
        if second <= 0.0 {
            // concave or flat stencil: no parabola touches from below with positive curvature
            continue;
        }
        let slope = (v[i + 1] - v[i - 1]) / (2.0 * hstep);
        let hpp = s.hpp(slope)?;
        if second > (1.0 + slack) / (t * hpp) + 10.0 * hstep {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest `(f(x+d) + f(x-d) - 2f(x)) / |d|²` over interior nodes, axis and
/// diagonal directions, and steps `d` at dyadic multiples of the spacing up
/// to a quarter of the box. Clamped below at 0.
pub fn semiconcavity_constant(f: &GridFn) -> f64 {
    let g = f.grid();
    let [n0, n1] = g.shape();
    let steps = g.steps();
    let dirs: Vec<[i64; 2]> = if g.dim() == 1 { vec![[1, 0]] } else { vec![[1, 0], [0, 1], [1, 1], [1, -1]] };
    let limit = n0.min(if g.dim() == 1 { n0 } else { n1 }) / 4;
    let mut scales = Vec::new();
    let mut m = 1usize;
    while m <= limit.max(1) {
        scales.push(m as i64);
        m *= 2;
    }
    let best = (0..g.len())
        .into_par_iter()
        .with_min_len(256)
        .map(|k| {
            let [i, j] = g.multi(k);
            let (i, j) = (i as i64, j as i64);
            let mut best: f64 = 0.0;
            for d in &dirs {
                for &m in &scales {
                    let (di, dj) = (d[0] * m, d[1] * m);
                    let inside = |a: i64, b: i64| a >= 0 && (a as usize) < n0 && b >= 0 && (b as usize) < n1;
                    if !inside(i + di, j + dj) || !inside(i - di, j - dj) {
                        continue;
                    }
                    let len2 = (di as f64 * steps[0]).powi(2)
                        + if g.dim() == 2 { (dj as f64 * steps[1]).powi(2) } else { 0.0 };
                    let c = f.at(i as usize, j as usize);
                    let p = f.at((i + di) as usize, (j + dj) as usize);
                    let q = f.at((i - di) as usize, (j - dj) as usize);
                    best = best.max((p + q - 2.0 * c) / len2);
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    best.max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Reachable,
    NotReachable,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridMeta {
    pub bounds: Vec<(f64, f64)>,
    pub resolution: Vec<usize>,
}

impl GridMeta {
    pub fn of(f: &GridFn) -> Self {
        GridMeta {
            bounds: f.grid().bounds(),
            resolution: f.grid().axes().iter().map(|a| a.len).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReachabilityReport {
    pub horizon: f64,
    pub fixedpoint_residual: f64,
    pub tol_reach: f64,
    pub fixedpoint_verdict: bool,
    pub differential_verdict: bool,
    pub semiconcavity_constant: f64,
    pub necessary_bound: f64,
    pub sufficient_bound: f64,
    pub verdict: Verdict,
    pub input_grid: GridMeta,
    pub region_of_interest: GridMeta,
}

/// Curvature bounds `1/(T·λ_min)` (necessary) and `1/(T·λ_max)` (sufficient).
pub fn curvature_bounds(h: &Hamiltonian, lip: f64, t: f64) -> Result<(f64, f64)> {
    match h {
        Hamiltonian::Quadratic(a) => Ok((1.0 / (t * a.lambda_min()), 1.0 / (t * a.lambda_max()))),
        Hamiltonian::Scalar1D(s) => {
            let lo = s.min_curvature(lip)?;
            let n = 401;
            let mut hi: f64 = 0.0;
            for k in 0..n {
                let p = -lip + 2.0 * lip * k as f64 / (n - 1) as f64;
                hi = hi.max(s.hpp(p)?);
            }
            Ok((1.0 / (t * lo), 1.0 / (t * hi)))
        }
    }
}

pub fn full_report(h: &Hamiltonian, ut: &GridFn, t: f64) -> Result<ReachabilityReport> {
    full_report_with(h, ut, t, default_tol_reach(ut, t))
}

pub fn full_report_with(h: &Hamiltonian, ut: &GridFn, t: f64, tol_reach: f64) -> Result<ReachabilityReport> {
    let p = hopflax::compose_project(h, ut, t)?;
    let roi = ut.restrict(p.grid())?;
    let residual = p.sup_norm_diff(&roi)?;
    let fixed = residual <= tol_reach;
    let diff = check_differential_with(h, &roi, t, tol_reach)?;
    let (necessary, sufficient) = curvature_bounds(h, ut.lipschitz_estimate(), t)?;
    let verdict = match (fixed, diff) {
        (true, true) => Verdict::Reachable,
        (false, false) => Verdict::NotReachable,
        _ => Verdict::Indeterminate,
    };
    Ok(ReachabilityReport {
        horizon: t,
        fixedpoint_residual: residual,
        tol_reach,
        fixedpoint_verdict: fixed,
        differential_verdict: diff,
        semiconcavity_constant: semiconcavity_constant(&roi),
        necessary_bound: necessary,
        sufficient_bound: sufficient,
        verdict,
        input_grid: GridMeta::of(ut),
        region_of_interest: GridMeta::of(&roi),
    })
}
