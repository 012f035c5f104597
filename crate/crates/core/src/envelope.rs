//! Concave and semiconcave envelopes, plus the obstacle-problem residual.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFn};
use crate::hamiltonian::{Hamiltonian, SpdMatrix};
use crate::hopflax;
use crate::hull;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EnvelopeMethod {
    UpperHull1D,
    LiftedHull2D,
}

#[derive(Clone, Debug)]
pub struct EnvelopeResult {
    pub envelope: GridFn,
    /// Nodes where the envelope touches the input (up to rounding).
    pub contact_mask: Vec<bool>,
    pub method: EnvelopeMethod,
}

/// Default tolerance for deciding that a function equals its concave envelope.
pub fn contact_tol(f: &GridFn) -> f64 {
    5.0 * f.grid().max_step() * (1.0 + f.lipschitz_estimate())
}

/// Smallest concave function above `f` on its box.
pub fn concave_envelope(f: &GridFn) -> Result<EnvelopeResult> {
    let [n0, n1] = f.grid().shape();
    let (values, method) = if f.dim() == 1 {
        (hull::upper_envelope_1d(f.values()), EnvelopeMethod::UpperHull1D)
    } else {
        (hull::upper_envelope_2d(n0, n1, f.values()), EnvelopeMethod::LiftedHull2D)
    };
    let scale = 1e-12 * (1.0 + f.values().iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let contact_mask = values.iter().zip(f.values()).map(|(e, v)| (e - v).abs() <= scale).collect();
    let envelope = GridFn::new(f.grid().clone(), values)?;
    Ok(EnvelopeResult { envelope, contact_mask, method })
}

/// `Q(x) = <A^{-1} x, x> / (2T)` sampled on `grid`.
pub fn quadratic_shift(a: &SpdMatrix, grid: &Grid, t: f64) -> Result<GridFn> {
    if a.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "matrix of dimension {} on a {}D grid",
            a.dim(),
            grid.dim()
        )));
    }
    GridFn::from_fn(grid.clone(), |x| a.inverse_form(x) / (2.0 * t))
}

/// Semiconcave envelope `concave_envelope(uT - Q) + Q` over the whole box of `uT`.
///
/// Near the box edge this is anchored on the boundary samples; see
/// [`semiconcave_envelope`] for the version restricted to where it matches
/// the projection.
pub fn semiconcave_envelope_on_box(h: &Hamiltonian, ut: &GridFn, t: f64) -> Result<GridFn> {
    let a = h.as_quadratic().ok_or(Error::NotQuadratic)?;
    let q = quadratic_shift(a, ut.grid(), t)?;
    let shifted = ut.zip_with(&q, |u, q| u - q)?;
    let env = concave_envelope(&shifted)?.envelope;
    env.zip_with(&q, |e, q| e + q)
}

/// Semiconcave envelope, reported on the grid where the backward-forward
/// projection of `uT` is defined.
pub fn semiconcave_envelope(h: &Hamiltonian, ut: &GridFn, t: f64) -> Result<GridFn> {
    let full = semiconcave_envelope_on_box(h, ut, t)?;
    let cells = hopflax::round_trip_cells(h, ut.grid(), ut.lipschitz_estimate(), t)?;
    full.shrink(&cells)
}

/// `true` when `f` equals its concave envelope within `tol` in sup norm.
pub fn discrete_concavity_check_with(f: &GridFn, tol: f64) -> Result<bool> {
    let env = concave_envelope(f)?.envelope;
    Ok(f.sup_norm_diff(&env)? <= tol)
}

pub fn discrete_concavity_check(f: &GridFn) -> Result<bool> {
    discrete_concavity_check_with(f, contact_tol(f))
}

#[derive(Clone, Copy, Debug)]
pub struct ObstacleTolerances {
    pub tol_a: f64,
    pub tol_b: f64,
    /// One-sided slopes differing by more than this mark a kink.
    pub kink_tol: f64,
    /// Largest lattice offset used for directional second differences in 2D.
    pub stencil_width: usize,
}

impl ObstacleTolerances {
    pub fn defaults(v: &GridFn) -> Self {
        let h = v.grid().max_step();
        ObstacleTolerances {
            tol_a: 10.0 * h,
            tol_b: 10.0 * h,
            kink_tol: 0.5 * v.lipschitz_estimate(),
            stencil_width: 6,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ObstacleResidual {
    /// How far the worst node falls below the supersolution test (0 when it passes).
    pub min_violation: f64,
    /// Largest `min(a, max(b, 0))`: positive when neither branch is active.
    pub complementarity: f64,
    pub checked: usize,
    pub kink_exempt: usize,
}

/// Residual of `min{v - uT, -λ_max[D²v - A^{-1}/T]} = 0` at interior nodes of `v`.
pub fn obstacle_residual(v: &GridFn, ut: &GridFn, h: &Hamiltonian, t: f64) -> Result<ObstacleResidual> {
    obstacle_residual_with(v, ut, h, t, &ObstacleTolerances::defaults(v))
}

/// Primitive lattice directions `(p, q)` with `max(|p|, |q|) <= width`, one per line.
fn stencil_directions(width: usize) -> Vec<[i64; 2]> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 { a.abs() } else { gcd(b, a % b) }
    }
    let w = width.max(1) as i64;
    let mut out = vec![];
    for p in 0..=w {
        for q in -w..=w {
            if (p == 0 && q <= 0) || gcd(p, q) != 1 {
                continue;
            }
            out.push([p, q]);
        }
    }
    out
}

/// The largest eigenvalue of the discrete Hessian is taken as the largest
/// directional second difference over a wide stencil. The nine-point Hessian
/// is not consistent on the piecewise-linear envelopes the hull produces:
/// its cross term picks up O(1) errors at every crease.
pub fn obstacle_residual_with(
    v: &GridFn,
    ut: &GridFn,
    h: &Hamiltonian,
    t: f64,
    tol: &ObstacleTolerances,
) -> Result<ObstacleResidual> {
    let a = h.as_quadratic().ok_or(Error::NotQuadratic)?;
    let ut = if ut.grid() == v.grid() { ut.clone() } else { ut.restrict(v.grid())? };
    let g = v.grid();
    let [n0, n1] = g.shape();
    let d = g.dim();
    if a.dim() != d {
        return Err(Error::GridMismatch("hamiltonian and grid dimensions differ".into()));
    }
    let steps = g.steps();
    let inv = a.inverse_rows();
    let at = |i: usize, j: usize| v.at(i, j);
    let dirs = if d == 1 { vec![[1, 0]] } else { stencil_directions(tol.stencil_width) };

    let node = |k: usize| -> Option<(f64, f64, bool)> {
        let [i, j] = g.multi(k);
        if i == 0 || i + 1 >= n0 || (d == 2 && (j == 0 || j + 1 >= n1)) {
            return None;
        }
        let c = at(i, j);
        let h0 = steps[0];
        let mut kink = ((at(i + 1, j) - c) - (c - at(i - 1, j))).abs() / h0 > tol.kink_tol;
        if d == 2 {
            let h1 = steps[1];
            kink |= ((at(i, j + 1) - c) - (c - at(i, j - 1))).abs() / h1 > tol.kink_tol;
        }
        let mut lam = f64::NEG_INFINITY;
        for &[p, q] in &dirs {
            let (ip, jp) = (i as i64 + p, j as i64 + q);
            let (im, jm) = (i as i64 - p, j as i64 - q);
            if ip < 0 || im < 0 || jp < 0 || jm < 0 || ip >= n0 as i64 || im >= n0 as i64 || jp >= n1 as i64 || jm >= n1 as i64 {
                continue;
            }
            let e = if d == 1 { [p as f64 * h0, 0.0] } else { [p as f64 * h0, q as f64 * steps[1]] };
            let len2 = e[0] * e[0] + e[1] * e[1];
            let second = (at(ip as usize, jp as usize) - 2.0 * c + at(im as usize, jm as usize)) / len2;
            let form = if d == 1 {
                inv[0][0] * e[0] * e[0]
            } else {
                inv[0][0] * e[0] * e[0] + 2.0 * inv[0][1] * e[0] * e[1] + inv[1][1] * e[1] * e[1]
            };
            lam = lam.max(second - form / (t * len2));
        }
        let aa = c - ut.values()[k];
        Some((aa, -lam, kink))
    };

    let per_node: Vec<Option<(f64, f64, bool)>> = (0..g.len()).into_par_iter().with_min_len(256).map(node).collect();
    let mut worst = f64::INFINITY;
    let mut comp: f64 = 0.0;
    let mut checked = 0;
    let mut exempt = 0;
    for (aa, b, kink) in per_node.into_iter().flatten() {
        if kink {
            exempt += 1;
            continue;
        }
        checked += 1;
        worst = worst.min((aa + tol.tol_a).min(b + tol.tol_b));
        comp = comp.max(aa.min(b.max(0.0)));
    }
    let min_violation = if worst.is_finite() { (-worst).max(0.0) } else { 0.0 };
    Ok(ObstacleResidual { min_violation, complementarity: comp, checked, kink_exempt: exempt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn sample(name: &str) -> GridFn {
        let e = catalog::entry(name).unwrap();
        let g = Grid::from_box(&e.default_box, &e.default_res).unwrap();
        e.spec.sample(&g).unwrap()
    }

    #[test]
    fn concave_input_is_its_own_envelope() {
        let f = GridFn::from_fn(Grid::line(-4.0, 4.0, 401).unwrap(), |x| -x[0] * x[0]).unwrap();
        let r = concave_envelope(&f).unwrap();
        assert_eq!(r.method, EnvelopeMethod::UpperHull1D);
        assert!(r.envelope.sup_norm_diff(&f).unwrap() < 1e-12);
        assert!(r.contact_mask.iter().all(|&c| c));
    }

    #[test]
    fn double_well_envelope_is_flat() {
        let u3 = sample("u3");
        let r = concave_envelope(&u3).unwrap();
        assert!(r.envelope.values().iter().all(|v| v.abs() < 1e-12));
        for k in 0..u3.grid().len() {
            let x = u3.grid().point(k)[0];
            let expected = x <= -2.0 + 1e-9 || x >= 2.0 - 1e-9 || x.abs() < 1e-9;
            assert_eq!(r.contact_mask[k], expected, "x = {x}");
        }
    }

    #[test]
    fn twin_peaks_envelope_is_a_tent() {
        let u4 = sample("u4");
        let r = concave_envelope(&u4).unwrap();
        let tent = |x: f64| {
            if x < -1.0 {
                (x + 4.0) / 3.0
            } else if x <= 1.0 {
                1.0
            } else {
                (4.0 - x) / 3.0
            }
        };
        for k in 0..u4.grid().len() {
            let x = u4.grid().point(k)[0];
            assert!((r.envelope.values()[k] - tent(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn concavity_check() {
        let g = Grid::line(-2.0, 2.0, 201).unwrap();
        let affine = GridFn::from_fn(g.clone(), |x| 0.3 * x[0] - 1.0).unwrap();
        assert!(discrete_concavity_check(&affine).unwrap());
        let abs = GridFn::from_fn(g, |x| x[0].abs()).unwrap();
        assert!(!discrete_concavity_check(&abs).unwrap());
    }

    #[test]
    fn semiconcave_envelope_values() {
        let h = Hamiltonian::isotropic(1);
        let g = Grid::line(-8.0, 8.0, 2001).unwrap();
        let u3 = catalog::entry("u3").unwrap().spec.sample(&g).unwrap();
        let s = semiconcave_envelope(&h, &u3, 1.0).unwrap();
        assert!((s.nearest(&[-1.0]).unwrap() + 0.5).abs() < 0.02);
        assert!(s.nearest(&[0.0]).unwrap().abs() < 0.02);
        assert!((s.nearest(&[1.0]).unwrap() + 0.5).abs() < 0.02);
        let u4 = catalog::entry("u4").unwrap().spec.sample(&g).unwrap();
        let s4 = semiconcave_envelope(&h, &u4, 0.5).unwrap();
        assert!(s4.nearest(&[0.0]).unwrap().abs() < 0.02);
        assert!(matches!(
            semiconcave_envelope(&Hamiltonian::scalar_expr("p^2/2", -2.0, 2.0).unwrap(), &u3, 1.0),
            Err(Error::NotQuadratic)
        ));
    }

    #[test]
    fn obstacle_residual_examples() {
        let h = Hamiltonian::isotropic(1);
        let g = Grid::line(-3.0, 3.0, 601).unwrap();
        // concave quadratic: solution with a = 0 and b > 0
        let q = GridFn::from_fn(g.clone(), |x| -x[0] * x[0] / 4.0).unwrap();
        let r = obstacle_residual(&q, &q, &h, 1.0).unwrap();
        assert_eq!(r.min_violation, 0.0);
        assert!(r.complementarity < 1e-12);

        // v strictly above a convex obstacle
        let ut = GridFn::from_fn(g, |x| x[0] * x[0]).unwrap();
        let v = ut.map(|x| x + 1.0).unwrap();
        let steep = obstacle_residual(&v, &ut, &h, 0.25).unwrap();
        assert!(steep.complementarity > 0.5, "{steep:?}");
        let flat = obstacle_residual(&v, &ut, &h, 1.0).unwrap();
        assert!(flat.min_violation > 0.5, "{flat:?}");
    }
}
