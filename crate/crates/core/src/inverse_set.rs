//! Initial data that reach a given target: the minimal datum, the set where
//! every such datum must agree with it, membership tests, and samplers.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFn};
use crate::hamiltonian::Hamiltonian;
use crate::hopflax;
use crate::hull;
use crate::reachability::default_tol_reach;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Radius, in cells, used to dilate each pushforward image.
pub const DILATION_CELLS: f64 = 1.5;
/// Radius, in cells, of the erosion applied before equality tests.
pub const EROSION_CELLS: f64 = 2.0;
/// Fraction of [`expose_tol`] a node's rise must exceed to count as exposed.
/// Near a shock the touching paraboloid is only barely strict, so the rise
/// there falls well below the paraboloid's own curvature.
pub const EXPOSE_FACTOR: f64 = 0.1;
/// Largest lattice offset of the chords probing exposedness in 2D.
const CHORD_WIDTH: i64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum XSetMethod {
    GradientPushforward,
    ExposedPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pushforward {
    pub source: Vec<f64>,
    pub image: Vec<f64>,
}

/// Boolean grid marking the points every admissible initial datum is pinned at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XSetMask {
    pub grid: Grid,
    pub mask: Vec<bool>,
    pub pushforward: Vec<Pushforward>,
    pub method: XSetMethod,
}

/// Lattice offsets within a Euclidean radius measured in cells.
fn ball_offsets(dim: usize, radius: f64) -> Vec<[i64; 2]> {
    let r = radius.floor() as i64;
    let mut out = vec![];
    for di in -r..=r {
        let js = if dim == 1 { 0..=0 } else { -r..=r };
        for dj in js {
            if ((di * di + dj * dj) as f64) <= radius * radius + 1e-12 {
                out.push([di, dj]);
            }
        }
    }
    out
}

impl XSetMask {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Mask value at the node nearest to `x`, `None` outside the box.
    pub fn contains(&self, x: &[f64]) -> Option<bool> {
        let mut l = [0i64; 2];
        for (k, a) in self.grid.axes().iter().enumerate() {
            l[k] = a.nearest_lattice(x[k]);
        }
        self.grid.flat_of_lattice(l).map(|k| self.mask[k])
    }

    /// Mask value at lattice node `l`, `None` outside the box.
    pub fn at_lattice(&self, l: [i64; 2]) -> Option<bool> {
        self.grid.flat_of_lattice(l).map(|k| self.mask[k])
    }

    pub fn dilated(&self, cells: f64) -> Vec<bool> {
        let offs = ball_offsets(self.grid.dim(), cells);
        (0..self.grid.len())
            .into_par_iter()
            .map(|k| {
                let l = self.grid.lattice_index(k);
                offs.iter().any(|o| self.at_lattice([l[0] + o[0], l[1] + o[1]]) == Some(true))
            })
            .collect()
    }

    /// Nodes whose whole `cells`-ball inside the box is marked.
    pub fn eroded(&self, cells: f64) -> Vec<bool> {
        let offs = ball_offsets(self.grid.dim(), cells);
        (0..self.grid.len())
            .into_par_iter()
            .map(|k| {
                let l = self.grid.lattice_index(k);
                offs.iter().all(|o| self.at_lattice([l[0] + o[0], l[1] + o[1]]) != Some(false))
            })
            .collect()
    }

    /// Unmarked runs of a 1D mask as `(first node, last node)` coordinates.
    pub fn complement_intervals(&self) -> Result<Vec<(f64, f64)>> {
        if self.grid.dim() != 1 {
            return Err(Error::UnsupportedCase("complement intervals are one-dimensional".into()));
        }
        let ax = self.grid.axis(0);
        let mut out = vec![];
        let mut start = None;
        for (i, &m) in self.mask.iter().enumerate() {
            match (m, start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    out.push((ax.coord(s), ax.coord(i - 1)));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((ax.coord(s), ax.coord(self.mask.len() - 1)));
        }
        Ok(out)
    }

    /// `true` when, on the common grid, every node where the two masks
    /// disagree lies within `band` cells of a change in `self`.
    pub fn agrees_up_to_band(&self, other: &XSetMask, band: f64) -> Result<bool> {
        let common = self.grid.intersect(&other.grid)?;
        let offs = ball_offsets(self.grid.dim(), band);
        Ok((0..common.len()).into_par_iter().all(|k| {
            let l = common.lattice_index(k);
            let a = self.at_lattice(l).unwrap();
            if Some(a) == other.at_lattice(l) {
                return true;
            }
            offs.iter().any(|o| self.at_lattice([l[0] + o[0], l[1] + o[1]]) == Some(!a))
        }))
    }

    /// Nodes where a bump of `radius` centred there keeps its support out of
    /// the mask dilated by the erosion margin.
    pub fn free_centers(&self, radius: f64) -> Vec<usize> {
        let guard = self.dilated(EROSION_CELLS);
        let steps = self.grid.steps();
        let h = steps.iter().cloned().fold(f64::INFINITY, f64::min);
        let offs = ball_offsets(self.grid.dim(), radius / h);
        (0..self.grid.len())
            .into_par_iter()
            .filter(|&k| {
                let l = self.grid.lattice_index(k);
                offs.iter().all(|o| {
                    let d2: f64 = (0..self.grid.dim()).map(|a| (o[a] as f64 * steps[a]).powi(2)).sum();
                    if d2 >= radius * radius {
                        return true;
                    }
                    match self.grid.flat_of_lattice([l[0] + o[0], l[1] + o[1]]) {
                        Some(q) => !guard[q],
                        None => false,
                    }
                })
            })
            .collect()
    }

    /// The mask as a grid CSV of 0/1 values.
    pub fn to_csv(&self) -> Result<String> {
        let f = GridFn::new(self.grid.clone(), self.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect())?;
        Ok(f.to_csv())
    }

    /// JSON sidecar with the method, grid and pushforward pairs.
    pub fn sidecar_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            method: XSetMethod,
            grid: &'a Grid,
            marked: usize,
            pushforward_points: &'a [Pushforward],
        }
        Ok(serde_json::to_string_pretty(&Sidecar {
            method: self.method,
            grid: &self.grid,
            marked: self.count(),
            pushforward_points: &self.pushforward,
        })?)
    }
}

fn rasterize(grid: &Grid, images: &[Pushforward]) -> Vec<bool> {
    let mut mask = vec![false; grid.len()];
    let dim = grid.dim();
    let offs = ball_offsets(dim, DILATION_CELLS.ceil());
    let steps = grid.steps();
    for p in images {
        let mut base = [0i64; 2];
        for (k, a) in grid.axes().iter().enumerate() {
            base[k] = a.nearest_lattice(p.image[k]);
        }
        for o in &offs {
            let l = [base[0] + o[0], base[1] + o[1]];
            let Some(q) = grid.flat_of_lattice(l) else { continue };
            let x = grid.point(q);
            let d2: f64 = (0..dim).map(|a| ((x[a] - p.image[a]) / steps[a]).powi(2)).sum();
            if d2 <= DILATION_CELLS * DILATION_CELLS + 1e-9 {
                mask[q] = true;
            }
        }
    }
    mask
}

/// Curvature scale `1/(T·λ_min)` of the Hamiltonian's Hessian on slopes up to `lip`.
fn curvature_scale(h: &Hamiltonian, lip: f64, t: f64) -> Result<f64> {
    let m = match h {
        Hamiltonian::Quadratic(a) => a.lambda_min(),
        Hamiltonian::Scalar1D(s) => s.min_curvature(lip)?,
    };
    Ok(1.0 / (t * m))
}

/// Default slope-jump threshold separating differentiable nodes from kinks.
pub fn default_diff_tol(h: &Hamiltonian, ut: &GridFn, t: f64) -> Result<f64> {
    Ok(5.0 * ut.grid().max_step() * curvature_scale(h, ut.lipschitz_estimate(), t)?)
}

/// `h²/(2T·λ_max)`: the least rise a strictly exposed node shows when removed.
pub fn expose_tol(h: &Hamiltonian, grid: &Grid, t: f64) -> Result<f64> {
    let a = h.as_quadratic().ok_or(Error::NotQuadratic)?;
    Ok(grid.min_step().powi(2) / (2.0 * t * a.lambda_max()))
}

/// A reachable target with its minimal initial datum.
#[derive(Clone, Debug)]
pub struct Inversion {
    pub hamiltonian: Hamiltonian,
    pub target: GridFn,
    pub horizon: f64,
    pub tol_reach: f64,
    pub residual: f64,
    pub minimal: GridFn,
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipReport {
    pub member: bool,
    /// `min(u0 - ũ0)` on the common grid.
    pub min_gap: f64,
    /// `max |u0 - ũ0|` on the eroded mask.
    pub mask_mismatch: f64,
    /// Sup-norm of `forward(u0) - uT`, when cross-checked.
    pub forward_residual: Option<f64>,
    pub tol: f64,
}

impl Inversion {
    pub fn new(h: &Hamiltonian, ut: &GridFn, t: f64) -> Result<Self> {
        Self::with_tol(h, ut, t, default_tol_reach(ut, t))
    }

    /// Fails with `TargetNotReachable` when the fixed-point residual exceeds `tol_reach`.
    pub fn with_tol(h: &Hamiltonian, ut: &GridFn, t: f64, tol_reach: f64) -> Result<Self> {
        let minimal = hopflax::backward(h, ut, t)?;
        let residual = hopflax::forward(h, &minimal, t)?.sup_norm_diff_common(ut)?;
        if residual > tol_reach {
            return Err(Error::TargetNotReachable { residual, tol: tol_reach });
        }
        Ok(Inversion { hamiltonian: h.clone(), target: ut.clone(), horizon: t, tol_reach, residual, minimal })
    }

    /// Pushforward of the target's differentiable nodes, on the grid of the minimal datum.
    pub fn xset_gradient(&self, diff_tol: Option<f64>) -> Result<XSetMask> {
        let ut = &self.target;
        let t = self.horizon;
        let tol = match diff_tol {
            Some(d) => d,
            None => default_diff_tol(&self.hamiltonian, ut, t)?,
        };
        let g = ut.grid();
        let dim = g.dim();
        let [n0, n1] = g.shape();
        let steps = g.steps();
        let images: Vec<Option<Pushforward>> = (0..g.len())
            .into_par_iter()
            .with_min_len(256)
            .map(|k| -> Result<Option<Pushforward>> {
                let [i, j] = g.multi(k);
                if i == 0 || i + 1 >= n0 || (dim == 2 && (j == 0 || j + 1 >= n1)) {
                    return Ok(None);
                }
                let c = ut.at(i, j);
                let mut grad = vec![0.0; dim];
                for (a, ga) in grad.iter_mut().enumerate() {
                    let (hi, lo) = if a == 0 { (ut.at(i + 1, j), ut.at(i - 1, j)) } else { (ut.at(i, j + 1), ut.at(i, j - 1)) };
                    let fwd = (hi - c) / steps[a];
                    let bwd = (c - lo) / steps[a];
                    if (fwd - bwd).abs() > tol {
                        return Ok(None);
                    }
                    *ga = 0.5 * (fwd + bwd);
                }
                let v = self.hamiltonian.grad(&grad)?;
                let z = g.point_vec(k);
                let image = z.iter().zip(&v).map(|(z, v)| z - t * v).collect();
                Ok(Some(Pushforward { source: z, image }))
            })
            .collect::<Result<_>>()?;
        let pushforward: Vec<Pushforward> = images.into_iter().flatten().collect();
        let grid = self.minimal.grid().clone();
        let mask = rasterize(&grid, &pushforward);
        Ok(XSetMask { grid, mask, pushforward, method: XSetMethod::GradientPushforward })
    }

    pub fn membership(&self, u0: &GridFn, cross_check: bool) -> Result<MembershipReport> {
        let mask = self.xset_gradient(None)?;
        self.membership_with_mask(u0, &mask, cross_check)
    }

    /// Membership against a precomputed mask of this target.
    pub fn membership_with_mask(&self, u0: &GridFn, mask: &XSetMask, cross_check: bool) -> Result<MembershipReport> {
        let tol = self.tol_reach;
        let common = u0.grid().intersect(self.minimal.grid())?;
        let eroded = mask.eroded(EROSION_CELLS);
        let a = u0.restrict(&common)?;
        let b = self.minimal.restrict(&common)?;
        let mut min_gap = f64::INFINITY;
        let mut mismatch: f64 = 0.0;
        for k in 0..common.len() {
            let d = a.values()[k] - b.values()[k];
            min_gap = min_gap.min(d);
            let l = common.lattice_index(k);
            if mask.grid.flat_of_lattice(l).map(|q| eroded[q]).unwrap_or(false) {
                mismatch = mismatch.max(d.abs());
            }
        }
        let mut member = min_gap >= -tol && mismatch <= tol;
        let forward_residual = if cross_check {
            let r = hopflax::forward(&self.hamiltonian, u0, self.horizon)?.sup_norm_diff_common(&self.target)?;
            member &= r <= tol;
            Some(r)
        } else {
            None
        };
        Ok(MembershipReport { member, min_gap, mask_mismatch: mismatch, forward_residual, tol })
    }
}

/// `backward(uT)`, provided `uT` passes the fixed-point test.
pub fn minimal_initial(h: &Hamiltonian, ut: &GridFn, t: f64) -> Result<GridFn> {
    Ok(Inversion::new(h, ut, t)?.minimal)
}

pub fn xset_gradient(h: &Hamiltonian, ut: &GridFn, t: f64, diff_tol: Option<f64>) -> Result<XSetMask> {
    Inversion::new(h, ut, t)?.xset_gradient(diff_tol)
}

pub fn membership(h: &Hamiltonian, u0: &GridFn, ut: &GridFn, t: f64) -> Result<bool> {
    Ok(Inversion::new(h, ut, t)?.membership(u0, false)?.member)
}

/// Exposed-point characterisation from any member `u0`.
///
/// With `g = u0 + <A^{-1}x,x>/(2T)`, a node is marked when `g` touches its
/// lower convex envelope there and the node is exposed: dropping it would
/// raise the envelope by more than [`EXPOSE_FACTOR`] times [`expose_tol`]. In 1D the rise is
/// computed exactly from the hull; in 2D it is bounded above by the smallest
/// lattice chord through the node.
pub fn xset_exposed(h: &Hamiltonian, u0: &GridFn, ut: &GridFn, t: f64) -> Result<XSetMask> {
    let a = h.as_quadratic().ok_or(Error::NotQuadratic)?;
    let tol_reach = default_tol_reach(ut, t);
    let residual = hopflax::forward(h, u0, t)?.sup_norm_diff_common(ut)?;
    if residual > tol_reach {
        return Err(Error::NotMember { residual, tol: tol_reach });
    }
    let grid = u0.grid().clone();
    let q = crate::envelope::quadratic_shift(a, &grid, t)?;
    let g = u0.zip_with(&q, |u, q| u + q)?;
    let threshold = EXPOSE_FACTOR * expose_tol(h, &grid, t)?;
    let mask = if grid.dim() == 1 { exposed_1d(g.values(), threshold) } else { exposed_2d(&g, threshold) };
    Ok(XSetMask { grid, mask, pushforward: vec![], method: XSetMethod::ExposedPoint })
}

fn exposed_1d(g: &[f64], threshold: f64) -> Vec<bool> {
    let n = g.len();
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    let hull = hull::upper_hull_1d(&neg);
    let mut mask = vec![false; n];
    for w in hull.windows(3) {
        let (lo, k, hi) = (w[0], w[1], w[2]);
        // lower hull of the nodes in [lo, hi] without k, evaluated at k
        let mut idx: Vec<usize> = (lo..=hi).filter(|&m| m != k).collect();
        let ys: Vec<f64> = idx.iter().map(|&m| neg[m]).collect();
        let sub = chain_with_x(&idx, &ys);
        idx = sub;
        let pos = idx.partition_point(|&m| m < k);
        let (a, b) = (idx[pos - 1], idx[pos]);
        let s = (k - a) as f64 / (b - a) as f64;
        let raised = g[a] + s * (g[b] - g[a]);
        mask[k] = raised - g[k] > threshold;
    }
    if n >= 2 {
        mask[0] = mask[1];
        mask[n - 1] = mask[n - 2];
    }
    mask
}

/// Upper hull of `(xs[k], ys[k])` for increasing integer `xs`, returned as x values.
fn chain_with_x(xs: &[usize], ys: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for k in 0..xs.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (xs[b] as f64 - xs[a] as f64) * (ys[k] - ys[a]) - (ys[b] - ys[a]) * (xs[k] as f64 - xs[a] as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    hull.into_iter().map(|k| xs[k]).collect()
}

fn exposed_2d(g: &GridFn, threshold: f64) -> Vec<bool> {
    let grid = g.grid();
    let [n0, n1] = grid.shape();
    let neg: Vec<f64> = g.values().iter().map(|v| -v).collect();
    let env: Vec<f64> = hull::upper_envelope_2d(n0, n1, &neg).into_iter().map(|v| -v).collect();
    let contact_slack = 0.5 * threshold;
    let mut offsets = vec![];
    for p in 0..=CHORD_WIDTH {
        for q in -CHORD_WIDTH..=CHORD_WIDTH {
            if p > 0 || q > 0 {
                offsets.push([p, q]);
            }
        }
    }
    let v = g.values();
    let verdict: Vec<Option<bool>> = (0..grid.len())
        .into_par_iter()
        .with_min_len(256)
        .map(|k| {
            let [i, j] = grid.multi(k);
            let (i, j) = (i as i64, j as i64);
            let mut rise = f64::INFINITY;
            for &[p, q] in &offsets {
                let (ip, jp, im, jm) = (i + p, j + q, i - p, j - q);
                if ip >= n0 as i64 || im < 0 || jp < 0 || jm < 0 || jp >= n1 as i64 || jm >= n1 as i64 {
                    continue;
                }
                let plus = v[ip as usize * n1 + jp as usize];
                let minus = v[im as usize * n1 + jm as usize];
                rise = rise.min(0.5 * (plus + minus) - v[k]);
            }
            if !rise.is_finite() {
                return None;
            }
            Some(v[k] - env[k] <= contact_slack && rise > threshold)
        })
        .collect();
    // edge nodes without a full chord copy the closest node that has one
    (0..grid.len())
        .map(|k| {
            if let Some(b) = verdict[k] {
                return b;
            }
            let [i, j] = grid.multi(k);
            let ci = i.clamp(1, n0.saturating_sub(2));
            let cj = j.clamp(1, n1.saturating_sub(2));
            verdict[ci * n1 + cj].unwrap_or(false)
        })
        .collect()
}

/// Cone bump `height · max(0, 1 - |x - center| / radius)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub height: f64,
}

impl Bump {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        self.height * (1.0 - r / self.radius).max(0.0)
    }
}

/// `ũ0` plus bumps whose supports avoid the mask dilated by the erosion margin.
pub fn sample_member(u0_min: &GridFn, xset: &XSetMask, bumps: &[Bump]) -> Result<GridFn> {
    let guard = xset.dilated(EROSION_CELLS);
    let grid = u0_min.grid();
    let mut violations = 0;
    for b in bumps {
        if b.center.len() != grid.dim() {
            return Err(Error::InvalidSpec(format!("bump centre has {} coordinates on a {}D grid", b.center.len(), grid.dim())));
        }
        if !(b.radius > 0.0) || !(b.height >= 0.0) || !b.height.is_finite() {
            return Err(Error::InvalidSpec(format!("bump needs radius > 0 and height >= 0, got {b:?}")));
        }
        if b.height == 0.0 {
            continue;
        }
        for k in 0..grid.len() {
            if b.eval(&grid.point(k)[..grid.dim()]) <= 0.0 {
                continue;
            }
            match xset.grid.flat_of_lattice(grid.lattice_index(k)) {
                Some(q) if !guard[q] => {}
                _ => violations += 1,
            }
        }
    }
    if violations > 0 {
        return Err(Error::SupportViolation(violations));
    }
    u0_min.map_with_point(|v, x| v + bumps.iter().map(|b| b.eval(x)).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn unit() -> Hamiltonian {
        Hamiltonian::isotropic(1)
    }

    fn example_target(n: usize) -> GridFn {
        let e = catalog::entry("u1").unwrap();
        e.target_covering(&Grid::line(-4.0, 4.0, n).unwrap()).unwrap()
    }

    #[test]
    fn affine_target() {
        let h = unit();
        let ut = GridFn::from_fn(Grid::line(-4.0, 4.0, 401).unwrap(), |x| 0.5 * x[0] - 1.0).unwrap();
        let u0 = minimal_initial(&h, &ut, 1.0).unwrap();
        for k in 0..u0.grid().len() {
            let x = u0.grid().point(k)[0];
            assert!((u0.values()[k] - (0.5 * x - 1.0 + 0.125)).abs() < 1e-12);
        }
        let m = xset_gradient(&h, &ut, 1.0, None).unwrap();
        assert!(m.mask.iter().all(|&b| b));
    }

    #[test]
    fn unreachable_target_is_rejected() {
        let h = unit();
        let u3 = catalog::entry("u3").unwrap().target().unwrap();
        assert!(matches!(minimal_initial(&h, &u3, 1.0), Err(Error::TargetNotReachable { .. })));
    }

    #[test]
    fn example_minimal_datum_and_mask() {
        let h = unit();
        let ut = example_target(1001);
        let inv = Inversion::new(&h, &ut, 0.5).unwrap();
        assert!((inv.minimal.nearest(&[-1.0]).unwrap() - 0.75).abs() < 0.01);
        let m = inv.xset_gradient(None).unwrap();
        let holes = m.complement_intervals().unwrap();
        assert_eq!(holes.len(), 2, "{holes:?}");
        let expect = [(-1.5, -0.5), (0.5, 1.5)];
        for (got, want) in holes.iter().zip(expect) {
            assert!((got.0 - want.0).abs() <= 3.0 * 0.008 && (got.1 - want.1).abs() <= 3.0 * 0.008, "{holes:?}");
        }
        for p in &m.pushforward {
            if let Some(true) | None = m.contains(&p.image) {
                continue;
            }
            panic!("image {:?} not marked", p.image);
        }
    }

    #[test]
    fn concave_kink_leaves_a_hole() {
        let h = unit();
        let t = 0.5;
        let ut = GridFn::from_fn(Grid::line(-4.0, 4.0, 801).unwrap(), |x| -x[0].abs()).unwrap();
        let m = xset_gradient(&h, &ut, t, None).unwrap();
        let holes = m.complement_intervals().unwrap();
        assert_eq!(holes.len(), 1);
        assert!((holes[0].0 + t).abs() <= 0.03 && (holes[0].1 - t).abs() <= 0.03, "{holes:?}");
    }

    #[test]
    fn exposed_points_match_pushforward() {
        let h = unit();
        let ut = example_target(1001);
        let inv = Inversion::new(&h, &ut, 0.5).unwrap();
        let grad = inv.xset_gradient(None).unwrap();
        let from_min = xset_exposed(&h, &inv.minimal, &ut, 0.5).unwrap();
        assert!(grad.agrees_up_to_band(&from_min, 3.0).unwrap());
        let u1 = catalog::entry("u1").unwrap().spec.sample(inv.minimal.grid()).unwrap();
        let from_u1 = xset_exposed(&h, &u1, &ut, 0.5).unwrap();
        assert!(from_min.agrees_up_to_band(&from_u1, 3.0).unwrap());
    }

    #[test]
    fn exposed_points_in_the_plane() {
        let e = catalog::entry("u2").unwrap();
        let h = e.hamiltonian.build().unwrap();
        let ut = e.target().unwrap();
        let inv = Inversion::new(&h, &ut, e.horizon).unwrap();
        let grad = inv.xset_gradient(None).unwrap();
        let u2 = e.spec.sample(inv.minimal.grid()).unwrap();
        let exposed = xset_exposed(&h, &u2, &ut, e.horizon).unwrap();
        assert!(grad.agrees_up_to_band(&exposed, 3.0).unwrap());
        // characteristics into the bump's tip leave a disk of radius T around it
        for m in [&grad, &exposed] {
            assert_eq!(m.contains(&[2.0, 0.0]), Some(false));
            assert_eq!(m.contains(&[2.3, 0.0]), Some(false));
            assert_eq!(m.contains(&[2.7, 0.0]), Some(true));
            assert_eq!(m.contains(&[-2.0, 0.0]), Some(true));
        }
    }

    #[test]
    fn strongly_convex_datum_is_fully_exposed() {
        let h = unit();
        let g = Grid::line(-2.0, 2.0, 201).unwrap();
        let u0 = GridFn::from_fn(g, |x| x[0] * x[0]).unwrap();
        let ut = hopflax::forward(&h, &u0, 0.25).unwrap();
        let m = xset_exposed(&h, &u0, &ut, 0.25).unwrap();
        assert!(m.mask.iter().all(|&b| b));
        let bad = u0.map(|v| v + 1.0).unwrap();
        assert!(matches!(xset_exposed(&h, &bad, &ut, 0.25), Err(Error::NotMember { .. })));
    }

    #[test]
    fn membership_examples() {
        let h = unit();
        let ut = example_target(1001);
        let inv = Inversion::new(&h, &ut, 0.5).unwrap();
        let mask = inv.xset_gradient(None).unwrap();
        assert!(inv.membership_with_mask(&inv.minimal, &mask, true).unwrap().member);
        let u1 = catalog::entry("u1").unwrap().spec.sample(inv.minimal.grid()).unwrap();
        assert!(inv.membership_with_mask(&u1, &mask, true).unwrap().member);
        let bump = |c: f64| inv.minimal.map_with_point(|v, x| v + Bump { center: vec![c], radius: 0.15, height: 0.1 }.eval(x)).unwrap();
        assert!(inv.membership_with_mask(&bump(-1.0), &mask, true).unwrap().member);
        let off = inv.membership_with_mask(&bump(-2.0), &mask, true).unwrap();
        assert!(!off.member);
        assert!(off.forward_residual.unwrap() > inv.tol_reach);
    }

    #[test]
    fn sampled_members() {
        let h = unit();
        let ut = example_target(1001);
        let inv = Inversion::new(&h, &ut, 0.5).unwrap();
        let mask = inv.xset_gradient(None).unwrap();
        let same = sample_member(&inv.minimal, &mask, &[]).unwrap();
        assert_eq!(same.values(), inv.minimal.values());
        let b = Bump { center: vec![-1.0], radius: 0.25, height: 0.2 };
        let m = sample_member(&inv.minimal, &mask, &[b]).unwrap();
        let r = hopflax::forward(&h, &m, 0.5).unwrap().sup_norm_diff_common(&ut).unwrap();
        assert!(r <= inv.tol_reach, "{r}");
        let bad = Bump { center: vec![-2.0], radius: 0.25, height: 0.2 };
        assert!(matches!(sample_member(&inv.minimal, &mask, &[bad]), Err(Error::SupportViolation(_))));
        assert!(mask.free_centers(0.25).iter().all(|&k| {
            let x = mask.grid.point(k)[0];
            (-1.5..=-0.5).contains(&x) || (0.5..=1.5).contains(&x)
        }));
    }

    #[test]
    fn mask_serialization() {
        let h = unit();
        let ut = example_target(201);
        let m = xset_gradient(&h, &ut, 0.5, None).unwrap();
        let csv = m.to_csv().unwrap();
        let back = GridFn::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(back.values().iter().filter(|v| **v == 1.0).count(), m.count());
        let js: serde_json::Value = serde_json::from_str(&m.sidecar_json().unwrap()).unwrap();
        assert_eq!(js["method"], "GradientPushforward");
        assert_eq!(js["pushforward_points"].as_array().unwrap().len(), m.pushforward.len());
    }
}
