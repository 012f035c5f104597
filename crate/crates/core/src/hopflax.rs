//! Forward and backward Hopf-Lax operators on grids.
//!
//! The forward operator is the inf-convolution
//! `min_y u0(y) + T·L((x - y)/T)` over lattice nodes `y`. Minimizers of a
//! Lipschitz datum lie in a bounded window around `x`, so each output node
//! only scans that window; outputs are produced on the input grid shrunk by
//! the window extent, where the result is independent of how the datum
//! would continue past its box.

use crate::error::{Error, Result};
use crate::grid::{Extension, Grid, GridFn};
use crate::hamiltonian::Hamiltonian;
use crate::lower_envelope::{parabola_min, Scratch};
use log::warn;
use rayon::prelude::*;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Path {
    /// Separable sweep when the Hamiltonian is diagonal quadratic, brute force otherwise.
    Auto,
    BruteForce,
    Separable,
}

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub path: Path,
    /// Near-optimal minimizers within `tie_factor · h · (1 + Lip)` are recorded as ties.
    pub tie_factor: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options { path: Path::Auto, tie_factor: 1.0 }
    }
}

/// `T · max{|H_p(p)| : |p| <= Lip(f)}`.
pub fn dependence_margin(h: &Hamiltonian, f: &GridFn, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(t * h.max_speed(f.lipschitz_estimate())?)
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidSpec(format!("time horizon must be positive, got {t}")));
    }
    Ok(())
}

/// Lattice offsets `x - y` (in cells) that can hold a minimizer, with the
/// kernel value `T·L` at each.
struct Window {
    offsets: Vec<[i64; 2]>,
    kernel: Vec<f64>,
    cells: [usize; 2],
}

fn window(h: &Hamiltonian, grid: &Grid, lip: f64, t: f64) -> Result<Window> {
    check_time(t)?;
    if h.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "hamiltonian of dimension {} on a {}D grid",
            h.dim(),
            grid.dim()
        )));
    }
    let steps = grid.steps();
    match h {
        Hamiltonian::Quadratic(a) => {
            let n = a.dim();
            // an optimal offset e has |(A^{-1} e)_k| <= T·Lip + h_k·(A^{-1})_kk / 2
            let bound: Vec<f64> = (0..n).map(|k| t * lip + 0.5 * steps[k] * a.inv(k, k)).collect();
            let mut cells = [0usize; 2];
            for k in 0..n {
                let extent: f64 = (0..n).map(|j| a.get(k, j).abs() * bound[j]).sum();
                cells[k] = (extent / steps[k] - 1e-9).ceil().max(0.0) as usize;
            }
            let mut offsets = Vec::new();
            let mut kernel = Vec::new();
            let c0 = cells[0] as i64;
            let c1 = cells[1] as i64;
            for di in -c0..=c0 {
                for dj in -c1..=c1 {
                    let e: Vec<f64> = if n == 1 {
                        vec![di as f64 * steps[0]]
                    } else {
                        vec![di as f64 * steps[0], dj as f64 * steps[1]]
                    };
                    let w = a.apply_inverse(&e);
                    if w.iter().zip(&bound).all(|(wk, bk)| wk.abs() <= bk * (1.0 + 1e-12) + 1e-15) {
                        offsets.push([di, dj]);
                        kernel.push(0.5 * a.inverse_form(&e) / t);
                    }
                }
            }
            Ok(Window { offsets, kernel, cells })
        }
        Hamiltonian::Scalar1D(s) => {
            let hstep = steps[0];
            let lo = (t * s.hp(-lip)? / hstep).ceil() as i64 - 1;
            let hi = (t * s.hp(lip)? / hstep).floor() as i64 + 1;
            let mut offsets = Vec::new();
            let mut kernel = Vec::new();
            for d in lo..=hi {
                let q = d as f64 * hstep / t;
                let l = s.legendre(q).map_err(|e| match e {
                    Error::DomainExceeded { lo: vlo, hi: vhi, .. } => Error::DomainExceeded {
                        value: q,
                        lo: vlo,
                        hi: vhi,
                    },
                    other => other,
                })?;
                offsets.push([d, 0]);
                kernel.push(t * l);
            }
            let cells = [lo.unsigned_abs().max(hi.unsigned_abs()) as usize, 0];
            Ok(Window { offsets, kernel, cells })
        }
    }
}

/// Per-axis number of cells a forward pass removes from each side of a grid
/// carrying data with Lipschitz constant `lip`.
pub fn shrink_cells(h: &Hamiltonian, grid: &Grid, lip: f64, t: f64) -> Result<Vec<usize>> {
    let w = window(h, grid, lip, t)?;
    Ok(w.cells[..grid.dim()].to_vec())
}

/// Grid on which [`forward`] returns values for `u0`.
pub fn output_grid(h: &Hamiltonian, u0: &GridFn, t: f64) -> Result<Grid> {
    let cells = shrink_cells(h, u0.grid(), u0.lipschitz_estimate(), t)?;
    shrunk(u0.grid(), &cells)
}

fn shrunk(g: &Grid, cells: &[usize]) -> Result<Grid> {
    let c: Vec<i64> = cells.iter().map(|&c| -(c as i64)).collect();
    g.grow(&c).map_err(|_| {
        Error::BoxTooSmall(format!(
            "the dependence window needs {cells:?} cells per side but the grid has shape {:?}",
            &g.shape()[..g.dim()]
        ))
    })
}

fn is_diagonal(h: &Hamiltonian) -> bool {
    h.as_quadratic().map(|a| a.is_diagonal()).unwrap_or(false)
}

/// Near-optimal minimizers for each output node.
#[derive(Clone, Debug)]
pub struct ArgminMap {
    /// Output grid the lists are indexed by.
    pub grid: Grid,
    /// Input grid the listed flat indices refer to.
    pub source: Grid,
    pub tie_tol: f64,
    /// Exact minimizer (smallest flat index on exact ties).
    pub best: Vec<usize>,
    /// All minimizers within `tie_tol` of the optimum, sorted. Only offsets in
    /// the dependence window are scanned, so a cluster touching the window
    /// edge is cut there.
    pub lists: Vec<Vec<usize>>,
}

impl ArgminMap {
    /// Groups node `k`'s list into lattice-connected clusters (8-neighbourhood in 2D).
    pub fn clusters(&self, k: usize) -> Vec<Vec<usize>> {
        let list = &self.lists[k];
        let mut parent: Vec<usize> = (0..list.len()).collect();
        fn root(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let pos: BTreeMap<[i64; 2], usize> =
            list.iter().enumerate().map(|(i, &f)| (self.source.lattice_index(f), i)).collect();
        for (i, &f) in list.iter().enumerate() {
            let l = self.source.lattice_index(f);
            for (dx, dy) in [(1, 0), (0, 1), (1, 1), (1, -1)] {
                if let Some(&j) = pos.get(&[l[0] + dx, l[1] + dy]) {
                    let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..list.len() {
            let r = root(&mut parent, i);
            groups.entry(r).or_default().push(list[i]);
        }
        groups.into_values().collect()
    }

    /// Coordinates of the exact minimizer for output node `k`.
    pub fn best_point(&self, k: usize) -> Vec<f64> {
        self.source.point_vec(self.best[k])
    }
}

/// Forward operator with default options.
pub fn forward(h: &Hamiltonian, u0: &GridFn, t: f64) -> Result<GridFn> {
    forward_with(h, u0, t, &Options::default())
}

pub fn forward_with(h: &Hamiltonian, u0: &GridFn, t: f64, opts: &Options) -> Result<GridFn> {
    let out = output_grid(h, u0, t)?;
    forward_on(h, u0, t, &out, opts)
}

/// Forward operator evaluated on an arbitrary grid on the input's lattice.
///
/// Output nodes whose window reaches past the input box read the input's
/// extension rule (a warning is logged); with `Extension::Forbidden` this is
/// a `BoxTooSmall` error.
pub fn forward_on(h: &Hamiltonian, u0: &GridFn, t: f64, out: &Grid, opts: &Options) -> Result<GridFn> {
    if !u0.grid().same_lattice(out) {
        return Err(Error::GridMismatch("output grid is not on the input lattice".into()));
    }
    let lip = u0.lipschitz_estimate();
    let cells = shrink_cells(h, u0.grid(), lip, t)?;
    let safe = u0.grid().grow(&cells.iter().map(|&c| -(c as i64)).collect::<Vec<_>>()).ok();
    let inside = safe.as_ref().map(|g| g.contains_grid(out)).unwrap_or(false);
    let use_sep = match opts.path {
        Path::BruteForce => false,
        Path::Separable => {
            if !is_diagonal(h) {
                return Err(Error::UnsupportedCase(
                    "the separable path needs a diagonal quadratic hamiltonian".into(),
                ));
            }
            if !inside {
                return Err(Error::BoxTooSmall(
                    "the separable path needs the output inside the dependence-safe region".into(),
                ));
            }
            true
        }
        Path::Auto => is_diagonal(h) && inside,
    };
    if use_sep {
        return separable(h, u0, t, out);
    }
    let (values, _) = brute(h, u0, t, out, inside, None)?;
    GridFn::new(out.clone(), values)
}

/// Brute-force forward pass that also records near-optimal minimizers.
pub fn forward_with_argmin(
    h: &Hamiltonian,
    u0: &GridFn,
    t: f64,
    opts: &Options,
) -> Result<(GridFn, ArgminMap)> {
    let out = output_grid(h, u0, t)?;
    let lip = u0.lipschitz_estimate();
    let tie = opts.tie_factor * u0.grid().max_step() * (1.0 + lip);
    let (values, lists) = brute(h, u0, t, &out, true, Some(tie))?;
    let (best, lists): (Vec<usize>, Vec<Vec<usize>>) = lists.expect("argmin requested").into_iter().unzip();
    let f = GridFn::new(out.clone(), values)?;
    Ok((f, ArgminMap { grid: out, source: u0.grid().clone(), tie_tol: tie, best, lists }))
}

type Lists = Vec<(usize, Vec<usize>)>;

fn brute(
    h: &Hamiltonian,
    u0: &GridFn,
    t: f64,
    out: &Grid,
    inside: bool,
    tie: Option<f64>,
) -> Result<(Vec<f64>, Option<Lists>)> {
    let lip_data = u0.lipschitz_estimate();
    let lip = if inside {
        lip_data
    } else {
        match u0.extension() {
            Extension::LinearLipschitz(s) => {
                warn!("forward pass reads the Lipschitz extension outside the input box");
                s.max(lip_data)
            }
            Extension::Forbidden => {
                return Err(Error::BoxTooSmall(
                    "output grid needs input values outside the box and extension is forbidden".into(),
                ))
            }
        }
    };
    let win = window(h, u0.grid(), lip, t)?;
    let src = u0.grid();
    let n1 = src.shape()[1] as i64;
    let deltas: Vec<i64> = win.offsets.iter().map(|o| o[0] * n1 + o[1]).collect();
    let vals = u0.values();

    let eval = |k: usize| -> Result<(f64, Option<(usize, Vec<usize>)>)> {
        let l = out.lattice_index(k);
        if inside {
            let base = src.flat_of_lattice(l).expect("output node inside input") as i64;
            let mut best = f64::INFINITY;
            let mut arg = 0usize;
            for (d, kv) in deltas.iter().zip(&win.kernel) {
                let y = (base - d) as usize;
                let v = vals[y] + kv;
                if v < best || (v == best && y < arg) {
                    best = v;
                    arg = y;
                }
            }
            let list = tie.map(|tol| {
                let mut ys: Vec<usize> = deltas
                    .iter()
                    .zip(&win.kernel)
                    .filter_map(|(d, kv)| {
                        let y = (base - d) as usize;
                        (vals[y] + kv <= best + tol).then_some(y)
                    })
                    .collect();
                ys.sort_unstable();
                (arg, ys)
            });
            Ok((best, list))
        } else {
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            let mut cand = Vec::new();
            for (o, kv) in win.offsets.iter().zip(&win.kernel) {
                let y = [l[0] - o[0], l[1] - o[1]];
                let v = u0.extended_value(y)? + kv;
                let fy = src.flat_of_lattice(y);
                if v < best {
                    best = v;
                    arg = fy.unwrap_or(usize::MAX);
                }
                if tie.is_some() {
                    cand.push((v, fy));
                }
            }
            let list = tie.map(|tol| {
                let mut ys: Vec<usize> =
                    cand.iter().filter(|(v, _)| *v <= best + tol).filter_map(|(_, f)| *f).collect();
                ys.sort_unstable();
                (arg, ys)
            });
            Ok((best, list))
        }
    };

    let results: Vec<(f64, Option<(usize, Vec<usize>)>)> =
        (0..out.len()).into_par_iter().with_min_len(64).map(eval).collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(results.len());
    let mut lists = tie.map(|_| Vec::with_capacity(results.len()));
    for (v, l) in results {
        values.push(v);
        if let (Some(ls), Some(l)) = (lists.as_mut(), l) {
            ls.push(l);
        }
    }
    Ok((values, lists))
}

/// Axis-by-axis lower envelope of parabolas over the whole input grid, then
/// restricted to `out`.
fn separable(h: &Hamiltonian, u0: &GridFn, t: f64, out: &Grid) -> Result<GridFn> {
    let a = h.as_quadratic().ok_or(Error::NotQuadratic)?;
    let g = u0.grid();
    let [n0, n1] = g.shape();
    let mut v = u0.values().to_vec();
    let c0 = g.axis(0).step.powi(2) / (2.0 * t * a.get(0, 0));
    let cols: Vec<Vec<f64>> = (0..n1)
        .into_par_iter()
        .map_init(Scratch::default, |s, j| {
            let f: Vec<f64> = (0..n0).map(|i| v[i * n1 + j]).collect();
            let mut o = vec![0.0; n0];
            parabola_min(&f, c0, &mut o, s);
            o
        })
        .collect();
    for (j, col) in cols.into_iter().enumerate() {
        for (i, x) in col.into_iter().enumerate() {
            v[i * n1 + j] = x;
        }
    }
    if g.dim() == 2 {
        let c1 = g.axis(1).step.powi(2) / (2.0 * t * a.get(1, 1));
        v.par_chunks_mut(n1).for_each_init(Scratch::default, |s, row| {
            let f = row.to_vec();
            parabola_min(&f, c1, row, s);
        });
    }
    GridFn::new(g.clone(), v)?.restrict(out)
}

/// Backward operator `max_y uT(y) - T·L((y - x)/T)`, computed as `-forward(H_r, -uT)`.
pub fn backward(h: &Hamiltonian, ut: &GridFn, t: f64) -> Result<GridFn> {
    backward_with(h, ut, t, &Options::default())
}

pub fn backward_with(h: &Hamiltonian, ut: &GridFn, t: f64, opts: &Options) -> Result<GridFn> {
    Ok(forward_with(&h.reflected(), &ut.neg(), t, opts)?.neg())
}

pub fn backward_on(h: &Hamiltonian, ut: &GridFn, t: f64, out: &Grid, opts: &Options) -> Result<GridFn> {
    Ok(forward_on(&h.reflected(), &ut.neg(), t, out, opts)?.neg())
}

/// Projection onto reachable targets: `forward(backward(uT))`.
pub fn compose_project(h: &Hamiltonian, ut: &GridFn, t: f64) -> Result<GridFn> {
    compose_project_with(h, ut, t, &Options::default())
}

pub fn compose_project_with(h: &Hamiltonian, ut: &GridFn, t: f64, opts: &Options) -> Result<GridFn> {
    let back = backward_with(h, ut, t, opts)?;
    forward_with(h, &back, t, opts)
}

/// Cells per side that a forward-backward round trip removes from a grid
/// carrying data with Lipschitz constant `lip`.
pub fn round_trip_cells(h: &Hamiltonian, grid: &Grid, lip: f64, t: f64) -> Result<Vec<usize>> {
    let a = shrink_cells(h, grid, lip, t)?;
    let b = shrink_cells(&h.reflected(), grid, lip, t)?;
    Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect())
}
