//! Real functions sampled on uniform box grids in dimension 1 or 2.
//!
//! Every axis is a window onto an infinite lattice `origin + k·step`, so
//! restricting or enlarging a grid never recomputes node coordinates: two
//! grids on the same lattice agree bit-for-bit at shared nodes.
//!
//! One-dimensional grids are stored as `n × 1` so that loops over two axes
//! cover both cases. Values are row-major with the last axis fastest.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

/// Tolerance used when matching box bounds to lattice nodes.
const NODE_SNAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub origin: f64,
    pub step: f64,
    pub start: i64,
    pub len: usize,
}

impl Axis {
    /// `len` nodes spanning `[lo, hi]`.
    pub fn from_bounds(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::InvalidGrid(format!("empty interval [{lo}, {hi}]")));
        }
        if len < 2 {
            return Err(Error::InvalidGrid(format!("axis needs at least 2 nodes, got {len}")));
        }
        Ok(Axis { origin: lo, step: (hi - lo) / (len - 1) as f64, start: 0, len })
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.lattice_coord(self.start + i as i64)
    }

    #[inline]
    pub fn lattice_coord(&self, k: i64) -> f64 {
        self.origin + k as f64 * self.step
    }

    pub fn lo(&self) -> f64 {
        self.coord(0)
    }

    pub fn hi(&self) -> f64 {
        self.coord(self.len - 1)
    }

    pub fn same_lattice(&self, other: &Axis) -> bool {
        self.origin.to_bits() == other.origin.to_bits() && self.step.to_bits() == other.step.to_bits()
    }

    /// Adds `cells` nodes on each side (negative values shrink).
    pub fn grow(&self, cells: i64) -> Result<Self> {
        let len = self.len as i64 + 2 * cells;
        if len < 2 {
            return Err(Error::BoxTooSmall(format!(
                "shrinking an axis of {} nodes by {} cells per side leaves fewer than 2 nodes",
                self.len, -cells
            )));
        }
        Ok(Axis { start: self.start - cells, len: len as usize, ..*self })
    }

    /// Lattice index of the node closest to `x`.
    pub fn nearest_lattice(&self, x: f64) -> i64 {
        ((x - self.origin) / self.step).round() as i64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "only 1D and 2D grids are supported, got dimension {}",
                axes.len()
            )));
        }
        for a in &axes {
            if !(a.step > 0.0 && a.step.is_finite() && a.origin.is_finite()) || a.len < 2 {
                return Err(Error::InvalidGrid(format!("invalid axis {a:?}")));
            }
        }
        Ok(Grid { axes })
    }

    /// Box `[lo_i, hi_i]` with `res_i` nodes per axis.
    pub fn from_box(bounds: &[(f64, f64)], res: &[usize]) -> Result<Self> {
        if bounds.len() != res.len() {
            return Err(Error::InvalidGrid("bounds and resolution differ in dimension".into()));
        }
        let axes = bounds
            .iter()
            .zip(res)
            .map(|(&(lo, hi), &n)| Axis::from_bounds(lo, hi, n))
            .collect::<Result<Vec<_>>>()?;
        Grid::new(axes)
    }

    pub fn line(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Grid::from_box(&[(lo, hi)], &[n])
    }

    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Grid::from_box(&[(lo, hi), (lo, hi)], &[n, n])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    /// Node counts, with a trailing 1 for 1D grids.
    #[inline]
    pub fn shape(&self) -> [usize; 2] {
        [self.axes[0].len, if self.axes.len() > 1 { self.axes[1].len } else { 1 }]
    }

    pub fn len(&self) -> usize {
        let s = self.shape();
        s[0] * s[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn steps(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.step).collect()
    }

    pub fn max_step(&self) -> f64 {
        self.axes.iter().map(|a| a.step).fold(0.0, f64::max)
    }

    pub fn min_step(&self) -> f64 {
        self.axes.iter().map(|a| a.step).fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub fn flat(&self, i: usize, j: usize) -> usize {
        i * self.shape()[1] + j
    }

    #[inline]
    pub fn multi(&self, flat: usize) -> [usize; 2] {
        let n1 = self.shape()[1];
        [flat / n1, flat % n1]
    }

    /// Physical coordinates of node `flat` (second entry is 0 in 1D).
    #[inline]
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let [i, j] = self.multi(flat);
        let x = self.axes[0].coord(i);
        let y = if self.axes.len() > 1 { self.axes[1].coord(j) } else { 0.0 };
        [x, y]
    }

    pub fn point_vec(&self, flat: usize) -> Vec<f64> {
        let p = self.point(flat);
        p[..self.dim()].to_vec()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.axes.iter().map(|a| (a.lo(), a.hi())).collect()
    }

    pub fn same_lattice(&self, other: &Grid) -> bool {
        self.dim() == other.dim()
            && self.axes.iter().zip(&other.axes).all(|(a, b)| a.same_lattice(b))
    }

    /// Adds `cells[k]` nodes on both sides of axis `k` (negative shrinks).
    pub fn grow(&self, cells: &[i64]) -> Result<Grid> {
        let axes = self
            .axes
            .iter()
            .zip(cells)
            .map(|(a, &c)| a.grow(c))
            .collect::<Result<Vec<_>>>()?;
        Grid::new(axes)
    }

    pub fn grow_uniform(&self, cells: i64) -> Result<Grid> {
        self.grow(&vec![cells; self.dim()])
    }

    /// True when `inner` is a sub-window of `self` on the same lattice.
    pub fn contains_grid(&self, inner: &Grid) -> bool {
        self.same_lattice(inner)
            && self.axes.iter().zip(&inner.axes).all(|(a, b)| {
                b.start >= a.start && b.start + b.len as i64 <= a.start + a.len as i64
            })
    }

    /// Largest same-lattice sub-window whose nodes lie in the closed box `bounds`.
    pub fn sub_box(&self, bounds: &[(f64, f64)]) -> Result<Grid> {
        if bounds.len() != self.dim() {
            return Err(Error::GridMismatch("box dimension differs from grid".into()));
        }
        let mut axes = Vec::new();
        for (a, &(lo, hi)) in self.axes.iter().zip(bounds) {
            let first = ((lo - a.origin) / a.step - NODE_SNAP).ceil() as i64;
            let last = ((hi - a.origin) / a.step + NODE_SNAP).floor() as i64;
            let first = first.max(a.start);
            let last = last.min(a.start + a.len as i64 - 1);
            if last - first + 1 < 2 {
                return Err(Error::BoxTooSmall(format!(
                    "box [{lo}, {hi}] holds fewer than 2 nodes of the grid"
                )));
            }
            axes.push(Axis { start: first, len: (last - first + 1) as usize, ..*a });
        }
        Grid::new(axes)
    }

    /// Intersection of two grids on the same lattice.
    pub fn intersect(&self, other: &Grid) -> Result<Grid> {
        if !self.same_lattice(other) {
            return Err(Error::GridMismatch("grids are on different lattices".into()));
        }
        let mut axes = Vec::new();
        for (a, b) in self.axes.iter().zip(&other.axes) {
            let s = a.start.max(b.start);
            let e = (a.start + a.len as i64).min(b.start + b.len as i64);
            if e - s < 2 {
                return Err(Error::GridMismatch("grids do not overlap".into()));
            }
            axes.push(Axis { start: s, len: (e - s) as usize, ..*a });
        }
        Grid::new(axes)
    }

    /// Offsets (per axis) of `inner`'s first node within `self`.
    fn offsets_of(&self, inner: &Grid) -> Result<[usize; 2]> {
        if !self.contains_grid(inner) {
            return Err(Error::GridMismatch(
                "target grid is not a sub-window of the source grid".into(),
            ));
        }
        let mut off = [0usize; 2];
        for (k, (a, b)) in self.axes.iter().zip(&inner.axes).enumerate() {
            off[k] = (b.start - a.start) as usize;
        }
        Ok(off)
    }

    /// Lattice-index pair of `flat`, used to address nodes across grids.
    #[inline]
    pub fn lattice_index(&self, flat: usize) -> [i64; 2] {
        let [i, j] = self.multi(flat);
        let li = self.axes[0].start + i as i64;
        let lj = if self.axes.len() > 1 { self.axes[1].start + j as i64 } else { 0 };
        [li, lj]
    }

    /// Flat index of lattice node `l`, if it lies inside the grid.
    #[inline]
    pub fn flat_of_lattice(&self, l: [i64; 2]) -> Option<usize> {
        let s = self.shape();
        let i = l[0] - self.axes[0].start;
        let j = if self.axes.len() > 1 { l[1] - self.axes[1].start } else { l[1] };
        if i < 0 || j < 0 || i as usize >= s[0] || j as usize >= s[1] {
            None
        } else {
            Some(i as usize * s[1] + j as usize)
        }
    }

    fn header(&self) -> String {
        let boxes: Vec<String> = self
            .axes
            .iter()
            .map(|a| format!("{}:{}", fmt17(a.lo()), fmt17(a.hi())))
            .collect();
        let res: Vec<String> = self.axes.iter().map(|a| a.len.to_string()).collect();
        format!("# box={} res={}", boxes.join(","), res.join(","))
    }
}

/// Extension rule used when a brute-force evaluation reaches past the box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Extension {
    /// `f(clamped point) + slope · distance-to-box`.
    LinearLipschitz(f64),
    Forbidden,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFn {
    grid: Grid,
    values: Vec<f64>,
    extension: Extension,
}

impl GridFn {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value at node {k}")));
        }
        let mut f = GridFn { grid, values, extension: Extension::Forbidden };
        f.extension = Extension::LinearLipschitz(f.lipschitz_estimate());
        Ok(f)
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let d = grid.dim();
        let values = (0..grid.len())
            .map(|k| {
                let p = grid.point(k);
                f(&p[..d])
            })
            .collect();
        GridFn::new(grid, values)
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        let n = grid.len();
        GridFn::new(grid, vec![c; n])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    /// Replaces the extension rule; a Lipschitz extension may not shrink the Lipschitz bound.
    pub fn with_extension(mut self, ext: Extension) -> Result<Self> {
        if let Extension::LinearLipschitz(s) = ext {
            let lip = self.lipschitz_estimate();
            if !(s >= lip - 1e-12) {
                return Err(Error::InvalidGrid(format!(
                    "extension slope {s} is below the Lipschitz estimate {lip}"
                )));
            }
        }
        self.extension = ext;
        Ok(self)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.flat(i, j)]
    }

    /// Largest `|Δvalue| / h` over axis-adjacent node pairs.
    pub fn lipschitz_estimate(&self) -> f64 {
        let [n0, n1] = self.grid.shape();
        let mut lip: f64 = 0.0;
        let h0 = self.grid.axis(0).step;
        for i in 0..n0.saturating_sub(1) {
            for j in 0..n1 {
                lip = lip.max((self.at(i + 1, j) - self.at(i, j)).abs() / h0);
            }
        }
        if self.dim() > 1 {
            let h1 = self.grid.axis(1).step;
            for i in 0..n0 {
                for j in 0..n1 - 1 {
                    lip = lip.max((self.at(i, j + 1) - self.at(i, j)).abs() / h1);
                }
            }
        }
        lip
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm_diff(&self, other: &GridFn) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Sup-norm difference over the nodes both functions share.
    pub fn sup_norm_diff_common(&self, other: &GridFn) -> Result<f64> {
        let g = self.grid.intersect(&other.grid)?;
        self.restrict(&g)?.sup_norm_diff(&other.restrict(&g)?)
    }

    pub fn check_same_grid(&self, other: &GridFn) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "grids differ: {:?} vs {:?}",
                self.grid.bounds(),
                other.grid.bounds()
            )));
        }
        Ok(())
    }

    /// The same values re-expressed on `reference`'s lattice, for data whose
    /// nodes coincide with it up to rounding (a grid read back from CSV).
    pub fn rebase_onto(&self, reference: &Grid) -> Result<GridFn> {
        if reference.dim() != self.dim() {
            return Err(Error::GridMismatch("dimensions differ".into()));
        }
        let mut axes = Vec::with_capacity(self.dim());
        for (a, r) in self.grid.axes().iter().zip(reference.axes()) {
            let start = r.nearest_lattice(a.lo());
            let rebased = Axis { origin: r.origin, step: r.step, start, len: a.len };
            let off = (a.lo() - rebased.lo()).abs().max((a.hi() - rebased.hi()).abs());
            if off > 1e-9 * r.step {
                return Err(Error::GridMismatch(format!("nodes are {off:.3e} off the reference lattice")));
            }
            axes.push(rebased);
        }
        Ok(GridFn { grid: Grid::new(axes)?, values: self.values.clone(), extension: self.extension })
    }

    /// Copies the values on a same-lattice sub-window.
    pub fn restrict(&self, inner: &Grid) -> Result<GridFn> {
        let off = self.grid.offsets_of(inner)?;
        let [m0, m1] = inner.shape();
        let mut values = Vec::with_capacity(inner.len());
        for i in 0..m0 {
            for j in 0..m1 {
                values.push(self.at(i + off[0], j + off[1]));
            }
        }
        Ok(GridFn { grid: inner.clone(), values, extension: self.extension })
    }

    pub fn restrict_box(&self, bounds: &[(f64, f64)]) -> Result<GridFn> {
        self.restrict(&self.grid.sub_box(bounds)?)
    }

    /// Drops `cells[k]` nodes on each side of axis `k`.
    pub fn shrink(&self, cells: &[usize]) -> Result<GridFn> {
        let c: Vec<i64> = cells.iter().map(|&c| -(c as i64)).collect();
        self.restrict(&self.grid.grow(&c)?)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GridFn> {
        GridFn::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise `f(value, node coordinates)`.
    pub fn map_with_point(&self, f: impl Fn(f64, &[f64]) -> f64) -> Result<GridFn> {
        let d = self.dim();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let p = self.grid.point(k);
                f(v, &p[..d])
            })
            .collect();
        GridFn::new(self.grid.clone(), values)
    }

    pub fn zip_with(&self, other: &GridFn, f: impl Fn(f64, f64) -> f64) -> Result<GridFn> {
        self.check_same_grid(other)?;
        GridFn::new(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn neg(&self) -> GridFn {
        GridFn {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| -v).collect(),
            extension: self.extension,
        }
    }

    pub fn value_at_lattice(&self, l: [i64; 2]) -> Option<f64> {
        self.grid.flat_of_lattice(l).map(|k| self.values[k])
    }

    /// Value at a lattice node, using the extension rule outside the box.
    pub fn extended_value(&self, l: [i64; 2]) -> Result<f64> {
        if let Some(v) = self.value_at_lattice(l) {
            return Ok(v);
        }
        match self.extension {
            Extension::Forbidden => Err(Error::BoxTooSmall(format!(
                "lattice node {l:?} lies outside the box and extension is forbidden"
            ))),
            Extension::LinearLipschitz(slope) => {
                let mut clamped = l;
                let mut dist2 = 0.0;
                for (k, a) in self.grid.axes().iter().enumerate() {
                    let lo = a.start;
                    let hi = a.start + a.len as i64 - 1;
                    let c = l[k].clamp(lo, hi);
                    dist2 += ((l[k] - c) as f64 * a.step).powi(2);
                    clamped[k] = c;
                }
                let base = self.value_at_lattice(clamped).expect("clamped node inside grid");
                Ok(base + slope * dist2.sqrt())
            }
        }
    }

    /// Linear (1D) or bilinear (2D) interpolation at a point inside the box.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let s = self.grid.shape();
        let mut idx = [0usize; 2];
        let mut frac = [0.0f64; 2];
        for (k, a) in self.grid.axes().iter().enumerate() {
            let t = (x[k] - a.lo()) / a.step;
            if t < -NODE_SNAP || t > (a.len - 1) as f64 + NODE_SNAP {
                return None;
            }
            let t = t.clamp(0.0, (a.len - 1) as f64);
            let i = (t.floor() as usize).min(a.len - 2);
            idx[k] = i;
            frac[k] = t - i as f64;
        }
        if self.dim() == 1 {
            let (i, t) = (idx[0], frac[0]);
            return Some(self.at(i, 0) * (1.0 - t) + self.at(i + 1, 0) * t);
        }
        let (i, j) = (idx[0], idx[1]);
        let (t, u) = (frac[0], frac[1]);
        debug_assert!(i + 1 < s[0] && j + 1 < s[1]);
        Some(
            self.at(i, j) * (1.0 - t) * (1.0 - u)
                + self.at(i + 1, j) * t * (1.0 - u)
                + self.at(i, j + 1) * (1.0 - t) * u
                + self.at(i + 1, j + 1) * t * u,
        )
    }

    /// Value at the node nearest to `x` (`None` outside the box).
    pub fn nearest(&self, x: &[f64]) -> Option<f64> {
        let mut l = [0i64; 2];
        for (k, a) in self.grid.axes().iter().enumerate() {
            l[k] = a.nearest_lattice(x[k]);
        }
        self.value_at_lattice(l)
    }

    /// CSV with a one-line `# box=… res=…` header, then `x,value` or `x,y,value`
    /// rows in storage order, every number printed with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 48);
        out.push_str(&self.grid.header());
        out.push('\n');
        for (k, v) in self.values.iter().enumerate() {
            let p = self.grid.point(k);
            if self.dim() == 1 {
                let _ = writeln!(out, "{},{}", fmt17(p[0]), fmt17(*v));
            } else {
                let _ = writeln!(out, "{},{},{}", fmt17(p[0]), fmt17(p[1]), fmt17(*v));
            }
        }
        out
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    pub fn from_csv(reader: impl BufRead) -> Result<GridFn> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty csv".into()))??;
        let grid = parse_header(&header)?;
        let d = grid.dim();
        let mut values = Vec::with_capacity(grid.len());
        for (row, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != d + 1 {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, expected {}",
                    row + 2,
                    fields.len(),
                    d + 1
                )));
            }
            let v: f64 = fields[d]
                .parse()
                .map_err(|_| Error::Parse(format!("bad value {:?} on row {}", fields[d], row + 2)))?;
            let k = values.len();
            if k < grid.len() {
                let p = grid.point(k);
                for (a, field) in fields[..d].iter().enumerate() {
                    let c: f64 = field
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad coordinate {field:?}")))?;
                    if (c - p[a]).abs() > 1e-6 * grid.axis(a).step.max(1.0) {
                        return Err(Error::Parse(format!(
                            "row {} coordinate {c} does not match grid node {}",
                            row + 2,
                            p[a]
                        )));
                    }
                }
            }
            values.push(v);
        }
        GridFn::new(grid, values)
    }
}

fn parse_header(line: &str) -> Result<Grid> {
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("csv header must start with '#'".into()))?;
    let mut bounds = None;
    let mut res = None;
    for tok in body.split_whitespace() {
        if let Some(b) = tok.strip_prefix("box=") {
            bounds = Some(parse_box(b)?);
        } else if let Some(r) = tok.strip_prefix("res=") {
            res = Some(parse_res(r)?);
        }
    }
    match (bounds, res) {
        (Some(b), Some(r)) => Grid::from_box(&b, &r),
        _ => Err(Error::Parse("csv header needs box= and res=".into())),
    }
}

/// Parses `lo:hi[,lo:hi]`.
pub fn parse_box(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad interval {part:?}, expected lo:hi")))?;
            let lo: f64 = lo.trim().parse().map_err(|_| Error::Parse(format!("bad bound {lo:?}")))?;
            let hi: f64 = hi.trim().parse().map_err(|_| Error::Parse(format!("bad bound {hi:?}")))?;
            Ok((lo, hi))
        })
        .collect()
}

/// Parses `N[,N]`.
pub fn parse_res(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad resolution {part:?}")))
        })
        .collect()
}

/// Fixed 17-significant-digit formatting.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_copies_rebase_onto_the_original_lattice() {
        let g = Grid::line(-4.0, 4.0, 1001).unwrap().grow(&[37]).unwrap();
        let f = GridFn::from_fn(g.clone(), |x| x[0].cos()).unwrap();
        let back = GridFn::from_csv(f.to_csv().as_bytes()).unwrap();
        let r = back.rebase_onto(&g).unwrap();
        assert!(r.grid().same_lattice(&g));
        assert_eq!(r.values(), f.values());
        let off = GridFn::from_fn(Grid::line(-3.9971, 4.0, 101).unwrap(), |_| 0.0).unwrap();
        assert!(off.rebase_onto(&g).is_err());
    }

    #[test]
    fn lattice_coordinates_survive_restriction() {
        let g = Grid::line(-4.0, 4.0, 1001).unwrap();
        let f = GridFn::from_fn(g.clone(), |x| x[0].sin()).unwrap();
        let r = f.restrict_box(&[(-2.0, 2.0)]).unwrap();
        assert_eq!(r.grid().axis(0).len, 501);
        for k in 0..r.grid().len() {
            let p = r.grid().point(k);
            assert_eq!(r.values()[k], f.nearest(&p[..1]).unwrap());
            assert_eq!(r.values()[k].to_bits(), p[0].sin().to_bits());
        }
        let big = g.grow_uniform(10).unwrap();
        assert!(big.contains_grid(&g));
        assert_eq!(big.point(10), g.point(0));
    }

    #[test]
    fn sup_norm_and_lipschitz() {
        let g = Grid::line(-4.0, 4.0, 801).unwrap();
        let f = GridFn::from_fn(g.clone(), |x| (x[0] + 1.0).abs() - 1.0).unwrap();
        let f2 = f.map(|v| v + 0.25).unwrap();
        assert!((f.sup_norm_diff(&f2).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(f.sup_norm_diff(&f).unwrap(), 0.0);
        assert!((f.lipschitz_estimate() - 1.0).abs() < 1e-9);
        assert_eq!(GridFn::constant(g, 3.0).unwrap().lipschitz_estimate(), 0.0);
    }

    #[test]
    fn mismatch_is_reported() {
        let a = GridFn::constant(Grid::line(0.0, 1.0, 11).unwrap(), 0.0).unwrap();
        let b = GridFn::constant(Grid::line(0.0, 1.0, 12).unwrap(), 0.0).unwrap();
        assert!(matches!(a.sup_norm_diff(&b), Err(Error::GridMismatch(_))));
        assert!(a.restrict(b.grid()).is_err());
    }

    #[test]
    fn csv_round_trip_2d() {
        let g = Grid::from_box(&[(-1.0, 1.0), (0.0, 2.0)], &[5, 3]).unwrap();
        let f = GridFn::from_fn(g, |x| x[0] * 0.1 + x[1] / 3.0).unwrap();
        let csv = f.to_csv();
        assert!(csv.starts_with("# box="));
        let back = GridFn::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.grid().shape(), [5, 3]);
    }

    #[test]
    fn extension_rule() {
        let g = Grid::line(0.0, 1.0, 11).unwrap();
        let f = GridFn::from_fn(g, |x| x[0]).unwrap();
        assert!(matches!(f.extension(), Extension::LinearLipschitz(s) if (s - 1.0).abs() < 1e-12));
        let v = f.extended_value([13, 0]).unwrap();
        assert!((v - 1.3).abs() < 1e-12);
        assert!(f.clone().with_extension(Extension::LinearLipschitz(0.5)).is_err());
        let f = f.with_extension(Extension::Forbidden).unwrap();
        assert!(f.extended_value([-1, 0]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let g = Grid::line(0.0, 1.0, 3).unwrap();
        assert!(GridFn::new(g, vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(Grid::line(0.0, 1.0, 1).is_err());
        assert!(Grid::line(1.0, 0.0, 5).is_err());
    }
}
