#![allow(dead_code)]

use hj_inverse::{Grid, GridFn};
use rand::Rng;

/// Continuous piecewise-linear function with knots every `spacing` from `lo`,
/// the given slopes on consecutive pieces, and constant extension outside.
pub fn piecewise_linear(lo: f64, spacing: f64, y0: f64, slopes: &[f64]) -> impl Fn(f64) -> f64 + Clone {
    let slopes = slopes.to_vec();
    let mut ys = vec![y0];
    for s in &slopes {
        ys.push(ys.last().unwrap() + s * spacing);
    }
    move |x: f64| {
        let u = ((x - lo) / spacing).clamp(0.0, slopes.len() as f64);
        let k = (u.floor() as usize).min(slopes.len() - 1);
        ys[k] + slopes[k] * (u - k as f64) * spacing
    }
}

pub fn sample(grid: &Grid, f: impl Fn(f64) -> f64) -> GridFn {
    GridFn::from_fn(grid.clone(), |x| f(x[0])).unwrap()
}

pub fn random_slopes(rng: &mut impl Rng, n: usize, lip: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-lip..lip)).collect()
}

pub fn line() -> Grid {
    Grid::line(-6.0, 6.0, 601).unwrap()
}

pub fn tol(f: &GridFn) -> f64 {
    5.0 * f.grid().max_step() * (1.0 + f.lipschitz_estimate())
}

/// `max(b - a)` over the nodes both grids share.
pub fn max_excess(a: &GridFn, b: &GridFn) -> f64 {
    let common = a.grid().intersect(b.grid()).unwrap();
    let a = a.restrict(&common).unwrap();
    let b = b.restrict(&common).unwrap();
    a.values().iter().zip(b.values()).map(|(x, y)| y - x).fold(f64::NEG_INFINITY, f64::max)
}
