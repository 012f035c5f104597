//! Vanishing-viscosity cross-check: explicit finite differences for
//! `u_t - ε Δu + H(∇u) = 0` with a local Lax-Friedrichs flux.

use crate::error::{Error, Result};
use crate::grid::GridFn;
use crate::hamiltonian::Hamiltonian;
use crate::hopflax;
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Fraction of the monotonicity limit used when no step is requested.
const CFL_SAFETY: f64 = 0.9;

#[derive(Clone, Debug)]
pub struct ParabolicOptions {
    pub epsilon: f64,
    /// Requested time step; the largest stable one when `None`.
    pub dt: Option<f64>,
    /// Times at which to keep a copy of the solution.
    pub slice_times: Vec<f64>,
    /// Slope bound for the flux speeds; raised to the data's Lipschitz estimate if smaller.
    pub slope_bound: Option<f64>,
}

impl Default for ParabolicOptions {
    fn default() -> Self {
        ParabolicOptions { epsilon: DEFAULT_EPSILON, dt: None, slice_times: vec![], slope_bound: None }
    }
}

impl ParabolicOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        ParabolicOptions { epsilon, ..Default::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ParabolicRun {
    pub epsilon: f64,
    pub dt: f64,
    pub steps: usize,
    /// `dt · Σ_i (2ε/h_i² + α_i/h_i)`; the scheme is monotone while this is at most 1.
    pub cfl_report: f64,
    #[serde(skip)]
    pub slices: Vec<(f64, GridFn)>,
}

/// Largest admissible step `0.9 · min_i h_i² / (n (2ε + h_i α))` with `α` the largest axis speed.
pub fn stability_bound(steps: &[f64], speeds: &[f64], epsilon: f64) -> f64 {
    let n = steps.len() as f64;
    let alpha = speeds.iter().cloned().fold(0.0, f64::max);
    steps
        .iter()
        .map(|&h| CFL_SAFETY * h * h / (n * (2.0 * epsilon + h * alpha)))
        .fold(f64::INFINITY, f64::min)
}

pub fn parabolic_forward(h: &Hamiltonian, u0: &GridFn, t: f64, epsilon: f64) -> Result<GridFn> {
    Ok(parabolic_forward_with(h, u0, t, &ParabolicOptions::with_epsilon(epsilon))?.0)
}

pub fn parabolic_backward(h: &Hamiltonian, ut: &GridFn, t: f64, epsilon: f64) -> Result<GridFn> {
    Ok(parabolic_backward_with(h, ut, t, &ParabolicOptions::with_epsilon(epsilon))?.0)
}

/// Backward regularisation `w_s = εΔw + H(∇w)` through `w = -v`, where `v`
/// solves the forward problem for the reflected Hamiltonian from `-uT`.
pub fn parabolic_backward_with(
    h: &Hamiltonian,
    ut: &GridFn,
    t: f64,
    opts: &ParabolicOptions,
) -> Result<(GridFn, ParabolicRun)> {
    let (v, mut run) = parabolic_forward_with(&h.reflected(), &ut.neg(), t, opts)?;
    for s in &mut run.slices {
        s.1 = s.1.neg();
    }
    Ok((v.neg(), run))
}

/// Integrates to time `t` and returns the solution on the grid where
/// [`hopflax::forward`] is defined, so the two can be compared node by node.
pub fn parabolic_forward_with(
    h: &Hamiltonian,
    u0: &GridFn,
    t: f64,
    opts: &ParabolicOptions,
) -> Result<(GridFn, ParabolicRun)> {
    if !(opts.epsilon > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "viscosity and horizon must be positive, got ε = {} and T = {t}",
            opts.epsilon
        )));
    }
    if h.dim() != u0.dim() {
        return Err(Error::GridMismatch("hamiltonian and grid dimensions differ".into()));
    }
    let grid = u0.grid().clone();
    let out_grid = hopflax::output_grid(h, u0, t)?;
    let lip = u0.lipschitz_estimate().max(opts.slope_bound.unwrap_or(0.0));
    let steps_h = grid.steps();
    let alpha = h.axis_speeds(lip)?;
    let eps = opts.epsilon;
    let bound = stability_bound(&steps_h, &alpha, eps);
    let dt_target = match opts.dt {
        Some(dt) if dt > bound || !(dt > 0.0) => return Err(Error::CflViolation { dt, bound }),
        Some(dt) => dt,
        None => bound,
    };
    let nsteps = (t / dt_target).ceil().max(1.0) as usize;
    let dt = t / nsteps as f64;
    let cfl: f64 = dt * steps_h.iter().zip(&alpha).map(|(h, a)| 2.0 * eps / (h * h) + a / h).sum::<f64>();

    let dim = grid.dim();
    let [n0, n1] = grid.shape();
    let quad = h.as_quadratic().map(|a| a.rows());
    let ham = |p: [f64; 2]| -> Result<f64> {
        match &quad {
            Some(a) if dim == 1 => Ok(0.5 * a[0][0] * p[0] * p[0]),
            Some(a) => Ok(0.5 * (a[0][0] * p[0] * p[0] + 2.0 * a[0][1] * p[0] * p[1] + a[1][1] * p[1] * p[1])),
            None => h.value(&p[..1]),
        }
    };
    // ghost nodes continue the boundary slope, clamped to the data's Lipschitz bound
    let ghost = |inner: f64, edge: f64, step: f64| edge + (edge - inner).clamp(-lip * step, lip * step);

    let mut cur = u0.values().to_vec();
    let mut next = vec![0.0; cur.len()];
    let mut slices = vec![];
    let mut pending: Vec<f64> = opts.slice_times.iter().cloned().filter(|s| *s >= 0.0 && *s <= t).collect();
    pending.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut pending = pending.into_iter().peekable();
    while let Some(&s) = pending.peek() {
        if s > 0.0 {
            break;
        }
        slices.push((0.0, u0.clone()));
        pending.next();
    }

    for step in 1..=nsteps {
        let c = &cur;
        let row = |i: usize, out: &mut [f64]| -> Result<()> {
            for (j, o) in out.iter_mut().enumerate() {
                let k = i * n1 + j;
                let u = c[k];
                let mut p = [0.0; 2];
                let mut visc = 0.0;
                let mut lf = 0.0;
                for a in 0..dim {
                    let hh = steps_h[a];
                    let (len, idx, stride) = if a == 0 { (n0, i, n1) } else { (n1, j, 1) };
                    let minus = if idx > 0 { c[k - stride] } else { ghost(c[k + stride], u, hh) };
                    let plus = if idx + 1 < len { c[k + stride] } else { ghost(c[k - stride], u, hh) };
                    let pm = (u - minus) / hh;
                    let pp = (plus - u) / hh;
                    p[a] = 0.5 * (pm + pp);
                    visc += (pp - pm) / hh;
                    lf += alpha[a] * (pp - pm) * 0.5;
                }
                *o = u + dt * (eps * visc - (ham(p)? - lf));
            }
            Ok(())
        };
        next.par_chunks_mut(n1).enumerate().try_for_each(|(i, out)| row(i, out))?;
        std::mem::swap(&mut cur, &mut next);
        let now = step as f64 * dt;
        while let Some(&s) = pending.peek() {
            if s > now + 0.5 * dt {
                break;
            }
            slices.push((now, GridFn::new(grid.clone(), cur.clone())?));
            pending.next();
        }
    }
    let full = GridFn::new(grid, cur)?;
    let out = full.restrict(&out_grid)?;
    Ok((out, ParabolicRun { epsilon: eps, dt, steps: nsteps, cfl_report: cfl, slices }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn unit() -> Hamiltonian {
        Hamiltonian::isotropic(1)
    }

    #[test]
    fn affine_profiles_translate() {
        let h = unit();
        let u0 = GridFn::from_fn(Grid::line(-3.0, 3.0, 601).unwrap(), |x| 0.5 * x[0] + 1.0).unwrap();
        let f = parabolic_forward(&h, &u0, 1.0, 1e-3).unwrap();
        let b = parabolic_backward(&h, &u0, 1.0, 1e-3).unwrap();
        for k in 0..f.grid().len() {
            let x = f.grid().point(k)[0];
            assert!((f.values()[k] - (0.5 * x + 1.0 - 0.125)).abs() < 0.01);
        }
        for k in 0..b.grid().len() {
            let x = b.grid().point(k)[0];
            assert!((b.values()[k] - (0.5 * x + 1.0 + 0.125)).abs() < 0.01);
        }
    }

    #[test]
    fn abs_value_matches_hopf_lax() {
        let h = unit();
        let g = Grid::line(-4.0, 4.0, 801).unwrap();
        let u0 = GridFn::from_fn(g.clone(), |x| x[0].abs()).unwrap();
        let visc = parabolic_forward(&h, &u0, 1.0, 1e-3).unwrap();
        let hl = hopflax::forward(&h, &u0, 1.0).unwrap();
        assert!(visc.sup_norm_diff(&hl).unwrap() < 0.05);
        let ut = u0.neg();
        let visc = parabolic_backward(&h, &ut, 1.0, 1e-3).unwrap();
        let hl = hopflax::backward(&h, &ut, 1.0).unwrap();
        assert!(visc.sup_norm_diff(&hl).unwrap() < 0.05);
    }

    #[test]
    fn requested_step_is_checked() {
        let h = unit();
        let u0 = GridFn::from_fn(Grid::line(-2.0, 2.0, 201).unwrap(), |x| x[0].abs()).unwrap();
        let bound = stability_bound(&u0.grid().steps(), &h.axis_speeds(1.0).unwrap(), 1e-3);
        let opts = ParabolicOptions { dt: Some(2.0 * bound), ..Default::default() };
        assert!(matches!(parabolic_forward_with(&h, &u0, 0.5, &opts), Err(Error::CflViolation { .. })));
        let opts = ParabolicOptions { dt: Some(0.5 * bound), slice_times: vec![0.0, 0.25, 0.5], ..Default::default() };
        let (_, run) = parabolic_forward_with(&h, &u0, 0.5, &opts).unwrap();
        assert!(run.cfl_report <= 1.0);
        assert_eq!(run.slices.len(), 3);
        assert!((run.slices[1].0 - 0.25).abs() <= run.dt);
    }

    #[test]
    fn stays_below_initial_maximum() {
        let h = unit();
        let u0 = GridFn::from_fn(Grid::line(-4.0, 4.0, 401).unwrap(), |x| (1.0 - (x[0] - 1.0).abs()).max(0.0)).unwrap();
        let out = parabolic_forward(&h, &u0, 0.5, 1e-2).unwrap();
        assert!(out.max() <= u0.max() + 1e-12);
    }

    #[test]
    fn plane_with_skew_hamiltonian() {
        let h = Hamiltonian::quadratic(&[vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let g = Grid::square(-3.0, 3.0, 81).unwrap();
        let u0 = GridFn::from_fn(g, |x| -(x[0] * x[0] + x[1] * x[1]).sqrt()).unwrap();
        let visc = parabolic_forward(&h, &u0, 0.5, 1e-3).unwrap();
        let hl = hopflax::forward(&h, &u0, 0.5).unwrap();
        assert!(visc.sup_norm_diff(&hl).unwrap() < 0.1);
    }
}
