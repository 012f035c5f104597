//! Convex Hamiltonians `H(p)` and their Legendre transforms `L = H*`.
//!
//! Two kinds are supported: quadratic forms `H(p) = <A p, p>/2` with `A`
//! symmetric positive definite (any dimension), and strictly convex scalar
//! Hamiltonians in one space dimension given by evaluators for `H`, `H_p` and
//! `H_pp` over a declared slope window. Scalar Hamiltonians are never
//! evaluated outside that window.

pub mod expr;

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

pub use expr::Expr;

pub const TOL_SPD: f64 = 1e-10;
pub const TOL_SYM: f64 = 1e-10;
pub const TOL_INV: f64 = 1e-9;
pub const TOL_NEWTON: f64 = 1e-12;

/// Number of probe points used to certify convexity of a scalar Hamiltonian.
const CONVEXITY_PROBES: usize = 2001;

/// Symmetric positive definite matrix with cached inverse and extreme eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix {
    n: usize,
    entries: Vec<f64>,
    inverse: Vec<f64>,
    lambda_min: f64,
    lambda_max: f64,
}

impl SpdMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidHamiltonian(
                "matrix must be square and non-empty".into(),
            ));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidHamiltonian("matrix entries must be finite".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if (rows[i][j] - rows[j][i]).abs() > TOL_SYM {
                    return Err(Error::InvalidHamiltonian(format!(
                        "matrix is not symmetric: a[{i}][{j}] = {} vs a[{j}][{i}] = {}",
                        rows[i][j], rows[j][i]
                    )));
                }
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (rows[i][j] + rows[j][i]));
        let eig = m.clone().symmetric_eigen();
        let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let lambda_max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lambda_min <= TOL_SPD {
            return Err(Error::InvalidHamiltonian(format!(
                "matrix is not positive definite (smallest eigenvalue {lambda_min})"
            )));
        }
        let inv = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidHamiltonian("cholesky factorization failed".into()))?
            .inverse();
        let residual = (&m * &inv - DMatrix::<f64>::identity(n, n)).abs().max();
        if residual > TOL_INV {
            return Err(Error::InvalidHamiltonian(format!(
                "matrix inverse is inaccurate (residual {residual:.3e})"
            )));
        }
        Ok(SpdMatrix {
            n,
            entries: m.transpose().iter().cloned().collect(),
            inverse: inv.transpose().iter().cloned().collect(),
            lambda_min,
            lambda_max,
        })
    }

    pub fn scalar(a: f64) -> Result<Self> {
        Self::new(&[vec![a]])
    }

    pub fn identity(n: usize) -> Self {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(&rows).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn inv(&self, i: usize, j: usize) -> f64 {
        self.inverse[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn inverse_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.inv(i, j)).collect())
            .collect()
    }

    /// Smallest eigenvalue `λ_1(A)`.
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Largest eigenvalue `λ_n(A)`.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j) == 0.0))
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.inv(i, j) * v[j]).sum())
            .collect()
    }

    /// `<A v, v>`.
    pub fn form(&self, v: &[f64]) -> f64 {
        dot(&self.apply(v), v)
    }

    /// `<A^{-1} v, v>`.
    pub fn inverse_form(&self, v: &[f64]) -> f64 {
        dot(&self.apply_inverse(v), v)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Strictly convex Hamiltonian of one variable, restricted to a slope window.
#[derive(Clone)]
pub struct Scalar1D {
    h: ScalarFn,
    hp: ScalarFn,
    hpp: ScalarFn,
    lo: f64,
    hi: f64,
    label: String,
    /// When set, every evaluator is composed with `p -> -p`.
    reflected: bool,
}

impl fmt::Debug for Scalar1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scalar1D")
            .field("label", &self.label)
            .field("slope_range", &(self.lo, self.hi))
            .field("reflected", &self.reflected)
            .finish()
    }
}

impl Scalar1D {
    /// Builds a scalar Hamiltonian from evaluators and validates strict convexity
    /// on a probe grid of the slope window `[lo, hi]`.
    pub fn new<F, G, K>(h: F, hp: G, hpp: K, lo: f64, hi: f64, label: impl Into<String>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        K: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidHamiltonian(format!(
                "slope range [{lo}, {hi}] is empty or not finite"
            )));
        }
        let s = Scalar1D {
            h: Arc::new(h),
            hp: Arc::new(hp),
            hpp: Arc::new(hpp),
            lo,
            hi,
            label: label.into(),
            reflected: false,
        };
        s.validate()?;
        Ok(s)
    }

    /// Parses `expr` (a polynomial-style expression in `p`) and differentiates it symbolically.
    pub fn from_expr(src: &str, lo: f64, hi: f64) -> Result<Self> {
        let e = Expr::parse(src)?;
        let d = e.derivative();
        let dd = d.derivative();
        Self::new(
            move |p| e.eval(p),
            move |p| d.eval(p),
            move |p| dd.eval(p),
            lo,
            hi,
            src,
        )
    }

    fn validate(&self) -> Result<()> {
        let mut prev = f64::NEG_INFINITY;
        for k in 0..CONVEXITY_PROBES {
            let p = self.lo + (self.hi - self.lo) * k as f64 / (CONVEXITY_PROBES - 1) as f64;
            let (h, hp, hpp) = (self.raw_h(p), self.raw_hp(p), self.raw_hpp(p));
            if !(h.is_finite() && hp.is_finite() && hpp.is_finite()) {
                return Err(Error::InvalidHamiltonian(format!(
                    "non-finite evaluation at p = {p}"
                )));
            }
            if hpp <= 0.0 {
                return Err(Error::InvalidHamiltonian(format!(
                    "H_pp({p}) = {hpp} is not positive"
                )));
            }
            if hp <= prev {
                return Err(Error::InvalidHamiltonian(format!(
                    "H_p is not strictly increasing near p = {p}"
                )));
            }
            prev = hp;
        }
        Ok(())
    }

    fn raw_h(&self, p: f64) -> f64 {
        (self.h)(p)
    }
    fn raw_hp(&self, p: f64) -> f64 {
        (self.hp)(p)
    }
    fn raw_hpp(&self, p: f64) -> f64 {
        (self.hpp)(p)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Declared slope window (after reflection, if any).
    pub fn slope_range(&self) -> (f64, f64) {
        if self.reflected {
            (-self.hi, -self.lo)
        } else {
            (self.lo, self.hi)
        }
    }

    pub fn is_reflected(&self) -> bool {
        self.reflected
    }

    fn check_slope(&self, p: f64) -> Result<()> {
        let (lo, hi) = self.slope_range();
        if p < lo || p > hi || !p.is_finite() {
            return Err(Error::DomainExceeded { value: p, lo, hi });
        }
        Ok(())
    }

    pub fn h(&self, p: f64) -> Result<f64> {
        self.check_slope(p)?;
        Ok(if self.reflected { self.raw_h(-p) } else { self.raw_h(p) })
    }

    pub fn hp(&self, p: f64) -> Result<f64> {
        self.check_slope(p)?;
        Ok(if self.reflected { -self.raw_hp(-p) } else { self.raw_hp(p) })
    }

    pub fn hpp(&self, p: f64) -> Result<f64> {
        self.check_slope(p)?;
        Ok(if self.reflected { self.raw_hpp(-p) } else { self.raw_hpp(p) })
    }

    /// Range of `H_p` over the slope window; the Legendre transform is finite exactly here.
    pub fn velocity_range(&self) -> (f64, f64) {
        let (lo, hi) = self.slope_range();
        (self.hp(lo).unwrap(), self.hp(hi).unwrap())
    }

    /// `L(q) = q p* - H(p*)` with `H_p(p*) = q`, located by bisection.
    pub fn legendre(&self, q: f64) -> Result<f64> {
        let (vlo, vhi) = self.velocity_range();
        if !(q >= vlo && q <= vhi) {
            return Err(Error::DomainExceeded { value: q, lo: vlo, hi: vhi });
        }
        let p = self.velocity_inverse(q);
        Ok(q * p - self.h(p)?)
    }

    /// Solves `H_p(p) = q` on the slope window (q must lie in the velocity range).
    pub fn velocity_inverse(&self, q: f64) -> f64 {
        let (mut a, mut b) = self.slope_range();
        while b - a > TOL_NEWTON {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.hp(m).unwrap() < q {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Smallest `H_pp` on `[-lip, lip]`, sampled on the probe grid.
    pub fn min_curvature(&self, lip: f64) -> Result<f64> {
        self.check_slope(-lip)?;
        self.check_slope(lip)?;
        let n = 401;
        let mut m = f64::INFINITY;
        for k in 0..n {
            let p = -lip + 2.0 * lip * k as f64 / (n - 1) as f64;
            m = m.min(self.hpp(p)?);
        }
        Ok(m)
    }

    fn reflected_copy(&self) -> Self {
        let mut s = self.clone();
        s.reflected = !s.reflected;
        s
    }
}

/// Convex Hamiltonian descriptor.
#[derive(Clone, Debug)]
pub enum Hamiltonian {
    Quadratic(SpdMatrix),
    Scalar1D(Scalar1D),
}

impl Hamiltonian {
    pub fn quadratic(rows: &[Vec<f64>]) -> Result<Self> {
        Ok(Hamiltonian::Quadratic(SpdMatrix::new(rows)?))
    }

    /// `H(p) = |p|^2 / 2` in dimension `n`.
    pub fn isotropic(n: usize) -> Self {
        Hamiltonian::Quadratic(SpdMatrix::identity(n))
    }

    pub fn scalar_expr(expr: &str, lo: f64, hi: f64) -> Result<Self> {
        Ok(Hamiltonian::Scalar1D(Scalar1D::from_expr(expr, lo, hi)?))
    }

    /// Space dimension this Hamiltonian acts on.
    pub fn dim(&self) -> usize {
        match self {
            Hamiltonian::Quadratic(a) => a.dim(),
            Hamiltonian::Scalar1D(_) => 1,
        }
    }

    pub fn as_quadratic(&self) -> Option<&SpdMatrix> {
        match self {
            Hamiltonian::Quadratic(a) => Some(a),
            Hamiltonian::Scalar1D(_) => None,
        }
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::InvalidHamiltonian(format!(
                "vector of length {} for a hamiltonian of dimension {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        self.check_dim(p)?;
        match self {
            Hamiltonian::Quadratic(a) => Ok(0.5 * a.form(p)),
            Hamiltonian::Scalar1D(s) => s.h(p[0]),
        }
    }

    pub fn grad(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(p)?;
        match self {
            Hamiltonian::Quadratic(a) => Ok(a.apply(p)),
            Hamiltonian::Scalar1D(s) => Ok(vec![s.hp(p[0])?]),
        }
    }

    /// Row-major `n×n` Hessian.
    pub fn hess(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(p)?;
        match self {
            Hamiltonian::Quadratic(a) => Ok(a.rows().concat()),
            Hamiltonian::Scalar1D(s) => Ok(vec![s.hpp(p[0])?]),
        }
    }

    /// Legendre transform `L(q) = sup_p [q·p - H(p)]`.
    pub fn legendre(&self, q: &[f64]) -> Result<f64> {
        self.check_dim(q)?;
        match self {
            Hamiltonian::Quadratic(a) => Ok(0.5 * a.inverse_form(q)),
            Hamiltonian::Scalar1D(s) => s.legendre(q[0]),
        }
    }

    /// `H_r(p) = H(-p)`, the Hamiltonian governing `-w` when `w` runs backward.
    pub fn reflected(&self) -> Self {
        match self {
            Hamiltonian::Quadratic(a) => Hamiltonian::Quadratic(a.clone()),
            Hamiltonian::Scalar1D(s) => Hamiltonian::Scalar1D(s.reflected_copy()),
        }
    }

    /// `max { |H_p(p)| : |p| <= lip }`.
    pub fn max_speed(&self, lip: f64) -> Result<f64> {
        if lip == 0.0 {
            return match self {
                Hamiltonian::Quadratic(_) => Ok(0.0),
                Hamiltonian::Scalar1D(s) => Ok(s.hp(0.0)?.abs()),
            };
        }
        match self {
            Hamiltonian::Quadratic(a) => Ok(a.lambda_max() * lip),
            Hamiltonian::Scalar1D(s) => Ok(s.hp(-lip)?.abs().max(s.hp(lip)?.abs())),
        }
    }

    /// Per-axis bound on `|∂H/∂p_i|` over slopes with every `|p_j| <= lip`
    /// (used by the Lax-Friedrichs flux).
    pub fn axis_speeds(&self, lip: f64) -> Result<Vec<f64>> {
        match self {
            Hamiltonian::Quadratic(a) => Ok((0..a.dim())
                .map(|i| (0..a.dim()).map(|j| a.get(i, j).abs()).sum::<f64>() * lip)
                .collect()),
            Hamiltonian::Scalar1D(_) => Ok(vec![self.max_speed(lip)?]),
        }
    }

    /// `|[H_pp(p)]^{-1} - L_qq(H_p(p))|` (max entry), with `L_qq` from central
    /// second differences of [`Hamiltonian::legendre`].
    pub fn legendre_hess_identity_check(&self, p: &[f64]) -> Result<f64> {
        let q = self.grad(p)?;
        let n = self.dim();
        let hess = self.hess(p)?;
        let inv_hess = invert_small(&hess, n)?;
        let step = match self {
            Hamiltonian::Quadratic(_) => 1e-4,
            Hamiltonian::Scalar1D(_) => 1e-3,
        };
        let eval = |dq: &[f64]| -> Result<f64> {
            let shifted: Vec<f64> = q.iter().zip(dq).map(|(a, b)| a + b).collect();
            self.legendre(&shifted)
        };
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut ei = vec![0.0; n];
                let mut ej = vec![0.0; n];
                ei[i] = step;
                ej[j] = step;
                let lqq = if i == j {
                    let plus = eval(&ei)?;
                    let minus = eval(&ei.iter().map(|v| -v).collect::<Vec<_>>())?;
                    (plus - 2.0 * eval(&vec![0.0; n])? + minus) / (step * step)
                } else {
                    let pp: Vec<f64> = (0..n).map(|k| ei[k] + ej[k]).collect();
                    let pm: Vec<f64> = (0..n).map(|k| ei[k] - ej[k]).collect();
                    let mp: Vec<f64> = (0..n).map(|k| -ei[k] + ej[k]).collect();
                    let mm: Vec<f64> = (0..n).map(|k| -ei[k] - ej[k]).collect();
                    (eval(&pp)? - eval(&pm)? - eval(&mp)? + eval(&mm)?) / (4.0 * step * step)
                };
                worst = worst.max((inv_hess[i * n + j] - lqq).abs());
            }
        }
        Ok(worst)
    }

    pub fn descriptor(&self) -> HamiltonianDescriptor {
        match self {
            Hamiltonian::Quadratic(a) => HamiltonianDescriptor::Quadratic { a: a.rows() },
            Hamiltonian::Scalar1D(s) => HamiltonianDescriptor::Scalar1D {
                expr: s.label().to_string(),
                slope_range: [s.lo, s.hi],
            },
        }
    }
}

fn invert_small(m: &[f64], n: usize) -> Result<Vec<f64>> {
    let mat = DMatrix::from_row_slice(n, n, m);
    let inv = mat
        .try_inverse()
        .ok_or_else(|| Error::InvalidHamiltonian("singular hessian".into()))?;
    Ok(inv.transpose().iter().cloned().collect())
}

/// JSON form of a Hamiltonian.
///
/// `{"kind":"quadratic","A":[[2,1],[1,1]]}` or
/// `{"kind":"scalar1d","expr":"p^2/2","slope_range":[-3,3]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum HamiltonianDescriptor {
    #[serde(rename = "quadratic")]
    Quadratic {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
    },
    #[serde(rename = "scalar1d")]
    Scalar1D { expr: String, slope_range: [f64; 2] },
}

impl HamiltonianDescriptor {
    pub fn build(&self) -> Result<Hamiltonian> {
        match self {
            HamiltonianDescriptor::Quadratic { a } => Hamiltonian::quadratic(a),
            HamiltonianDescriptor::Scalar1D { expr, slope_range } => {
                Hamiltonian::scalar_expr(expr, slope_range[0], slope_range[1])
            }
        }
    }

    /// Accepts JSON or the shorthands `quadratic:1`, `quadratic:[[2,1],[1,1]]`
    /// and `scalar1d:EXPR:P` (slope window `[-P, P]`).
    pub fn parse(src: &str) -> Result<Self> {
        let src = src.trim();
        if src.starts_with('{') {
            return Ok(serde_json::from_str(src)?);
        }
        if let Some(rest) = src.strip_prefix("quadratic:") {
            let rest = rest.trim();
            let a: Vec<Vec<f64>> = if rest.starts_with('[') {
                serde_json::from_str(rest)?
            } else {
                let c: f64 = rest
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad quadratic coefficient {rest:?}")))?;
                vec![vec![c]]
            };
            return Ok(HamiltonianDescriptor::Quadratic { a });
        }
        if let Some(rest) = src.strip_prefix("scalar1d:") {
            let (expr, p) = rest
                .rsplit_once(':')
                .ok_or_else(|| Error::Parse("expected scalar1d:EXPR:P".into()))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad slope bound {p:?}")))?;
            return Ok(HamiltonianDescriptor::Scalar1D {
                expr: expr.to_string(),
                slope_range: [-p, p],
            });
        }
        Err(Error::Parse(format!("unrecognized hamiltonian descriptor {src:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example_a() -> Hamiltonian {
        Hamiltonian::quadratic(&[vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap()
    }

    #[test]
    fn legendre_closed_forms() {
        let h = Hamiltonian::isotropic(1);
        assert_abs_diff_eq!(h.legendre(&[1.0]).unwrap(), 0.5, epsilon = 1e-15);
        // A^{-1} = [[1,-1],[-1,2]]: <A^{-1}(0,1),(0,1)>/2 = 1
        assert_abs_diff_eq!(example_a().legendre(&[0.0, 1.0]).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn legendre_quartic_matches_dense_scan() {
        let h = Hamiltonian::scalar_expr("p^4/4", -2.0, 2.0);
        // p^4/4 has H_pp(0) = 0, so it fails strict convexity at the origin.
        assert!(h.is_err());
        // shift the window away from the degenerate point to exercise the scan oracle
        let s = Scalar1D::from_expr("p^4/4", 0.5, 2.0).unwrap();
        let q = 1.0;
        let scan = (0..=200_000)
            .map(|k| 0.5 + 1.5 * k as f64 / 200_000.0)
            .map(|p| q * p - p.powi(4) / 4.0)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(s.legendre(q).unwrap(), 0.75, epsilon = 1e-10);
        assert_abs_diff_eq!(scan, 0.75, epsilon = 1e-9);
    }

    #[test]
    fn legendre_domain_is_enforced() {
        let h = Hamiltonian::scalar_expr("p^4/4 + p^2/2", -2.0, 2.0).unwrap();
        // H_p(2) = 8 + 2 = 10
        assert!(h.legendre(&[10.0]).is_ok());
        assert!(matches!(h.legendre(&[10.5]), Err(Error::DomainExceeded { .. })));
        assert!(matches!(h.grad(&[2.5]), Err(Error::DomainExceeded { .. })));
    }

    #[test]
    fn gradients_and_hessians() {
        let g = Hamiltonian::isotropic(2).grad(&[3.0, 4.0]).unwrap();
        assert_eq!(g, vec![3.0, 4.0]);
        assert_eq!(example_a().grad(&[1.0, 0.0]).unwrap(), vec![2.0, 1.0]);
        let s = Hamiltonian::scalar_expr("p^2/2", -3.0, 3.0).unwrap();
        assert_abs_diff_eq!(s.grad(&[0.7]).unwrap()[0], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(s.hess(&[0.7]).unwrap()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn legendre_hessian_identity() {
        let r = Hamiltonian::isotropic(1).legendre_hess_identity_check(&[1.0]).unwrap();
        assert!(r <= 1e-6, "{r}");
        let r = example_a().legendre_hess_identity_check(&[1.0, 1.0]).unwrap();
        assert!(r <= 1e-5, "{r}");
        let s = Hamiltonian::scalar_expr("p^4/4 + p^2/2", -3.0, 3.0).unwrap();
        let r = s.legendre_hess_identity_check(&[0.5]).unwrap();
        assert!(r <= 1e-4, "{r}");
    }

    #[test]
    fn eigen_cache() {
        let Hamiltonian::Quadratic(a) = example_a() else { unreachable!() };
        let s5 = 5f64.sqrt();
        assert_abs_diff_eq!(a.lambda_min(), (3.0 - s5) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.lambda_max(), (3.0 + s5) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.inv(0, 1), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.inv(1, 1), 2.0, epsilon = 1e-12);
        assert!(!a.is_diagonal());
    }

    #[test]
    fn rejects_invalid_matrices() {
        assert!(Hamiltonian::quadratic(&[vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
        assert!(Hamiltonian::quadratic(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(Hamiltonian::quadratic(&[vec![-1.0]]).is_err());
        assert!(Hamiltonian::scalar_expr("-p^2", -1.0, 1.0).is_err());
    }

    #[test]
    fn reflection() {
        let s = Hamiltonian::scalar_expr("p^2/2 + p^3/30", -2.0, 2.0).unwrap();
        let r = s.reflected();
        for &p in &[-1.5, -0.3, 0.8] {
            assert_abs_diff_eq!(r.value(&[p]).unwrap(), s.value(&[-p]).unwrap(), epsilon = 1e-15);
            assert_abs_diff_eq!(r.grad(&[p]).unwrap()[0], -s.grad(&[-p]).unwrap()[0], epsilon = 1e-15);
            assert_abs_diff_eq!(
                r.legendre(&[p]).unwrap(),
                s.legendre(&[-p]).unwrap(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn descriptor_parsing() {
        let d = HamiltonianDescriptor::parse("quadratic:[[2,1],[1,1]]").unwrap();
        assert_eq!(d, HamiltonianDescriptor::Quadratic { a: vec![vec![2.0, 1.0], vec![1.0, 1.0]] });
        let d = HamiltonianDescriptor::parse("quadratic:1").unwrap();
        assert_eq!(d.build().unwrap().dim(), 1);
        let d = HamiltonianDescriptor::parse(r#"{"kind":"scalar1d","expr":"p^2/2","slope_range":[-3,3]}"#)
            .unwrap();
        assert!(matches!(d.build().unwrap(), Hamiltonian::Scalar1D(_)));
        let d = HamiltonianDescriptor::parse("scalar1d:p^4/4+p^2/2:2").unwrap();
        assert_eq!(d, HamiltonianDescriptor::Scalar1D { expr: "p^4/4+p^2/2".into(), slope_range: [-2.0, 2.0] });
        assert!(HamiltonianDescriptor::parse("cubic:1").is_err());
    }
}
