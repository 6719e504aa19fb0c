//! Numerical primitives shared by the channel model and the solvers:
//! tensor-product Gauss–Legendre quadrature on a rectangle, a Hermitian
//! eigendecomposition with ascending eigenvalues, and bisection for
//! monotonically non-increasing scalar functions.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Default relative tolerance for [`bisect_decreasing`].
pub const BISECT_REL_TOL: f64 = 1e-10;

/// Hard cap on bisection steps.
pub const BISECT_MAX_ITERS: usize = 200;

const BISECT_FLOOR: f64 = 1e-300;

/// Tensor-product quadrature rule on the rectangle
/// `[-half_len_x, half_len_x] × [-half_len_y, half_len_y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    /// Node coordinates `(x, y)` in meters, x-major ordering.
    pub nodes: Vec<[f64; 2]>,
    /// Weights in m², strictly positive.
    pub weights: Vec<f64>,
    /// Points per axis.
    pub order: usize,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Sum of the weights, i.e. the area the rule integrates over.
    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Integrate a real function of the node position.
    pub fn integrate<F: Fn([f64; 2]) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    /// Node positions lifted onto the `z = 0` aperture plane.
    pub fn points3(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.nodes.iter().map(|&[x, y]| [x, y, 0.0])
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
///
/// Roots of `P_n` are found by Newton iteration from the Tricomi-style
/// initial guess; weights follow from `2 / ((1 - x²) P_n'(x)²)`.
pub fn gauss_legendre_1d(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order == 0 {
        return Err(Error::InvalidOrder(order));
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor-product Gauss–Legendre rule with `order` points per axis, mapped
/// from `[-1, 1]²` onto the centred rectangle of the given half-lengths.
pub fn gauss_legendre_grid(half_len_x: f64, half_len_y: f64, order: usize) -> Result<QuadratureGrid> {
    if !(half_len_x > 0.0 && half_len_y > 0.0) || !half_len_x.is_finite() || !half_len_y.is_finite() {
        return Err(Error::InvalidGeometry(format!(
            "aperture half-lengths must be positive, got ({half_len_x}, {half_len_y})"
        )));
    }
    let (t, w) = gauss_legendre_1d(order)?;
    let mut nodes = Vec::with_capacity(order * order);
    let mut weights = Vec::with_capacity(order * order);
    for (tx, wx) in t.iter().zip(&w) {
        for (ty, wy) in t.iter().zip(&w) {
            nodes.push([half_len_x * tx, half_len_y * ty]);
            weights.push(half_len_x * half_len_y * wx * wy);
        }
    }
    Ok(QuadratureGrid { nodes, weights, order })
}

/// Eigendecomposition `A = V diag(λ) Vᴴ` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `j` pairs with `eigenvalues[j]`.
    pub eigenvectors: DMatrix<Complex64>,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        scaled * v.adjoint()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }
}

/// `‖A − Aᴴ‖_F / ‖A‖_F`, zero for the zero matrix.
pub fn hermitian_asymmetry(m: &DMatrix<Complex64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

/// `(A + Aᴴ) / 2`.
pub fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermitian_eig(m: &DMatrix<Complex64>) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = hermitian_asymmetry(m);
    if asym > HERMITIAN_TOL {
        return Err(Error::NotHermitian(asym));
    }
    let n = m.nrows();
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen { eigenvalues, eigenvectors })
}

/// Find `x` in `[lo, hi]` with `f(x) ≈ target` for non-increasing `f`.
///
/// Stops once `|f(x) − target| ≤ rel_tol·max(|target|, tiny)` or the
/// bracket collapses to machine precision. Midpoints are geometric while
/// the bracket spans more than a factor of four on the positive axis,
/// arithmetic otherwise.
pub fn bisect_decreasing<F: FnMut(f64) -> f64>(
    mut f: F,
    target: f64,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> Result<f64> {
    let tol = rel_tol * target.abs().max(BISECT_FLOOR);
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let f_lo = f(lo);
    if (f_lo - target).abs() <= tol {
        return Ok(lo);
    }
    let f_hi = f(hi);
    if (f_hi - target).abs() <= tol {
        return Ok(hi);
    }
    if !(f_lo >= target && target >= f_hi) {
        return Err(Error::BracketFailure { target, f_lo, f_hi });
    }
    let mut best = (lo, (f_lo - target).abs());
    for _ in 0..BISECT_MAX_ITERS {
        let mid = if lo > 0.0 && hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        let err = (fm - target).abs();
        if err < best.1 {
            best = (mid, err);
        }
        if err <= tol {
            return Ok(mid);
        }
        if fm > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.0)
}
