//! Power iteration for the dominant singular triplet.

use crate::error::{Error, Result};
use crate::linalg::matrix::{normalize, DenseMatrix};
use crate::linalg::rng::RandomSource;

/// Default convergence tolerance on the relative change of the Rayleigh
/// estimate between iterations.
pub const POWER_DEFAULT_TOL: f64 = 1e-10;
/// Default iteration budget.
pub const POWER_DEFAULT_MAX_ITER: usize = 10_000;

/// Outcome of [`power_iteration_top`]. When `converged` is false the
/// estimate met the iteration cap first; the caller decides whether that is
/// acceptable.
#[derive(Debug, Clone)]
pub struct PowerIteration {
    pub sigma: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Estimate the top singular triplet `(σ₁, u₁, v₁)` of `w` by alternating
/// power iteration, stopping when the Rayleigh estimate's relative change
/// drops below `tol`.
///
/// ```
/// use spectral_sentinel::linalg::{power_iteration_top, DenseMatrix, RandomSource};
///
/// let w = DenseMatrix::from_diag(&[3.0, 1.0, 0.5]);
/// let mut rng = RandomSource::new(1);
/// let top = power_iteration_top(&w, 1e-12, 10_000, &mut rng).unwrap();
/// assert!(top.converged);
/// assert!((top.sigma - 3.0).abs() < 1e-10);
/// ```
pub fn power_iteration_top(
    w: &DenseMatrix,
    tol: f64,
    max_iter: usize,
    rng: &mut RandomSource,
) -> Result<PowerIteration> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    if !w.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    if w.is_zero() {
        return Err(Error::DegenerateInput(
            "power iteration is undefined for the zero matrix".into(),
        ));
    }

    let n = w.cols();
    let mut v = vec![0.0; n];
    // A Gaussian start is orthogonal to the top space with probability zero;
    // redraw a few times if the image still vanishes.
    let mut u = Vec::new();
    let mut started = false;
    for _ in 0..8 {
        rng.fill_normal(&mut v);
        normalize(&mut v);
        u = w.matvec(&v);
        if normalize(&mut u) > 0.0 {
            started = true;
            break;
        }
    }
    if !started {
        return Err(Error::DegenerateInput(
            "could not find a start vector outside the null space".into(),
        ));
    }

    let mut sigma = 0.0_f64;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut z = w.matvec_t(&u);
        let tau = normalize(&mut z);
        v = z;
        let mut y = w.matvec(&v);
        let rho = normalize(&mut y);
        u = y;
        let estimate = tau.max(rho);
        if (estimate - sigma).abs() <= tol * estimate {
            sigma = estimate;
            converged = true;
            break;
        }
        sigma = estimate;
    }

    // Final orientation: largest-magnitude entry of v positive.
    let mut idx = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
        for x in u.iter_mut() {
            *x = -*x;
        }
    }

    Ok(PowerIteration { sigma, left: u, right: v, iterations, converged })
}
