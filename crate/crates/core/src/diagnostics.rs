//! Stable-rank and alignment metrics, plus the gradient-spike tracker.
//!
//! The three static metrics:
//!
//! - `SR(W) = ‖W‖_F²/σ₁²` — how many singular directions carry the
//!   matrix's energy.
//! - `SR(W_K)` derived from the joint score matrix `W_QK = W_KᵀW_K`
//!   through its eigenvalues, without materializing `W_K`.
//! - the alignment `φ = |⟨v₁(W), β₁(Z)⟩|` between the dominant right
//!   singular directions of a weight matrix and of a representation
//!   matrix.
//!
//! The dynamic piece is [`GradTracker`]: an exponentially weighted moving
//! average of gradient matrices whose norm ratio against the incoming
//! gradient flags spikes.

use crate::error::{Error, Result};
use crate::linalg::{
    dot, frobenius_norm, full_svd, power_iteration_top, symmetric_eigenvalues, DenseMatrix,
    RandomSource, POWER_DEFAULT_MAX_ITER, POWER_DEFAULT_TOL,
};

/// Relative tolerance for the symmetry check on score matrices.
const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalue floor, relative to λ_max, below which a score matrix is
/// rejected as indefinite.
const PSD_FLOOR: f64 = -1e-10;
/// σ₁/σ₂ below `1 + ALIGNMENT_GAP_TOL` marks an alignment report as
/// ill-conditioned.
const ALIGNMENT_GAP_TOL: f64 = 1e-6;

/// Metric operations draw their power-iteration start vectors from this
/// fixed seed so they stay pure functions of their matrix inputs.
const METRIC_SEED: u64 = 0x5EED_5EED_5EED_5EED;

/// Stable-rank summary of one matrix.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// `‖W‖_F² / σ₁²`, in `[1, min(rows, cols)]` for nonzero matrices.
    pub stable_rank: f64,
    /// Top singular value σ₁.
    pub sigma_top: f64,
    /// Frobenius norm ‖W‖_F.
    pub fro_norm: f64,
}

/// Alignment between the top right singular vectors of two matrices
/// sharing their column dimension.
#[derive(Debug, Clone)]
pub struct AlignmentReport {
    /// `|⟨v₁, β₁⟩|` in `[0, 1]`.
    pub phi: f64,
    /// Top right singular vector of the weight matrix.
    pub v1: Vec<f64>,
    /// Top right singular vector of the representation matrix.
    pub beta1: Vec<f64>,
    /// Set when σ₁/σ₂ < 1 + 1e-6 in either matrix; the value is still
    /// returned but the dominant direction is not well separated.
    pub ill_conditioned: bool,
}

/// Stable rank of `w`.
///
/// σ₁ comes from power iteration (tolerance 1e-10, 10 000 iterations),
/// falling back to the full SVD if the iteration does not converge.
///
/// ```
/// use spectral_sentinel::diagnostics::stable_rank;
/// use spectral_sentinel::linalg::DenseMatrix;
///
/// let r = stable_rank(&DenseMatrix::from_diag(&[2.0, 1.0, 1.0])).unwrap();
/// assert!((r.stable_rank - 1.5).abs() < 1e-9);
/// ```
pub fn stable_rank(w: &DenseMatrix) -> Result<SpectralReport> {
    let fro = frobenius_norm(w)?;
    if fro == 0.0 {
        return Err(Error::DegenerateInput(
            "stable rank is undefined for the zero matrix".into(),
        ));
    }
    let mut rng = RandomSource::new(METRIC_SEED);
    let top = power_iteration_top(w, POWER_DEFAULT_TOL, POWER_DEFAULT_MAX_ITER, &mut rng)?;
    let sigma_top = if top.converged { top.sigma } else { full_svd(w)?.sigma[0] };
    Ok(SpectralReport {
        stable_rank: (fro * fro) / (sigma_top * sigma_top),
        sigma_top,
        fro_norm: fro,
    })
}

/// Validate that `w_qk` is symmetric within 1e-10 (relative) and positive
/// semidefinite within a −1e-10·λ_max eigenvalue floor, returning its
/// eigenvalues sorted descending.
pub(crate) fn validated_score_eigenvalues(w_qk: &DenseMatrix) -> Result<Vec<f64>> {
    if w_qk.rows() != w_qk.cols() {
        return Err(Error::InvalidArgument(format!(
            "score matrix must be square, got {}x{}",
            w_qk.rows(),
            w_qk.cols()
        )));
    }
    if !w_qk.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    if w_qk.asymmetry() > SYMMETRY_TOL {
        return Err(Error::InvalidInput(format!(
            "score matrix asymmetry {:.3e} exceeds {SYMMETRY_TOL:.0e}",
            w_qk.asymmetry()
        )));
    }
    let values = symmetric_eigenvalues(w_qk)?;
    let lam_max = values[0];
    let lam_min = *values.last().unwrap();
    if lam_max <= 0.0 {
        return Err(Error::DegenerateInput(
            "score matrix has no positive eigenvalue".into(),
        ));
    }
    if lam_min < PSD_FLOOR * lam_max {
        return Err(Error::InvalidInput(format!(
            "score matrix is indefinite: λ_min = {lam_min:.6e}, λ_max = {lam_max:.6e}"
        )));
    }
    Ok(values)
}

/// Stable rank of the key factor `W_K` recovered from `W_QK = W_KᵀW_K`:
/// `SR(W_K) = trace(W_QK)/λ_max(W_QK)` since the eigenvalues of `W_QK` are
/// the squared singular values of `W_K`.
///
/// ```
/// use spectral_sentinel::diagnostics::{key_stable_rank, stable_rank};
/// use spectral_sentinel::linalg::{DenseMatrix, RandomSource};
///
/// let b = DenseMatrix::gaussian(20, 12, &mut RandomSource::new(7));
/// let w_qk = b.transpose().matmul(&b).symmetrized();
/// let via_score = key_stable_rank(&w_qk).unwrap();
/// let direct = stable_rank(&b).unwrap().stable_rank;
/// assert!((via_score - direct).abs() < 1e-9 * direct);
/// ```
pub fn key_stable_rank(w_qk: &DenseMatrix) -> Result<f64> {
    let values = validated_score_eigenvalues(w_qk)?;
    let total: f64 = values.iter().sum();
    Ok(total / values[0])
}

/// Alignment `φ = |⟨v₁(W), β₁(Z)⟩|` between the dominant right singular
/// vectors of `w` and `z`; the matrices must share their column dimension.
pub fn singularity_alignment(w: &DenseMatrix, z: &DenseMatrix) -> Result<AlignmentReport> {
    if w.cols() != z.cols() {
        return Err(Error::InvalidArgument(format!(
            "matrices must share their column dimension, got {} and {}",
            w.cols(),
            z.cols()
        )));
    }
    if w.fro_norm() == 0.0 || z.fro_norm() == 0.0 {
        return Err(Error::DegenerateInput(
            "alignment is undefined for a zero matrix".into(),
        ));
    }
    let fw = full_svd(w)?;
    let fz = full_svd(z)?;
    let gap_bad = |sigma: &[f64]| {
        sigma.len() > 1 && sigma[0] < (1.0 + ALIGNMENT_GAP_TOL) * sigma[1]
    };
    let v1 = fw.right.col_to_vec(0);
    let beta1 = fz.right.col_to_vec(0);
    let phi = dot(&v1, &beta1).abs().min(1.0);
    Ok(AlignmentReport {
        phi,
        ill_conditioned: gap_bad(&fw.sigma) || gap_bad(&fz.sigma),
        v1,
        beta1,
    })
}

/// Stable rank of the key-side representation `Z_K`, from the score matrix
/// `M = Z · W_QK · Zᵀ`: the eigenvalues of `M` are the squared singular
/// values of `Z_K`, so `SR(Z_K) = Σλ_i(M)/λ_max(M)`.
pub fn repr_singularity(z: &DenseMatrix, w_qk: &DenseMatrix) -> Result<f64> {
    if z.cols() != w_qk.rows() {
        return Err(Error::InvalidArgument(format!(
            "representation columns ({}) must match score dimension ({})",
            z.cols(),
            w_qk.rows()
        )));
    }
    if z.rows() > 1024 {
        return Err(Error::Capacity(format!(
            "repr_singularity handles T <= 1024 rows, got {}",
            z.rows()
        )));
    }
    validated_score_eigenvalues(w_qk)?;
    let m = z.matmul(w_qk).matmul(&z.transpose()).symmetrized();
    if m.fro_norm() == 0.0 {
        return Err(Error::DegenerateInput(
            "representation score matrix is zero".into(),
        ));
    }
    // trace is exact; λ_max via power iteration on the PSD matrix, falling
    // back to the dense eigensolver.
    let mut rng = RandomSource::new(METRIC_SEED ^ 1);
    let lam_max = match power_iteration_top(&m, POWER_DEFAULT_TOL, POWER_DEFAULT_MAX_ITER, &mut rng)
    {
        Ok(p) if p.converged => p.sigma,
        _ => symmetric_eigenvalues(&m)?[0],
    };
    Ok(m.trace() / lam_max)
}

/// Which statistic the tracker averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackerMode {
    /// EWMA of gradient *matrices*; the norm is taken at ratio time. This
    /// is the reference behaviour and the default.
    MatrixEwma,
    /// Cheaper variant averaging gradient norms directly. Never the
    /// default.
    NormEwma,
}

#[derive(Debug, Clone)]
enum TrackerState {
    Empty,
    Matrix(DenseMatrix),
    Norm(f64),
}

/// EWMA gradient tracker driving spike detection.
///
/// After a warm-start first observation, each update returns the ratio
/// `‖g_t‖_F / ‖g_avg_{t−1}‖_F` (computed before folding `g_t` in) and
/// whether it reached the trigger threshold τ.
///
/// ```
/// use spectral_sentinel::diagnostics::GradTracker;
/// use spectral_sentinel::linalg::DenseMatrix;
///
/// let mut tracker = GradTracker::new(0.5, 2.0).unwrap();
/// let g = |x: f64| DenseMatrix::from_vec(1, 1, vec![x]).unwrap();
/// assert_eq!(tracker.update(&g(1.0)).unwrap(), (None, false));
/// let (ratio, fired) = tracker.update(&g(10.0)).unwrap();
/// assert_eq!(ratio, Some(10.0));
/// assert!(fired);
/// ```
#[derive(Debug, Clone)]
pub struct GradTracker {
    alpha: f64,
    tau: f64,
    mode: TrackerMode,
    state: TrackerState,
    step: u64,
}

impl GradTracker {
    /// `alpha` is the EWMA coefficient in (0, 1]; `tau` the trigger
    /// threshold, above 1.
    pub fn new(alpha: f64, tau: f64) -> Result<Self> {
        Self::with_mode(alpha, tau, TrackerMode::MatrixEwma)
    }

    pub fn with_mode(alpha: f64, tau: f64, mode: TrackerMode) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        if !(tau > 1.0) {
            return Err(Error::InvalidArgument(format!("tau must exceed 1, got {tau}")));
        }
        Ok(GradTracker { alpha, tau, mode, state: TrackerState::Empty, step: 0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Number of observations folded in so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Drop all state, as after a degenerate-state error.
    pub fn reset(&mut self) {
        self.state = TrackerState::Empty;
        self.step = 0;
    }

    /// Observe one gradient. Returns `(ratio, triggered)`; the ratio is
    /// `None` on the warm-start first call, which can never trigger.
    pub fn update(&mut self, g: &DenseMatrix) -> Result<(Option<f64>, bool)> {
        let g_norm = frobenius_norm(g)?;
        match &mut self.state {
            TrackerState::Empty => {
                self.state = match self.mode {
                    TrackerMode::MatrixEwma => TrackerState::Matrix(g.clone()),
                    TrackerMode::NormEwma => TrackerState::Norm(g_norm),
                };
                self.step = 1;
                Ok((None, false))
            }
            TrackerState::Matrix(avg) => {
                if (avg.rows(), avg.cols()) != (g.rows(), g.cols()) {
                    return Err(Error::InvalidArgument(format!(
                        "gradient shape {}x{} does not match tracked {}x{}",
                        g.rows(),
                        g.cols(),
                        avg.rows(),
                        avg.cols()
                    )));
                }
                let avg_norm = avg.fro_norm();
                if avg_norm == 0.0 {
                    return Err(Error::DegenerateState(
                        "tracked average gradient has zero norm; reset the tracker".into(),
                    ));
                }
                let ratio = g_norm / avg_norm;
                let triggered = ratio >= self.tau;
                // g_avg ← (1−α)·g_avg + α·g, entrywise.
                let alpha = self.alpha;
                for i in 0..avg.rows() {
                    let row = avg.row_mut(i);
                    let grow = g.row(i);
                    for (a, &b) in row.iter_mut().zip(grow.iter()) {
                        *a = (1.0 - alpha) * *a + alpha * b;
                    }
                }
                self.step += 1;
                Ok((Some(ratio), triggered))
            }
            TrackerState::Norm(avg) => {
                if *avg == 0.0 {
                    return Err(Error::DegenerateState(
                        "tracked average norm is zero; reset the tracker".into(),
                    ));
                }
                let ratio = g_norm / *avg;
                let triggered = ratio >= self.tau;
                *avg = (1.0 - self.alpha) * *avg + self.alpha * g_norm;
                self.step += 1;
                Ok((Some(ratio), triggered))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormal_columns;

    fn seeded(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        DenseMatrix::gaussian(rows, cols, &mut RandomSource::new(seed))
    }

    #[test]
    fn stable_rank_trivial_cases() {
        let r = stable_rank(&DenseMatrix::identity(4)).unwrap();
        assert!((r.stable_rank - 4.0).abs() < 1e-9);

        let u = [0.6, 0.8];
        let v = [1.0, 0.0, 0.0];
        let w = DenseMatrix::outer(&u, &v).scaled(5.0);
        let r = stable_rank(&w).unwrap();
        assert!((r.stable_rank - 1.0).abs() < 1e-9);

        let r = stable_rank(&DenseMatrix::from_diag(&[2.0, 1.0, 1.0])).unwrap();
        assert!((r.stable_rank - 1.5).abs() < 1e-9);
    }

    #[test]
    fn stable_rank_zero_matrix_degenerate() {
        assert!(matches!(
            stable_rank(&DenseMatrix::zeros(2, 2)),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn report_internal_consistency() {
        let w = seeded(24, 16, 5);
        let r = stable_rank(&w).unwrap();
        let lhs = r.fro_norm * r.fro_norm;
        let rhs = r.stable_rank * r.sigma_top * r.sigma_top;
        assert!((lhs - rhs).abs() <= 1e-9 * lhs);
        assert!(r.stable_rank >= 1.0 - 1e-12);
        assert!(r.stable_rank <= 16.0 + 1e-9);
    }

    #[test]
    fn stable_rank_scale_invariant() {
        let w = seeded(12, 8, 6);
        let a = stable_rank(&w).unwrap().stable_rank;
        let b = stable_rank(&w.scaled(-3.7)).unwrap().stable_rank;
        assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn stable_rank_orthogonally_invariant() {
        let w = seeded(10, 7, 42);
        let mut rng = RandomSource::new(43);
        let q = orthonormal_columns(10, 10, &mut rng).unwrap();
        let r = orthonormal_columns(7, 7, &mut rng).unwrap();
        let rotated = q.matmul(&w).matmul(&r.transpose());
        let a = stable_rank(&w).unwrap().stable_rank;
        let b = stable_rank(&rotated).unwrap().stable_rank;
        assert!((a - b).abs() <= 1e-8 * a, "{a} vs {b}");
    }

    #[test]
    fn key_stable_rank_trivial_and_derived() {
        assert!((key_stable_rank(&DenseMatrix::identity(5)).unwrap() - 5.0).abs() < 1e-10);
        let d = DenseMatrix::from_diag(&[9.0, 1.0]);
        assert!((key_stable_rank(&d).unwrap() - 10.0 / 9.0).abs() < 1e-10);

        // W_QK = BᵀB matches the stable rank of B.
        let b = seeded(20, 12, 7);
        let w_qk = b.transpose().matmul(&b).symmetrized();
        let via_eigen = key_stable_rank(&w_qk).unwrap();
        let direct = stable_rank(&b).unwrap().stable_rank;
        assert!((via_eigen - direct).abs() <= 1e-9 * direct, "{via_eigen} vs {direct}");
    }

    #[test]
    fn key_stable_rank_rejects_bad_inputs() {
        let asym = DenseMatrix::from_vec(2, 2, vec![1.0, 0.5, 0.0, 1.0]).unwrap();
        assert!(matches!(key_stable_rank(&asym), Err(Error::InvalidInput(_))));
        let indef = DenseMatrix::from_diag(&[1.0, -0.5]);
        assert!(matches!(key_stable_rank(&indef), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn alignment_identical_and_orthogonal() {
        let w = seeded(9, 6, 8);
        let r = singularity_alignment(&w, &w).unwrap();
        assert!((r.phi - 1.0).abs() < 1e-10);

        let a = DenseMatrix::from_diag(&[3.0, 1.0]);
        let b = DenseMatrix::from_diag(&[1.0, 3.0]);
        let r = singularity_alignment(&a, &b).unwrap();
        assert!(r.phi.abs() < 1e-12);
    }

    #[test]
    fn alignment_matches_direct_svd_inner_product() {
        let w = seeded(14, 10, 9);
        let z = seeded(30, 10, 10);
        let r = singularity_alignment(&w, &z).unwrap();
        let fw = full_svd(&w).unwrap();
        let fz = full_svd(&z).unwrap();
        let expect = dot(&fw.right.col_to_vec(0), &fz.right.col_to_vec(0)).abs();
        assert!((r.phi - expect).abs() < 1e-12);
        assert!(!r.ill_conditioned);
    }

    #[test]
    fn alignment_scale_invariance_for_pow2_is_exact() {
        let w = seeded(8, 5, 11);
        let z = seeded(12, 5, 12);
        let a = singularity_alignment(&w, &z).unwrap().phi;
        let b = singularity_alignment(&w.scaled(2.0), &z.scaled(4.0)).unwrap().phi;
        assert_eq!(a.to_bits(), b.to_bits());
        let c = singularity_alignment(&w.scaled(3.7), &z.scaled(0.9)).unwrap().phi;
        assert!((a - c).abs() < 1e-12);
    }

    #[test]
    fn alignment_flags_tied_spectrum() {
        let r = singularity_alignment(&DenseMatrix::identity(3), &seeded(5, 3, 13)).unwrap();
        assert!(r.ill_conditioned);
        assert!(r.phi.is_finite());
    }

    #[test]
    fn alignment_shape_mismatch() {
        let a = seeded(4, 3, 1);
        let b = seeded(4, 4, 2);
        assert!(matches!(
            singularity_alignment(&a, &b),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn repr_identity_reduces_to_stable_rank() {
        let z = seeded(20, 8, 14);
        let sr = repr_singularity(&z, &DenseMatrix::identity(8)).unwrap();
        let direct = stable_rank(&z).unwrap().stable_rank;
        assert!((sr - direct).abs() <= 1e-9 * direct, "{sr} vs {direct}");
    }

    #[test]
    fn repr_rank_one_representation() {
        let mut rng = RandomSource::new(15);
        let alpha = orthonormal_columns(10, 1, &mut rng).unwrap().col_to_vec(0);
        let beta = orthonormal_columns(4, 1, &mut rng).unwrap().col_to_vec(0);
        let z = DenseMatrix::outer(&alpha, &beta).scaled(2.5);
        // Any PSD score matrix whose range is not orthogonal to β.
        let g = seeded(4, 4, 16);
        let w_qk = g.transpose().matmul(&g).symmetrized().scaled(1.0 / 4.0);
        let sr = repr_singularity(&z, &w_qk).unwrap();
        assert!((sr - 1.0).abs() < 1e-8, "sr = {sr}");
    }

    #[test]
    fn repr_matches_eigen_bruteforce() {
        let z = seeded(16, 6, 17);
        let g = seeded(6, 6, 18);
        let w_qk = g.transpose().matmul(&g).symmetrized().scaled(1.0 / 6.0);
        let sr = repr_singularity(&z, &w_qk).unwrap();
        let m = z.matmul(&w_qk).matmul(&z.transpose()).symmetrized();
        let vals = symmetric_eigenvalues(&m).unwrap();
        let brute = vals.iter().sum::<f64>() / vals[0];
        assert!((sr - brute).abs() <= 1e-9 * brute);
    }

    #[test]
    fn tracker_trivial_streams() {
        let g = |x: f64| DenseMatrix::from_vec(1, 1, vec![x]).unwrap();
        let mut t = GradTracker::new(0.5, 2.0).unwrap();
        assert_eq!(t.update(&g(1.0)).unwrap(), (None, false));
        let (r, fired) = t.update(&g(1.0)).unwrap();
        assert_eq!(r, Some(1.0));
        assert!(!fired);

        let mut t = GradTracker::new(0.5, 2.0).unwrap();
        t.update(&g(1.0)).unwrap();
        let (r, fired) = t.update(&g(10.0)).unwrap();
        assert_eq!(r, Some(10.0));
        assert!(fired);
    }

    #[test]
    fn tracker_spike_at_step_50_only() {
        // Oracle: the recurrence evaluated directly on the same stream.
        let mut rng = RandomSource::new(50);
        let stream: Vec<f64> = (1..=60)
            .map(|step| if step == 50 { 10.0 } else { 1.0 + 0.01 * (2.0 * rng.uniform() - 1.0) })
            .collect();

        let mut t = GradTracker::new(0.1, 2.0).unwrap();
        let mut fired_at = Vec::new();
        let mut avg = 0.0;
        for (i, &x) in stream.iter().enumerate() {
            let g = DenseMatrix::from_vec(1, 1, vec![x]).unwrap();
            let (ratio, fired) = t.update(&g).unwrap();
            if i == 0 {
                assert_eq!(ratio, None);
                avg = x;
                continue;
            }
            let expect = x.abs() / avg.abs();
            assert!((ratio.unwrap() - expect).abs() < 1e-12);
            if fired {
                fired_at.push(i + 1);
            }
            avg = 0.9 * avg + 0.1 * x;
        }
        assert_eq!(fired_at, vec![50]);
    }

    #[test]
    fn tracker_replay_is_bitwise() {
        let run = || {
            let mut rng = RandomSource::new(51);
            let mut t = GradTracker::new(0.2, 1.5).unwrap();
            let mut out = Vec::new();
            for _ in 0..32 {
                let g = DenseMatrix::gaussian(3, 2, &mut rng);
                let (r, fired) = t.update(&g).unwrap();
                out.push((r.map(f64::to_bits), fired));
            }
            out
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn tracker_shape_and_state_errors() {
        let mut t = GradTracker::new(0.5, 2.0).unwrap();
        t.update(&DenseMatrix::zeros(2, 2)).unwrap();
        // Zero average: degenerate state.
        assert!(matches!(
            t.update(&DenseMatrix::identity(2)),
            Err(Error::DegenerateState(_))
        ));
        t.reset();
        t.update(&DenseMatrix::identity(2)).unwrap();
        assert!(matches!(
            t.update(&DenseMatrix::zeros(3, 3)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn tracker_norm_mode_behaves() {
        let g = |x: f64| DenseMatrix::from_vec(1, 1, vec![x]).unwrap();
        let mut t = GradTracker::with_mode(0.5, 2.0, TrackerMode::NormEwma).unwrap();
        t.update(&g(1.0)).unwrap();
        let (r, fired) = t.update(&g(3.0)).unwrap();
        assert_eq!(r, Some(3.0));
        assert!(fired);
    }

    #[test]
    fn tracker_parameter_validation() {
        assert!(GradTracker::new(0.0, 2.0).is_err());
        assert!(GradTracker::new(1.5, 2.0).is_err());
        assert!(GradTracker::new(0.5, 1.0).is_err());
    }
}
