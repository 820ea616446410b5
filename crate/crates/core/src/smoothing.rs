//! Singular-spectrum smoothing: extract the dominant singular block of a
//! weight matrix, smooth its spectrum with a policy, and reassemble
//! `W* = W − W_dominant + W*_dominant`.
//!
//! Every policy maps a non-increasing positive spectrum to a non-increasing
//! positive one and leaves the singular vectors untouched. Clip, LogScale
//! and SoftmaxTemp in auto mode never decrease the stable rank of the
//! block; Convolution guarantees that on log-convex (decaying-ratio)
//! spectra, which is the shape dominant singular blocks take in practice —
//! on log-concave spectra a kernel can lower it slightly.

use std::collections::BTreeMap;

use crate::diagnostics::{stable_rank, GradTracker};
use crate::error::{Error, Result};
use crate::linalg::{full_svd, randomized_topk_svd, DenseMatrix, RandomSource, SvdFactors};

/// Size below which [`dominant_block`] uses the exact SVD even when the
/// caller did not ask for it.
const EXACT_CUTOFF: usize = 64;

/// Spectrum-smoothing policy.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothingPolicy {
    /// Symmetric non-negative kernel of odd length summing to 1, applied
    /// with replicate padding at both ends.
    Convolution { kernel: Vec<f64> },
    /// Softmax reweighting `raw_i ∝ exp(β σ_i)`, rescaled to preserve the
    /// block's Frobenius energy `Σσ²`. `beta: None` resolves to the auto
    /// temperature `1/(2σ₁)`, which guarantees the stable rank cannot
    /// decrease; explicit β above `1/σ₁` sharpens instead.
    SoftmaxTemp { beta: Option<f64> },
    /// Cap each value at `rho ×` the block mean, `rho ≥ 1`.
    Clip { rho: f64 },
    /// `σ*_i = σ_k (1 + ln(σ_i/σ_k))`: monotone logarithmic compression
    /// fixing the smallest dominant value.
    LogScale,
}

impl SmoothingPolicy {
    /// Human-readable tag used in audit records and CLI output.
    pub fn label(&self) -> String {
        match self {
            SmoothingPolicy::Convolution { kernel } => {
                let ks: Vec<String> = kernel.iter().map(|k| format!("{k}")).collect();
                format!("conv[{}]", ks.join(","))
            }
            SmoothingPolicy::SoftmaxTemp { beta: Some(b) } => format!("softmax[beta={b}]"),
            SmoothingPolicy::SoftmaxTemp { beta: None } => "softmax[auto]".into(),
            SmoothingPolicy::Clip { rho } => format!("clip[rho={rho}]"),
            SmoothingPolicy::LogScale => "log".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SmoothingPolicy::Convolution { kernel } => {
                if kernel.is_empty() || kernel.len() % 2 == 0 {
                    return Err(Error::InvalidArgument(
                        "convolution kernel must have odd length".into(),
                    ));
                }
                if kernel.iter().any(|&k| !(k >= 0.0) || !k.is_finite()) {
                    return Err(Error::InvalidArgument(
                        "convolution kernel entries must be non-negative".into(),
                    ));
                }
                let sum: f64 = kernel.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "convolution kernel must sum to 1, got {sum}"
                    )));
                }
            }
            SmoothingPolicy::SoftmaxTemp { beta } => {
                if let Some(b) = beta {
                    if !(*b > 0.0) || !b.is_finite() {
                        return Err(Error::InvalidArgument(format!(
                            "softmax temperature must be positive, got {b}"
                        )));
                    }
                }
            }
            SmoothingPolicy::Clip { rho } => {
                if !(*rho >= 1.0) || !rho.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "clip ratio must be at least 1, got {rho}"
                    )));
                }
            }
            SmoothingPolicy::LogScale => {}
        }
        Ok(())
    }
}

/// Top singular block of a matrix: the `k = max(2, ⌈SR(W)⌉)` leading
/// triplets.
#[derive(Debug, Clone)]
pub struct DominantBlock {
    pub k: usize,
    pub factors: SvdFactors,
    pub source_shape: (usize, usize),
}

/// Audit record of one smoothing application.
#[derive(Debug, Clone)]
pub struct SmoothingOutcome {
    pub k: usize,
    pub sigma_before: Vec<f64>,
    pub sigma_after: Vec<f64>,
    pub sr_before: f64,
    pub sr_after: f64,
    pub policy: String,
}

/// Extract the dominant singular block of `w`.
///
/// The truncation order is `k = max(2, ⌈SR(W)⌉)` clamped to the smaller
/// dimension: highly singular matrices would otherwise yield a one-value
/// block on which every order-preserving policy is a no-op. Factors come
/// from the randomized top-k SVD, or from the full SVD when `exact` is set
/// or the smaller dimension is at most 64.
pub fn dominant_block(
    w: &DenseMatrix,
    rng: &mut RandomSource,
    exact: bool,
) -> Result<DominantBlock> {
    let min_dim = w.rows().min(w.cols());
    if min_dim < 2 {
        return Err(Error::InvalidInput(
            "no dominant block exists below dimension 2".into(),
        ));
    }
    let sr = stable_rank(w)?.stable_rank;
    let k = (sr.ceil() as usize).max(2).min(min_dim);
    let factors = if exact || min_dim <= EXACT_CUTOFF {
        full_svd(w)?.truncated(k)
    } else {
        randomized_topk_svd(
            w,
            k,
            crate::linalg::DDD_DEFAULT_OVERSAMPLE,
            crate::linalg::DDD_DEFAULT_POWER_ITERS,
            rng,
        )?
    };
    Ok(DominantBlock { k, factors, source_shape: (w.rows(), w.cols()) })
}

/// Apply a smoothing policy to a non-increasing positive spectrum of at
/// least two values.
///
/// ```
/// use spectral_sentinel::smoothing::{apply_policy, SmoothingPolicy};
///
/// let smoothed = apply_policy(&SmoothingPolicy::Clip { rho: 1.0 }, &[10.0, 1.0, 1.0]).unwrap();
/// assert_eq!(smoothed, vec![4.0, 1.0, 1.0]);
/// ```
pub fn apply_policy(policy: &SmoothingPolicy, sigma: &[f64]) -> Result<Vec<f64>> {
    policy.validate()?;
    if sigma.len() < 2 {
        return Err(Error::InvalidArgument(
            "spectrum smoothing needs at least two values".into(),
        ));
    }
    for (i, &s) in sigma.iter().enumerate() {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "spectrum values must be positive and finite, got {s} at index {i}"
            )));
        }
        if i > 0 && s > sigma[i - 1] {
            return Err(Error::InvalidArgument(
                "spectrum must be non-increasing".into(),
            ));
        }
    }
    let k = sigma.len();
    let out = match policy {
        SmoothingPolicy::Convolution { kernel } => {
            let m = kernel.len() / 2;
            // Replicate padding keeps order and the identity-kernel fixed point.
            let pick = |idx: isize| -> f64 {
                let clamped = idx.clamp(0, (k - 1) as isize) as usize;
                sigma[clamped]
            };
            (0..k)
                .map(|i| {
                    kernel
                        .iter()
                        .enumerate()
                        .map(|(j, &kj)| kj * pick(i as isize + j as isize - m as isize))
                        .sum()
                })
                .collect()
        }
        SmoothingPolicy::SoftmaxTemp { beta } => {
            let beta = beta.unwrap_or(1.0 / (2.0 * sigma[0]));
            let top = sigma[0];
            let raw: Vec<f64> = sigma.iter().map(|&s| (beta * (s - top)).exp()).collect();
            let raw_sum: f64 = raw.iter().sum();
            let raw: Vec<f64> = raw.iter().map(|r| r / raw_sum).collect();
            let energy: f64 = sigma.iter().map(|s| s * s).sum();
            let raw_energy: f64 = raw.iter().map(|r| r * r).sum();
            let scale = (energy / raw_energy).sqrt();
            raw.iter().map(|r| r * scale).collect()
        }
        SmoothingPolicy::Clip { rho } => {
            let mean = sigma.iter().sum::<f64>() / k as f64;
            let cap = rho * mean;
            sigma.iter().map(|&s| s.min(cap)).collect()
        }
        SmoothingPolicy::LogScale => {
            let floor = sigma[k - 1];
            sigma.iter().map(|&s| floor * (1.0 + (s / floor).ln())).collect()
        }
    };
    Ok(out)
}

/// Smooth the dominant spectrum of `w` and reassemble the matrix.
///
/// With exact factors the update is `W* = W + Σ_{i≤k} (σ*_i − σ_i) u_i v_iᵀ`,
/// so `‖W* − W‖_F = sqrt(Σ(σ_i − σ*_i)²)` and the singular values beyond
/// index `k` are untouched.
pub fn smooth_weights(
    w: &DenseMatrix,
    policy: &SmoothingPolicy,
    rng: &mut RandomSource,
    exact: bool,
) -> Result<(DenseMatrix, SmoothingOutcome)> {
    let block = dominant_block(w, rng, exact)?;
    let sigma_before = block.factors.sigma.clone();
    let sr_before = stable_rank(w)?.stable_rank;
    let sigma_after = apply_policy(policy, &sigma_before)?;

    let mut w_star = w.clone();
    for i in 0..block.k {
        let delta = sigma_after[i] - sigma_before[i];
        if delta == 0.0 {
            continue;
        }
        let u = block.factors.left.col_to_vec(i);
        let v = block.factors.right.col_to_vec(i);
        for r in 0..w_star.rows() {
            let du = delta * u[r];
            if du == 0.0 {
                continue;
            }
            let row = w_star.row_mut(r);
            for c in 0..row.len() {
                row[c] += du * v[c];
            }
        }
    }

    let sr_after = stable_rank(&w_star)?.stable_rank;
    let outcome = SmoothingOutcome {
        k: block.k,
        sigma_before,
        sigma_after,
        sr_before,
        sr_after,
        policy: policy.label(),
    };
    Ok((w_star, outcome))
}

/// One action taken by [`pss_step`].
#[derive(Debug, Clone)]
pub enum PssAction {
    /// A spike fired on this matrix and its spectrum was smoothed.
    Smoothed { name: String, ratio: f64, outcome: SmoothingOutcome },
    /// The tracker hit a degenerate state and was reset; training continues.
    TrackerReset { name: String },
}

/// One detection-plus-protection step over a named parameter set.
///
/// For each name (in lexicographic order): feed the gradient to that
/// matrix's tracker; on a trigger, smooth the parameter matrix and log the
/// outcome. A degenerate tracker is reset and logged instead of aborting
/// the run.
pub fn pss_step(
    trackers: &mut BTreeMap<String, GradTracker>,
    params: &mut BTreeMap<String, DenseMatrix>,
    grads: &BTreeMap<String, DenseMatrix>,
    policy: &SmoothingPolicy,
    rng: &mut RandomSource,
) -> Result<Vec<PssAction>> {
    let param_names: Vec<&String> = params.keys().collect();
    let grad_names: Vec<&String> = grads.keys().collect();
    if param_names != grad_names {
        return Err(Error::InvalidArgument(
            "parameter and gradient names do not coincide".into(),
        ));
    }
    for name in &param_names {
        if !trackers.contains_key(*name) {
            return Err(Error::InvalidArgument(format!("no tracker for parameter '{name}'")));
        }
    }

    let mut actions = Vec::new();
    let names: Vec<String> = params.keys().cloned().collect();
    for name in names {
        let tracker = trackers.get_mut(&name).unwrap();
        let grad = &grads[&name];
        match tracker.update(grad) {
            Ok((Some(ratio), true)) => {
                let w = params.get_mut(&name).unwrap();
                let (w_star, outcome) = smooth_weights(w, policy, rng, false)?;
                *w = w_star;
                actions.push(PssAction::Smoothed { name, ratio, outcome });
            }
            Ok(_) => {}
            Err(Error::DegenerateState(_)) => {
                tracker.reset();
                tracker.update(grad)?;
                actions.push(PssAction::TrackerReset { name });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(actions)
}
