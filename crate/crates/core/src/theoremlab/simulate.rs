//! Desk-scale simulator for the instability feedback loop and its rescue.
//!
//! Each step: sample a batch, form the score-parameter gradient, optionally
//! run spike detection plus spectrum smoothing, then take the descent step
//! with PSD projection. The default gradient engine closes the structured
//! feedback loop `∇_t = p·S(W_t)·B` with a negative prefactor: the top
//! eigenvalue then compounds geometrically, stable rank collapses and
//! gradient norms rise until smoothing intervenes. The Monte Carlo engine
//! evaluates the factored per-sequence gradient instead; that system is
//! self-damping (the truncation zeroes slopes at large scores and the mean
//! drift drains the aligned directions), so it will not reproduce the
//! runaway by itself — it is kept for contrast and determinism tests.

use std::collections::BTreeMap;

use crate::diagnostics::{key_stable_rank, repr_singularity, singularity_alignment, GradTracker};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, DenseMatrix, RandomSource};
use crate::smoothing::{pss_step, PssAction, SmoothingPolicy};
use crate::toymodel::{
    calibrate_truncation, gen_basis, loss, qk_gradient_mc, qk_gradient_structured,
    sample_sequence, sgd_step, GradMethod, SampleMode, SpectrumSpec, ToyParams,
};

/// Which gradient drives the simulated dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientEngine {
    /// Self-consistent structured loop `∇_t = p·S(W_t)·B`.
    Structured,
    /// Factored Monte Carlo gradient on fresh batches, symmetrized.
    FactoredMc,
}

/// Simulation parameters.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub d: usize,
    pub seq_len: usize,
    pub eta: f64,
    pub steps: usize,
    pub spectrum: SpectrumSpec,
    pub engine: GradientEngine,
    /// Gradient prefactor for the structured engine.
    pub p_value: f64,
    /// Truncation threshold; `None` calibrates to ~50% untruncated.
    pub trunc_c: Option<f64>,
    /// Batch size for loss evaluation and Monte Carlo gradients.
    pub batch: usize,
    /// Gaussian init gain.
    pub gain: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            d: 32,
            seq_len: 128,
            eta: 0.1,
            steps: 200,
            spectrum: SpectrumSpec::Geometric { ratio: 0.5 },
            engine: GradientEngine::Structured,
            p_value: -1.0,
            trunc_c: None,
            batch: 16,
            gain: 1.0,
        }
    }
}

/// Detection-plus-protection settings for a simulated run.
#[derive(Debug, Clone)]
pub struct PssConfig {
    pub alpha: f64,
    pub tau: f64,
    pub policy: SmoothingPolicy,
}

/// One logged step. Metrics describe the state before the update; the
/// gradient norm belongs to the update applied from that state.
#[derive(Debug, Clone)]
pub struct SimRow {
    pub step: usize,
    pub loss: f64,
    pub grad_fro: f64,
    pub sr_wk: f64,
    pub sr_zk: f64,
    pub phi: f64,
    pub lambda1: f64,
    pub pss_triggered: bool,
}

/// Full trace of a run. A diverged run ends with one row of NaN metrics
/// and `diverged` set; that is a valid outcome for unprotected runs.
#[derive(Debug, Clone)]
pub struct SimTrace {
    pub rows: Vec<SimRow>,
    pub diverged: bool,
}

impl SimTrace {
    pub fn final_sr_wk(&self) -> Option<f64> {
        self.rows.iter().rev().map(|r| r.sr_wk).find(|v| v.is_finite())
    }

    pub fn max_grad_fro(&self) -> f64 {
        self.rows.iter().map(|r| r.grad_fro).filter(|v| v.is_finite()).fold(0.0, f64::max)
    }
}

/// Run the feedback-loop simulation, optionally protected.
pub fn run_curse_simulation(
    cfg: &SimConfig,
    pss: Option<&PssConfig>,
    rng: &mut RandomSource,
) -> Result<SimTrace> {
    if cfg.steps == 0 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    let basis = gen_basis(cfg.d, cfg.seq_len, &cfg.spectrum, rng)?;
    let mut params = ToyParams::random_init(cfg.d, cfg.gain, rng);
    let trunc_c = match cfg.trunc_c {
        Some(c) => c,
        None => calibrate_truncation(&params, &basis, 0.5, 32, rng)?,
    };
    let z = basis.z_matrix();

    // Fixed evaluation batch: the loss column is then a pure state metric,
    // constant when η = 0.
    let eval_batch: Vec<_> = (0..cfg.batch.max(1))
        .map(|_| sample_sequence(&basis, SampleMode::ZeroMean, rng))
        .collect();

    let mut trackers = BTreeMap::new();
    let mut policy = None;
    if let Some(p) = pss {
        trackers.insert("w_qk".to_string(), GradTracker::new(p.alpha, p.tau)?);
        policy = Some(p.policy.clone());
    }

    let mut rows: Vec<SimRow> = Vec::with_capacity(cfg.steps);
    let mut diverged = false;

    struct StepState {
        loss: f64,
        grad: DenseMatrix,
        grad_fro: f64,
        sr_wk: f64,
        sr_zk: f64,
        phi: f64,
        lambda1: f64,
    }

    for step in 0..cfg.steps {
        let state: Result<StepState> = (|params: &ToyParams, rng: &mut RandomSource| {
            let loss_t = loss(params, &eval_batch, trunc_c)?;
            let grad = match cfg.engine {
                GradientEngine::Structured => {
                    qk_gradient_structured(&params.w_qk, &basis, cfg.p_value)?.matrix
                }
                GradientEngine::FactoredMc => {
                    let batch: Vec<_> = (0..cfg.batch.max(1))
                        .map(|_| sample_sequence(&basis, SampleMode::ZeroMean, rng))
                        .collect();
                    qk_gradient_mc(params, &batch, trunc_c, GradMethod::Factored)?.symmetrized()
                }
            };
            let grad_fro = grad.fro_norm();
            if !loss_t.is_finite() || !grad_fro.is_finite() {
                return Err(Error::NonConvergence("non-finite loss or gradient".into()));
            }
            Ok(StepState {
                loss: loss_t,
                grad_fro,
                sr_wk: key_stable_rank(&params.w_qk)?,
                sr_zk: repr_singularity(&z, &params.w_qk)?,
                phi: singularity_alignment(&params.w_qk, &z)?.phi,
                lambda1: symmetric_eigenvalues(&params.w_qk)?[0],
                grad,
            })
        })(&params, rng);

        let StepState { loss: loss_t, grad, grad_fro, sr_wk, sr_zk, phi, lambda1 } = match state {
            Ok(v) => v,
            Err(_) => {
                rows.push(SimRow {
                    step,
                    loss: f64::NAN,
                    grad_fro: f64::NAN,
                    sr_wk: f64::NAN,
                    sr_zk: f64::NAN,
                    phi: f64::NAN,
                    lambda1: f64::NAN,
                    pss_triggered: false,
                });
                diverged = true;
                break;
            }
        };

        let mut pss_triggered = false;
        if let (Some(policy), false) = (policy.as_ref(), trackers.is_empty()) {
            let mut named_params = BTreeMap::new();
            named_params.insert("w_qk".to_string(), params.w_qk.clone());
            let mut named_grads = BTreeMap::new();
            named_grads.insert("w_qk".to_string(), grad.clone());
            let actions = pss_step(&mut trackers, &mut named_params, &named_grads, policy, rng)?;
            pss_triggered = actions.iter().any(|a| matches!(a, PssAction::Smoothed { .. }));
            params.w_qk = named_params.remove("w_qk").unwrap();
        }

        rows.push(SimRow { step, loss: loss_t, grad_fro, sr_wk, sr_zk, phi, lambda1, pss_triggered });

        match sgd_step(&params, &grad, cfg.eta) {
            Ok(next) => params = next,
            Err(_) => {
                rows.push(SimRow {
                    step: step + 1,
                    loss: f64::NAN,
                    grad_fro: f64::NAN,
                    sr_wk: f64::NAN,
                    sr_zk: f64::NAN,
                    phi: f64::NAN,
                    lambda1: f64::NAN,
                    pss_triggered: false,
                });
                diverged = true;
                break;
            }
        }
    }

    Ok(SimTrace { rows, diverged })
}

/// Spearman rank correlation (average ranks on ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut ranks = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                ranks[k] = avg;
            }
            i = j + 1;
        }
        ranks
    };
    let rx = rank(x);
    let ry = rank(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..x.len() {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx).powi(2);
        dy += (ry[i] - my).powi(2);
    }
    if dx == 0.0 || dy == 0.0 {
        return 0.0;
    }
    num / (dx * dy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v + ((v * 7.0).sin())).collect();
        assert!(spearman(&x, &y) > 0.95);
    }

    #[test]
    fn zero_eta_keeps_metrics_constant() {
        let cfg = SimConfig { eta: 0.0, steps: 8, d: 8, seq_len: 20, batch: 4, ..Default::default() };
        let mut rng = RandomSource::new(1);
        let trace = run_curse_simulation(&cfg, None, &mut rng).unwrap();
        assert!(!trace.diverged);
        assert_eq!(trace.rows.len(), 8);
        let first = &trace.rows[0];
        for row in &trace.rows {
            assert_eq!(row.loss.to_bits(), first.loss.to_bits());
            assert_eq!(row.sr_wk.to_bits(), first.sr_wk.to_bits());
            assert_eq!(row.sr_zk.to_bits(), first.sr_zk.to_bits());
            assert_eq!(row.phi.to_bits(), first.phi.to_bits());
            assert_eq!(row.lambda1.to_bits(), first.lambda1.to_bits());
            assert_eq!(row.grad_fro.to_bits(), first.grad_fro.to_bits());
        }
    }

    #[test]
    fn traces_are_bitwise_reproducible() {
        let cfg = SimConfig { d: 8, seq_len: 20, steps: 12, eta: 0.05, batch: 4, ..Default::default() };
        let run = || {
            let mut rng = RandomSource::new(42);
            run_curse_simulation(&cfg, None, &mut rng).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.rows.len(), b.rows.len());
        for (ra, rb) in a.rows.iter().zip(b.rows.iter()) {
            assert_eq!(ra.loss.to_bits(), rb.loss.to_bits());
            assert_eq!(ra.grad_fro.to_bits(), rb.grad_fro.to_bits());
            assert_eq!(ra.sr_wk.to_bits(), rb.sr_wk.to_bits());
        }
    }

    #[test]
    fn baseline_collapse_and_pss_rescue() {
        // Calibrate η so the first step moves λ₁ by ≥ 10%.
        let mut cfg = SimConfig { d: 16, seq_len: 48, steps: 80, batch: 4, ..Default::default() };
        let probe = {
            let mut rng = RandomSource::new(9);
            let basis = gen_basis(cfg.d, cfg.seq_len, &cfg.spectrum, &mut rng).unwrap();
            let params = ToyParams::random_init(cfg.d, cfg.gain, &mut rng);
            let g = qk_gradient_structured(&params.w_qk, &basis, cfg.p_value).unwrap();
            let lam1 = symmetric_eigenvalues(&params.w_qk).unwrap()[0];
            0.15 * lam1 / g.matrix.fro_norm()
        };
        cfg.eta = probe;

        let mut rng = RandomSource::new(9);
        let baseline = run_curse_simulation(&cfg, None, &mut rng).unwrap();
        let mut rng = RandomSource::new(9);
        let pss = PssConfig {
            alpha: 0.1,
            tau: 2.0,
            policy: SmoothingPolicy::SoftmaxTemp { beta: None },
        };
        let protected = run_curse_simulation(&cfg, Some(&pss), &mut rng).unwrap();

        let finite_rows = |t: &SimTrace| t.rows.iter().filter(|r| r.sr_wk.is_finite()).count();
        assert!(finite_rows(&baseline) > 10);

        // Baseline: stable rank collapses, gradient norms trend upward.
        let first_sr = baseline.rows[0].sr_wk;
        let last_sr = baseline.final_sr_wk().unwrap();
        assert!(last_sr < first_sr, "no collapse: {first_sr} -> {last_sr}");
        let steps: Vec<f64> = baseline
            .rows
            .iter()
            .filter(|r| r.grad_fro.is_finite())
            .map(|r| r.step as f64)
            .collect();
        let norms: Vec<f64> = baseline
            .rows
            .iter()
            .filter(|r| r.grad_fro.is_finite())
            .map(|r| r.grad_fro)
            .collect();
        assert!(spearman(&steps, &norms) >= 0.8);

        // Protection: strictly higher final stable rank, strictly smaller
        // worst gradient norm, and at least one smoothing action.
        assert!(protected.rows.iter().any(|r| r.pss_triggered));
        assert!(protected.final_sr_wk().unwrap() > last_sr);
        assert!(protected.max_grad_fro() < baseline.max_grad_fro());
    }

    #[test]
    fn mc_engine_runs_deterministically() {
        let cfg = SimConfig {
            d: 6,
            seq_len: 16,
            steps: 6,
            eta: 0.05,
            batch: 4,
            engine: GradientEngine::FactoredMc,
            ..Default::default()
        };
        let run = || {
            let mut rng = RandomSource::new(3);
            run_curse_simulation(&cfg, None, &mut rng).unwrap()
        };
        let (a, b) = (run(), run());
        for (ra, rb) in a.rows.iter().zip(b.rows.iter()) {
            assert_eq!(ra.grad_fro.to_bits(), rb.grad_fro.to_bits());
        }
    }
}
