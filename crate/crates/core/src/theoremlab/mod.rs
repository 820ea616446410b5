//! Numerical verification of the spectral-dynamics predictions.
//!
//! Five checks, each runnable over a list of seeds:
//!
//! - `sr` — under the structured gradient with a negative prefactor, one
//!   update decreases the key stable rank when
//!   `SR(W_K) > 1 + (SR(Z)−1)/φ²` holds with margin; per-eigenvalue shifts
//!   match first-order perturbation theory.
//! - `align` — the same update increases the alignment φ, and the
//!   first-order prediction error shrinks ~4× when η is halved.
//! - `repr` — the closed form
//!   `SR(Z_K) ≈ 1 + (SR(W_K)−1)(SR(Z)−1)/((d−1)φ²)` matches the measured
//!   value, and `SR(Z_K)` decreases after an update when the decrease
//!   condition holds with margin.
//! - `bounds` — `‖∇‖_F ≥ |K|·α₁·λ₁` holds exactly within the structured
//!   model, and `‖∇‖_F` grows strictly (but no faster than the bound) as
//!   λ₁ is scaled by {1, 2, 4}.
//! - `psign` — Monte Carlo probe of the gradient prefactor's sign. The
//!   estimator `(1/d)Σ s_i s_j P_ij` equals `(1/d)‖Σ s_i h_i‖²` per
//!   sequence, so the measured value is provably nonnegative; the check
//!   records whether the hypothesized negative sign survives (it cannot,
//!   except vacuously at `c = ∞` where the estimate is exactly zero).
//!
//! Checks verify signs, conditions, exact inner identities and convergence
//! orders; the unquantified asymptotic constants of the predictions are
//! never asserted.

mod simulate;

pub use simulate::{
    run_curse_simulation, spearman, GradientEngine, PssConfig, SimConfig, SimRow, SimTrace,
};

use crate::diagnostics::{key_stable_rank, repr_singularity};
use crate::error::{Error, Result};
use crate::linalg::{dot, symmetric_eigen, symmetric_eigenvalues, DenseMatrix, RandomSource};
use crate::toymodel::{
    calibrate_truncation, estimate_p, gen_basis, qk_gradient_structured, sample_sequence,
    sgd_step, SampleMode, SemanticBasis, SpectrumSpec, ToyParams,
};

/// Which check to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    SrAmplification,
    AlignmentAmplification,
    ReprSingularity,
    GradientBounds,
    PSign,
}

impl CheckKind {
    pub const ALL: [CheckKind; 5] = [
        CheckKind::SrAmplification,
        CheckKind::AlignmentAmplification,
        CheckKind::ReprSingularity,
        CheckKind::GradientBounds,
        CheckKind::PSign,
    ];

    pub fn parse(s: &str) -> Option<CheckKind> {
        match s {
            "sr" => Some(CheckKind::SrAmplification),
            "align" => Some(CheckKind::AlignmentAmplification),
            "repr" => Some(CheckKind::ReprSingularity),
            "bounds" => Some(CheckKind::GradientBounds),
            "psign" => Some(CheckKind::PSign),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::SrAmplification => "sr",
            CheckKind::AlignmentAmplification => "align",
            CheckKind::ReprSingularity => "repr",
            CheckKind::GradientBounds => "bounds",
            CheckKind::PSign => "psign",
        }
    }
}

/// Configuration of a lab run. Spectra are flat-tailed: the tail of μ is
/// sized to hit `sr_z`, the tail of λ to hit `sr_wk`, both with small
/// seeded jitter so different seeds probe different nearby states.
#[derive(Debug, Clone)]
pub struct TheoremConfig {
    pub d: usize,
    pub seq_len: usize,
    /// Alignment between v₁ and β₁ realized by construction.
    pub phi: f64,
    pub sr_z: f64,
    pub sr_wk: f64,
    pub mu1: f64,
    pub lambda1: f64,
    /// Step size as a fraction of λ₁/‖∇‖_F.
    pub step_scale: f64,
    /// Gradient prefactor fed to the structured form. The model's
    /// hypothesis is a negative value; the psign check probes it.
    pub p_value: f64,
    /// Margin demanded on top of the decrease conditions.
    pub margin: f64,
    /// Monte Carlo sequences for the psign probe.
    pub sequences: usize,
    /// Batch size for the bounds-check prefactor estimate.
    pub batch: usize,
    /// Gaussian init gain for toy parameters.
    pub gain: f64,
    /// Truncation threshold; `None` calibrates to ~50% untruncated,
    /// `Some(f64::INFINITY)` disables truncation.
    pub trunc_c: Option<f64>,
}

impl TheoremConfig {
    pub fn default_for(kind: CheckKind) -> TheoremConfig {
        let base = TheoremConfig {
            d: 32,
            seq_len: 64,
            phi: 0.95,
            sr_z: 1.25,
            sr_wk: 4.0,
            mu1: 1.0,
            lambda1: 1.0,
            step_scale: 1e-3,
            p_value: -1.0,
            margin: 0.5,
            sequences: 20_000,
            batch: 256,
            gain: 1.0,
            trunc_c: None,
        };
        match kind {
            CheckKind::SrAmplification | CheckKind::AlignmentAmplification => base,
            CheckKind::ReprSingularity => {
                let sr_z = 4.0;
                let phi = 0.95;
                TheoremConfig {
                    d: 128,
                    seq_len: 256,
                    sr_z,
                    sr_wk: 1.0 + 1.3 * phi * phi * (sr_z - 1.0) + 0.5,
                    step_scale: 1e-2,
                    ..base
                }
            }
            CheckKind::GradientBounds | CheckKind::PSign => {
                TheoremConfig { d: 16, seq_len: 64, ..base }
            }
        }
    }
}

/// Outcome of one check on one seed.
#[derive(Debug, Clone)]
pub struct TheoremReport {
    pub name: String,
    pub seed: u64,
    pub condition_satisfied: bool,
    pub predicted: f64,
    pub measured: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub sign_agrees: bool,
    /// Error ratio between step sizes η and η/2 where the check probes the
    /// convergence order.
    pub order_ratio: Option<f64>,
    /// A vacuous probe (e.g. the sign probe with truncation disabled)
    /// passes with a warning rather than failing.
    pub vacuous: bool,
    pub passed: bool,
}

/// Constructed lab state: a basis, a score matrix with prescribed
/// alignment and stable rank, and its exact eigensystem.
pub struct LabState {
    pub basis: SemanticBasis,
    pub w_qk: DenseMatrix,
    /// Eigenvalues descending; index 0 belongs to the rotated v₁.
    pub lambdas: Vec<f64>,
    /// Eigenvectors as columns, matching `lambdas`.
    pub vs: DenseMatrix,
    pub sr_wk: f64,
    pub sr_z: f64,
    pub phi: f64,
}

fn jittered_flat_tail(
    head: f64,
    tail_base: f64,
    count: usize,
    spread: f64,
    rng: &mut RandomSource,
) -> Vec<f64> {
    // Deterministic linear spread keeps adjacent values separated so the
    // eigenvalue order is stable under small perturbations; the seeded
    // jitter stays well below the spread step.
    let mut values = vec![head];
    for i in 0..count {
        let frac = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.5 };
        let lin = 1.0 + spread * (0.5 - frac);
        let jit = 1.0 + 0.1 * spread * (rng.uniform() - 0.5);
        values.push(tail_base * lin * jit);
    }
    let mut tail = values.split_off(1);
    tail.sort_by(|a, b| b.partial_cmp(a).unwrap());
    values.extend(tail);
    values
}

/// Build a lab state with the requested φ (Givens rotation of v₁ toward
/// β₂ in the {β₁, β₂} plane) and flat-tailed spectra.
pub fn build_state(cfg: &TheoremConfig, seed: u64) -> Result<LabState> {
    if !(cfg.phi > 0.0 && cfg.phi <= 1.0) {
        return Err(Error::Config(format!("phi must lie in (0, 1], got {}", cfg.phi)));
    }
    if cfg.sr_z <= 1.0 || cfg.sr_wk <= 1.0 {
        return Err(Error::Config("stable-rank targets must exceed 1".into()));
    }
    if cfg.d < 3 {
        return Err(Error::Config("lab states need d >= 3".into()));
    }
    let mut rng = RandomSource::new(seed);
    let d = cfg.d;

    let mu_tail = cfg.mu1 * ((cfg.sr_z - 1.0) / (d - 1) as f64).sqrt();
    let mus = jittered_flat_tail(cfg.mu1, mu_tail, d - 1, 0.1, &mut rng);
    let basis = gen_basis(d, cfg.seq_len, &SpectrumSpec::Explicit(mus), &mut rng)?;

    let lam_tail = cfg.lambda1 * (cfg.sr_wk - 1.0) / (d - 1) as f64;
    let lambdas = jittered_flat_tail(cfg.lambda1, lam_tail, d - 1, 0.2, &mut rng);

    // v₁ = cos(θ)β₁ + sin(θ)β₂, v₂ the orthogonal complement in the plane,
    // v_k = β_k elsewhere.
    let cos_t = cfg.phi;
    let sin_t = (1.0 - cfg.phi * cfg.phi).sqrt();
    let b1 = basis.beta(0);
    let b2 = basis.beta(1);
    let mut vs = DenseMatrix::zeros(d, d);
    for r in 0..d {
        vs.set(r, 0, cos_t * b1[r] + sin_t * b2[r]);
        vs.set(r, 1, -sin_t * b1[r] + cos_t * b2[r]);
    }
    for k in 2..d {
        vs.set_col(k, &basis.beta(k));
    }

    let mut w_qk = DenseMatrix::zeros(d, d);
    for k in 0..d {
        let v = vs.col_to_vec(k);
        let outer = DenseMatrix::outer(&v, &v);
        w_qk.add_assign_scaled(&outer, lambdas[k]);
    }
    let w_qk = w_qk.symmetrized();

    let sr_wk = lambdas.iter().sum::<f64>() / lambdas[0];
    let sr_z = basis.sr_z();
    Ok(LabState { basis, w_qk, lambdas, vs, sr_wk, sr_z, phi: cfg.phi })
}

fn wrap_params(w_qk: DenseMatrix) -> ToyParams {
    let d = w_qk.rows();
    ToyParams {
        w_qk,
        w_v: DenseMatrix::zeros(d, d),
        w_f1: DenseMatrix::zeros(d, d),
        w_f2: DenseMatrix::zeros(d, d),
    }
}

fn quad_form(m: &DenseMatrix, v: &[f64]) -> f64 {
    dot(v, &m.matvec(v))
}

/// Key-stable-rank decrease under one structured update.
pub fn check_sr_amplification(cfg: &TheoremConfig, seed: u64) -> Result<TheoremReport> {
    let state = build_state(cfg, seed)?;
    let condition_rhs = 1.0 + (state.sr_z - 1.0) / (state.phi * state.phi);
    let condition = state.sr_wk >= condition_rhs + cfg.margin;
    if !condition {
        return Err(Error::Config(format!(
            "decrease condition not met with margin: SR(W_K)={:.4} vs {:.4}+{}",
            state.sr_wk, condition_rhs, cfg.margin
        )));
    }

    let grad = qk_gradient_structured(&state.w_qk, &state.basis, cfg.p_value)?;
    let gnorm = grad.matrix.fro_norm();
    if gnorm == 0.0 {
        return Err(Error::Config("structured gradient vanished".into()));
    }
    let eta = cfg.step_scale * state.lambdas[0] / gnorm;

    // First-order prediction: Δλ_l = v_lᵀ(−η∇)v_l, then
    // ΔSR ≈ δA/B − A·δB/B².
    let d = cfg.d;
    let pred_dlam: Vec<f64> =
        (0..d).map(|l| -eta * quad_form(&grad.matrix, &state.vs.col_to_vec(l))).collect();
    let a: f64 = state.lambdas.iter().sum();
    let b = state.lambdas[0];
    let da: f64 = pred_dlam.iter().sum();
    let db = pred_dlam[0];
    let predicted_dsr = da / b - a * db / (b * b);

    let sr_before = key_stable_rank(&state.w_qk)?;
    let updated = sgd_step(&wrap_params(state.w_qk.clone()), &grad.matrix, eta)?;
    let sr_after = key_stable_rank(&updated.w_qk)?;
    let measured_dsr = sr_after - sr_before;

    let lam_after = symmetric_eigenvalues(&updated.w_qk)?;
    let mut max_rel = 0.0_f64;
    for l in 0..d {
        let meas = lam_after[l] - state.lambdas[l];
        let pred = pred_dlam[l];
        if pred.abs() > 1e-12 * state.lambdas[0] {
            max_rel = max_rel.max((meas - pred).abs() / pred.abs());
        }
    }

    let sign_agrees = measured_dsr < 0.0;
    Ok(TheoremReport {
        name: "sr".into(),
        seed,
        condition_satisfied: condition,
        predicted: predicted_dsr,
        measured: measured_dsr,
        abs_err: (measured_dsr - predicted_dsr).abs(),
        rel_err: max_rel,
        sign_agrees,
        order_ratio: None,
        vacuous: false,
        passed: condition && sign_agrees && max_rel <= 0.05,
    })
}

/// Alignment increase under one structured update, with convergence-order
/// probe at η and η/2.
pub fn check_alignment_amplification(cfg: &TheoremConfig, seed: u64) -> Result<TheoremReport> {
    if !(cfg.phi > 0.6 && cfg.phi < 0.99) {
        return Err(Error::Config(format!(
            "alignment check needs phi strictly inside (0.6, 0.99), got {}",
            cfg.phi
        )));
    }
    let state = build_state(cfg, seed)?;
    if state.lambdas[0] < 2.0 * state.lambdas[1] {
        return Err(Error::DegenerateInput(format!(
            "eigenvalue gap too small: λ₁/λ₂ = {:.3}",
            state.lambdas[0] / state.lambdas[1]
        )));
    }

    let grad = qk_gradient_structured(&state.w_qk, &state.basis, cfg.p_value)?;
    let gnorm = grad.matrix.fro_norm();
    let eta = cfg.step_scale * state.lambdas[0] / gnorm;
    let b1 = state.basis.beta(0);
    let v1 = state.vs.col_to_vec(0);

    // Δφ prediction: β₁ᵀ Σ_{k≠1} [v_kᵀ(−η∇)v₁/(λ₁−λ_k)] v_k.
    let predict = |eta: f64| -> f64 {
        let mut acc = 0.0;
        let gv1 = grad.matrix.matvec(&v1);
        for k in 1..cfg.d {
            let vk = state.vs.col_to_vec(k);
            let coupling = -eta * dot(&vk, &gv1) / (state.lambdas[0] - state.lambdas[k]);
            acc += coupling * dot(&b1, &vk);
        }
        acc
    };
    let measure = |eta: f64| -> Result<f64> {
        let updated = sgd_step(&wrap_params(state.w_qk.clone()), &grad.matrix, eta)?;
        let eig = symmetric_eigen(&updated.w_qk)?;
        Ok(dot(&b1, &eig.vectors.col_to_vec(0)).abs() - state.phi)
    };

    let (p1, m1) = (predict(eta), measure(eta)?);
    let (p2, m2) = (predict(eta / 2.0), measure(eta / 2.0)?);
    let (e1, e2) = ((m1 - p1).abs(), (m2 - p2).abs());
    let order_ratio = e1 / e2.max(f64::MIN_POSITIVE);

    let sign_agrees = m1 > 0.0;
    let order_ok = order_ratio >= 3.0 && order_ratio <= 5.0;
    Ok(TheoremReport {
        name: "align".into(),
        seed,
        condition_satisfied: true,
        predicted: p1,
        measured: m1,
        abs_err: e1,
        rel_err: if m1 != 0.0 { e1 / m1.abs() } else { f64::NAN },
        sign_agrees,
        order_ratio: Some(order_ratio),
        vacuous: false,
        passed: sign_agrees && order_ok,
    })
}

/// Closed-form representation stable rank and its decrease under one
/// structured update.
pub fn check_repr_singularity(cfg: &TheoremConfig, seed: u64) -> Result<TheoremReport> {
    if cfg.phi < 0.95 || cfg.d < 64 {
        return Err(Error::Config(
            "repr check needs the strong-alignment regime: phi >= 0.95, d >= 64".into(),
        ));
    }
    let mut rng = RandomSource::new(seed);
    let d = cfg.d;

    let mu_tail = cfg.mu1 * ((cfg.sr_z - 1.0) / (d - 1) as f64).sqrt();
    if cfg.mu1 / mu_tail < 3.0 {
        return Err(Error::Config(format!(
            "repr check needs a dominant spectrum, μ₁/μ₂ = {:.2} < 3",
            cfg.mu1 / mu_tail
        )));
    }
    let mus = jittered_flat_tail(cfg.mu1, mu_tail, d - 1, 0.04, &mut rng);
    let basis = gen_basis(d, cfg.seq_len, &SpectrumSpec::Explicit(mus), &mut rng)?;
    let sr_z = basis.sr_z();

    // W_QK = λ₁ v₁v₁ᵀ + c_iso (I − v₁v₁ᵀ), v₁ Givens-rotated toward β₂.
    let cos_t = cfg.phi;
    let sin_t = (1.0 - cfg.phi * cfg.phi).sqrt();
    let b1 = basis.beta(0);
    let b2 = basis.beta(1);
    let v1: Vec<f64> = (0..d).map(|r| cos_t * b1[r] + sin_t * b2[r]).collect();
    let c_iso = cfg.lambda1 * (cfg.sr_wk - 1.0) / (d - 1) as f64;
    let mut w_qk = DenseMatrix::identity(d).scaled(c_iso);
    let outer = DenseMatrix::outer(&v1, &v1);
    w_qk.add_assign_scaled(&outer, cfg.lambda1 - c_iso);
    let w_qk = w_qk.symmetrized();

    let sr_wk = key_stable_rank(&w_qk)?;
    // The exact trace-accounting decrease condition is
    // SR(W_K) > 1 + φ²(SR(Z)−1); it implies the looser prediction
    // condition SR(W_K) > 1 + φ²(SR(Z)−1)/(d−1)² by a wide margin.
    let phi2 = cfg.phi * cfg.phi;
    let exact_condition = sr_wk >= 1.0 + phi2 * (sr_z - 1.0) + cfg.margin * 0.8;
    let stated_condition = sr_wk > 1.0 + phi2 * (sr_z - 1.0) / ((d - 1) as f64).powi(2);
    if !exact_condition {
        return Err(Error::Config(format!(
            "decrease condition not met with margin: SR(W_K)={sr_wk:.3} vs 1+φ²(SR(Z)−1)={:.3}",
            1.0 + phi2 * (sr_z - 1.0)
        )));
    }

    let z = basis.z_matrix();
    let measured = repr_singularity(&z, &w_qk)?;
    let closed = 1.0 + (sr_wk - 1.0) * (sr_z - 1.0) / ((d - 1) as f64 * phi2);
    let rel_err = (closed - measured).abs() / measured;

    let grad = qk_gradient_structured(&w_qk, &basis, cfg.p_value)?;
    let eta = cfg.step_scale * cfg.lambda1 / grad.matrix.fro_norm();
    let updated = sgd_step(&wrap_params(w_qk), &grad.matrix, eta)?;
    let after = repr_singularity(&z, &updated.w_qk)?;
    let sign_agrees = after < measured;

    Ok(TheoremReport {
        name: "repr".into(),
        seed,
        condition_satisfied: stated_condition,
        predicted: closed,
        measured,
        abs_err: (closed - measured).abs(),
        rel_err,
        sign_agrees,
        order_ratio: None,
        vacuous: false,
        passed: stated_condition && rel_err <= 0.20 && sign_agrees,
    })
}

/// Lower bound `‖∇‖_F ≥ |K|·α₁·λ₁` and monotone λ₁ scaling.
pub fn check_gradient_bounds(cfg: &TheoremConfig, seed: u64) -> Result<TheoremReport> {
    let mut rng = RandomSource::new(seed);
    let d = cfg.d;
    let mu_tail = cfg.mu1 * ((cfg.sr_z - 1.0) / (d - 1) as f64).sqrt();
    let mus = jittered_flat_tail(cfg.mu1, mu_tail, d - 1, 0.1, &mut rng);
    let basis = gen_basis(d, cfg.seq_len, &SpectrumSpec::Explicit(mus), &mut rng)?;
    let params = ToyParams::random_init(d, cfg.gain, &mut rng);

    let c = match cfg.trunc_c {
        Some(c) => c,
        None => calibrate_truncation(&params, &basis, 0.5, 64, &mut rng)?,
    };
    let batch: Vec<_> =
        (0..cfg.batch.max(2)).map(|_| sample_sequence(&basis, SampleMode::ZeroMean, &mut rng)).collect();
    let est = estimate_p(&params, &batch, c)?;
    if est.p_hat.abs() < 3.0 * est.stderr || est.p_hat == 0.0 {
        // Prefactor indistinguishable from zero: inconclusive, not a failure.
        return Ok(TheoremReport {
            name: "bounds".into(),
            seed,
            condition_satisfied: false,
            predicted: 0.0,
            measured: est.p_hat,
            abs_err: est.stderr,
            rel_err: f64::NAN,
            sign_agrees: false,
            order_ratio: None,
            vacuous: true,
            passed: true,
        });
    }

    let eig = symmetric_eigen(&params.w_qk)?;
    let lam1 = eig.values[0];
    let v1 = eig.vectors.col_to_vec(0);
    let mut p_vec = vec![0.0; d];
    for r in 0..d {
        let beta = basis.beta(r);
        for (p, &b) in p_vec.iter_mut().zip(beta.iter()) {
            *p += basis.mus[r] * b;
        }
    }
    let alpha1 = dot(&v1, &p_vec).powi(2);
    let b_norm: f64 = basis.mus.iter().map(|m| m.powi(4)).sum::<f64>().sqrt();

    let grad = qk_gradient_structured(&params.w_qk, &basis, est.p_hat)?;
    let measured = grad.matrix.fro_norm();
    let bound = (est.p_hat * b_norm).abs() * alpha1 * lam1;
    let lower_ok = measured >= bound * (1.0 - 1e-9);
    // Term-by-term: S − λ₁α₁ = Σ_{k≥2} λ_k α_k ≥ 0 up to slack.
    let term_ok = grad.s_coefficient - lam1 * alpha1 >= -1e-12 * grad.s_coefficient.abs();

    // Scale λ₁ by {1, 2, 4} with the measured prefactor held fixed.
    let mut norms = vec![measured];
    for factor in [2.0, 4.0] {
        let mut w = params.w_qk.clone();
        let outer = DenseMatrix::outer(&v1, &v1);
        w.add_assign_scaled(&outer, (factor - 1.0) * lam1);
        let g = qk_gradient_structured(&w.symmetrized(), &basis, est.p_hat)?;
        norms.push(g.matrix.fro_norm());
    }
    let strictly_increasing = norms[1] > norms[0] && norms[2] > norms[1];
    // The upper bound grows linearly in λ₁: measured growth must not beat
    // it by more than 5%.
    let growth_ok = norms[1] / norms[0] <= 2.0 * 1.05 && norms[2] / norms[1] <= 2.0 * 1.05;

    Ok(TheoremReport {
        name: "bounds".into(),
        seed,
        condition_satisfied: true,
        predicted: bound,
        measured,
        abs_err: (measured - bound).abs(),
        rel_err: if measured != 0.0 { (measured - bound).abs() / measured } else { f64::NAN },
        sign_agrees: strictly_increasing,
        order_ratio: Some(norms[2] / norms[0]),
        vacuous: false,
        passed: lower_ok && term_ok && strictly_increasing && growth_ok,
    })
}

/// Monte Carlo sign probe for the gradient prefactor.
pub fn check_p_negativity(cfg: &TheoremConfig, seed: u64) -> Result<TheoremReport> {
    let mut rng = RandomSource::new(seed);
    let d = cfg.d;
    let mu_tail = cfg.mu1 * ((cfg.sr_z - 1.0) / (d - 1) as f64).sqrt();
    let mus = jittered_flat_tail(cfg.mu1, mu_tail, d - 1, 0.1, &mut rng);
    let basis = gen_basis(d, cfg.seq_len, &SpectrumSpec::Explicit(mus), &mut rng)?;
    let params = ToyParams::random_init(d, cfg.gain, &mut rng);
    let c = match cfg.trunc_c {
        Some(c) => c,
        None => calibrate_truncation(&params, &basis, 0.5, 64, &mut rng)?,
    };

    // Stream the sequences in chunks and pool the moments.
    let mut n_total = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut remaining = cfg.sequences.max(2);
    while remaining > 0 {
        let chunk = remaining.min(512).max(2);
        remaining = remaining.saturating_sub(chunk);
        let batch: Vec<_> = (0..chunk)
            .map(|_| sample_sequence(&basis, SampleMode::ZeroMean, &mut rng))
            .collect();
        let est = estimate_p(&params, &batch, c)?;
        let n_b = est.sequences as f64;
        let var_b = est.stderr * est.stderr * n_b;
        let m2_b = var_b * (n_b - 1.0);
        if n_total == 0 {
            n_total = est.sequences;
            mean = est.p_hat;
            m2 = m2_b;
        } else {
            let n_a = n_total as f64;
            let delta = est.p_hat - mean;
            let n_new = n_a + n_b;
            mean += delta * n_b / n_new;
            m2 += m2_b + delta * delta * n_a * n_b / n_new;
            n_total += est.sequences;
        }
    }
    let n = n_total as f64;
    let stderr = (m2 / (n - 1.0) / n).sqrt();

    let vacuous = mean == 0.0 && stderr == 0.0;
    let sign_agrees = mean + 3.0 * stderr < 0.0;
    Ok(TheoremReport {
        name: "psign".into(),
        seed,
        condition_satisfied: !vacuous,
        predicted: 0.0,
        measured: mean,
        abs_err: stderr,
        rel_err: if stderr > 0.0 { mean / stderr } else { f64::NAN },
        sign_agrees,
        order_ratio: None,
        vacuous,
        passed: vacuous || sign_agrees,
    })
}

/// Run one check kind over a list of seeds.
pub fn run_check(kind: CheckKind, cfg: &TheoremConfig, seeds: &[u64]) -> Result<Vec<TheoremReport>> {
    seeds
        .iter()
        .map(|&seed| match kind {
            CheckKind::SrAmplification => check_sr_amplification(cfg, seed),
            CheckKind::AlignmentAmplification => check_alignment_amplification(cfg, seed),
            CheckKind::ReprSingularity => check_repr_singularity(cfg, seed),
            CheckKind::GradientBounds => check_gradient_bounds(cfg, seed),
            CheckKind::PSign => check_p_negativity(cfg, seed),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_construction_hits_targets() {
        let cfg = TheoremConfig::default_for(CheckKind::SrAmplification);
        let state = build_state(&cfg, 7).unwrap();
        assert!((state.phi - 0.95).abs() < 1e-12);
        // Realized stable ranks sit near the targets despite jitter.
        assert!((state.sr_wk - cfg.sr_wk).abs() < 0.2);
        assert!((state.sr_z - cfg.sr_z).abs() < 0.05);
        // The construction really has v₁ at angle arccos(φ) from β₁.
        let eig = symmetric_eigen(&state.w_qk).unwrap();
        let phi = dot(&eig.vectors.col_to_vec(0), &state.basis.beta(0)).abs();
        assert!((phi - 0.95).abs() < 1e-9);
        // μ dominance demanded by the sr check: μ₁/μ₂ ≥ 10.
        assert!(state.basis.mus[0] / state.basis.mus[1] >= 10.0);
    }

    #[test]
    fn sr_check_passes_and_zero_step_is_exact() {
        let cfg = TheoremConfig::default_for(CheckKind::SrAmplification);
        let r = check_sr_amplification(&cfg, 1).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.measured < 0.0);
        assert!(r.rel_err <= 0.05);

        // η = 0: stable rank bitwise unchanged.
        let state = build_state(&cfg, 1).unwrap();
        let grad = qk_gradient_structured(&state.w_qk, &state.basis, cfg.p_value).unwrap();
        let updated = sgd_step(&wrap_params(state.w_qk.clone()), &grad.matrix, 0.0).unwrap();
        let before = key_stable_rank(&state.w_qk).unwrap();
        let after = key_stable_rank(&updated.w_qk).unwrap();
        assert_eq!(before.to_bits(), after.to_bits());
    }

    #[test]
    fn align_check_passes_with_second_order_ratio() {
        let cfg = TheoremConfig::default_for(CheckKind::AlignmentAmplification);
        let r = check_alignment_amplification(&cfg, 2).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.measured > 0.0);
        let ratio = r.order_ratio.unwrap();
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn align_check_rejects_boundary_phi() {
        let mut cfg = TheoremConfig::default_for(CheckKind::AlignmentAmplification);
        cfg.phi = 0.995;
        assert!(check_alignment_amplification(&cfg, 3).is_err());
    }

    #[test]
    fn repr_check_passes_and_rank_one_is_exact() {
        let cfg = TheoremConfig::default_for(CheckKind::ReprSingularity);
        let r = check_repr_singularity(&cfg, 4).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.rel_err <= 0.20);

        // SR(W_K) = 1 exactly (rank-one score matrix): closed form gives 1.
        let mut rng = RandomSource::new(5);
        let basis = gen_basis(
            64,
            130,
            &SpectrumSpec::Explicit(jittered_flat_tail(1.0, 0.1, 63, 0.05, &mut rng)),
            &mut rng,
        )
        .unwrap();
        let b1 = basis.beta(0);
        let w = DenseMatrix::outer(&b1, &b1).symmetrized();
        let z = basis.z_matrix();
        let measured = repr_singularity(&z, &w).unwrap();
        assert!((measured - 1.0).abs() < 1e-6, "measured {measured}");
    }

    #[test]
    fn bounds_check_passes() {
        let cfg = TheoremConfig::default_for(CheckKind::GradientBounds);
        let r = check_gradient_bounds(&cfg, 6).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(!r.vacuous);
        assert!(r.measured >= r.predicted * (1.0 - 1e-9));
    }

    #[test]
    fn bounds_equality_for_rank_one_score_matrix() {
        // S = λ₁α₁ exactly when the score matrix is rank one.
        let mut rng = RandomSource::new(8);
        let d = 8;
        let mus = jittered_flat_tail(1.0, 0.2, d - 1, 0.1, &mut rng);
        let basis = gen_basis(d, 20, &SpectrumSpec::Explicit(mus), &mut rng).unwrap();
        let v = crate::linalg::orthonormal_columns(d, 1, &mut rng).unwrap().col_to_vec(0);
        let w = DenseMatrix::outer(&v, &v).scaled(2.5).symmetrized();
        let grad = qk_gradient_structured(&w, &basis, -1.0).unwrap();
        let mut p_vec = vec![0.0; d];
        for r in 0..d {
            let beta = basis.beta(r);
            for (p, &b) in p_vec.iter_mut().zip(beta.iter()) {
                *p += basis.mus[r] * b;
            }
        }
        let alpha1 = dot(&v, &p_vec).powi(2);
        assert!((grad.s_coefficient - 2.5 * alpha1).abs() < 1e-10 * grad.s_coefficient.abs());
    }

    #[test]
    fn psign_vacuous_without_truncation() {
        let mut cfg = TheoremConfig::default_for(CheckKind::PSign);
        cfg.trunc_c = Some(f64::INFINITY);
        cfg.sequences = 200;
        let r = check_p_negativity(&cfg, 9).unwrap();
        assert!(r.vacuous);
        assert_eq!(r.measured, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn psign_measures_nonnegative_value_under_truncation() {
        // The estimator is a mean of squared norms; the hypothesized
        // negative sign cannot survive measurement.
        let mut cfg = TheoremConfig::default_for(CheckKind::PSign);
        cfg.sequences = 2_000;
        let r = check_p_negativity(&cfg, 10).unwrap();
        assert!(!r.vacuous);
        assert!(r.measured > 0.0);
        assert!(!r.sign_agrees);
        assert!(!r.passed);
    }

    #[test]
    fn run_check_produces_one_report_per_seed() {
        let cfg = TheoremConfig::default_for(CheckKind::SrAmplification);
        let reports = run_check(CheckKind::SrAmplification, &cfg, &[1, 2, 3]).unwrap();
        assert_eq!(reports.len(), 3);
        assert!(reports.iter().all(|r| r.passed));
    }
}
