//! One-layer attention sandbox.
//!
//! The model sees a sequence `X ∈ R^{T×d}` of tokens built on an
//! orthonormal *semantic basis* `{β_t}` with prominence weights `{μ_t}`,
//! and predicts the next token from the last position:
//!
//! ```text
//! ω = X · W_QK · x_T / √d          attention scores
//! S̃(ω) = Γᵀω + γ̃₀                  truncated-linear softmax
//! out  = W_F (W_V Xᵀ S̃(ω) + x_T)   with W_F = W_F2·W_F1 + I
//! J    = ½ E‖y − out‖²             squared next-token loss
//! ```
//!
//! The softmax is a first-order expansion at the origin whose slopes are
//! clipped to zero wherever the linearized term leaves `[−c, c]`. That
//! truncation is what makes the score-parameter gradient interesting: the
//! module provides it in brute-force (quadruple loop), factored
//! (`O(T·d²)`, exact same algebra) and structured closed form, plus a
//! finite-difference oracle over the true loss.

use crate::diagnostics::validated_score_eigenvalues;
use crate::error::{Error, Result};
use crate::linalg::{dot, orthonormal_columns, symmetric_eigen, DenseMatrix, RandomSource};

/// Brute-force gradient cap: the quadruple loop has `T⁴` terms.
pub const BRUTEFORCE_SEQ_CAP: usize = 16;
/// Finite-difference cap: `2·d²` loss evaluations.
pub const FD_DIM_CAP: usize = 32;

/// Singular-value profile for a semantic basis.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumSpec {
    /// `μ_t = ratio^(t−1)`, ratio in (0, 1].
    Geometric { ratio: f64 },
    /// Explicit positive non-increasing values, one per basis direction.
    Explicit(Vec<f64>),
}

impl SpectrumSpec {
    fn materialize(&self, d: usize) -> Result<Vec<f64>> {
        let mus = match self {
            SpectrumSpec::Geometric { ratio } => {
                if !(*ratio > 0.0 && *ratio <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "geometric ratio must lie in (0, 1], got {ratio}"
                    )));
                }
                (0..d).map(|t| ratio.powi(t as i32)).collect::<Vec<f64>>()
            }
            SpectrumSpec::Explicit(values) => {
                if values.len() != d {
                    return Err(Error::InvalidArgument(format!(
                        "explicit spectrum needs {d} values, got {}",
                        values.len()
                    )));
                }
                values.clone()
            }
        };
        for (i, &m) in mus.iter().enumerate() {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "spectrum values must be positive, got {m} at index {i}"
                )));
            }
            if i > 0 && m > mus[i - 1] {
                return Err(Error::InvalidArgument("spectrum must be non-increasing".into()));
            }
        }
        Ok(mus)
    }
}

/// Orthonormal semantic bases `{β_t}` (right) and `{α_t}` (left) with the
/// prominence spectrum `{μ_t}`; defines `Z = Σ μ_t α_t β_tᵀ` and the token
/// generator.
#[derive(Debug, Clone)]
pub struct SemanticBasis {
    pub d: usize,
    pub seq_len: usize,
    /// `d × d`, column `t` is β_t.
    pub betas: DenseMatrix,
    /// `seq_len × d`, column `t` is α_t.
    pub alphas: DenseMatrix,
    /// Non-increasing positive prominence values.
    pub mus: Vec<f64>,
}

impl SemanticBasis {
    /// The expected representation matrix `Z = alphas · diag(μ) · betasᵀ`.
    pub fn z_matrix(&self) -> DenseMatrix {
        let mut scaled = self.alphas.clone();
        for t in 0..self.d {
            for i in 0..self.seq_len {
                let x = scaled.at(i, t) * self.mus[t];
                scaled.set(i, t, x);
            }
        }
        scaled.matmul(&self.betas.transpose())
    }

    /// Implied stable rank `Σμ²/μ₁²` of `Z`.
    pub fn sr_z(&self) -> f64 {
        let top = self.mus[0];
        self.mus.iter().map(|m| (m / top) * (m / top)).sum()
    }

    /// Column `t` of the β basis.
    pub fn beta(&self, t: usize) -> Vec<f64> {
        self.betas.col_to_vec(t)
    }
}

/// Draw a semantic basis with `seq_len > d` and the given spectrum.
///
/// ```
/// use spectral_sentinel::linalg::RandomSource;
/// use spectral_sentinel::toymodel::{gen_basis, SpectrumSpec};
///
/// let mut rng = RandomSource::new(1);
/// let basis = gen_basis(4, 9, &SpectrumSpec::Geometric { ratio: 0.1 }, &mut rng).unwrap();
/// let expect: f64 = (0..4).map(|t| 0.01_f64.powi(t)).sum();
/// assert!((basis.sr_z() - expect).abs() < 1e-12);
/// ```
pub fn gen_basis(
    d: usize,
    seq_len: usize,
    spectrum: &SpectrumSpec,
    rng: &mut RandomSource,
) -> Result<SemanticBasis> {
    if seq_len <= d {
        return Err(Error::InvalidArgument(format!(
            "sequence length must exceed the dimension, got T={seq_len}, d={d}"
        )));
    }
    let mus = spectrum.materialize(d)?;
    let betas = orthonormal_columns(d, d, rng)?;
    let alphas = orthonormal_columns(seq_len, d, rng)?;
    Ok(SemanticBasis { d, seq_len, betas, alphas, mus })
}

/// How token coefficients are drawn around the spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleMode {
    /// `c_{i,t} = μ_t (1 + ζ ξ)`: coefficients with mean μ_t.
    MeanMu { zeta: f64 },
    /// `c_{i,t} = μ_t ξ`: zero-mean coefficients whose second moments
    /// carry the spectrum.
    ZeroMean,
}

/// One training sequence plus its next-token target.
#[derive(Debug, Clone)]
pub struct SequenceSample {
    /// `seq_len × d` token matrix.
    pub tokens: DenseMatrix,
    /// Target token `x_{T+1}`.
    pub target: Vec<f64>,
}

/// Sample a sequence (plus target) from the basis: `T + 1` tokens drawn by
/// the same coefficient rule, the last one becoming the target.
pub fn sample_sequence(
    basis: &SemanticBasis,
    mode: SampleMode,
    rng: &mut RandomSource,
) -> SequenceSample {
    let (t_len, d) = (basis.seq_len, basis.d);
    let mut coeffs = DenseMatrix::zeros(t_len + 1, d);
    for i in 0..=t_len {
        for t in 0..d {
            let xi = rng.normal();
            let c = match mode {
                SampleMode::MeanMu { zeta } => basis.mus[t] * (1.0 + zeta * xi),
                SampleMode::ZeroMean => basis.mus[t] * xi,
            };
            coeffs.set(i, t, c);
        }
    }
    let all = coeffs.matmul(&basis.betas.transpose());
    let tokens = DenseMatrix::from_fn(t_len, d, |i, j| all.at(i, j));
    let target = all.row(t_len).to_vec();
    SequenceSample { tokens, target }
}

/// Parameters of the one-layer model. `w_qk` is the joint score parameter,
/// kept symmetric positive semidefinite throughout training.
#[derive(Debug, Clone)]
pub struct ToyParams {
    pub w_qk: DenseMatrix,
    pub w_v: DenseMatrix,
    pub w_f1: DenseMatrix,
    pub w_f2: DenseMatrix,
}

impl ToyParams {
    /// Gaussian init: `W_V, W_F1, W_F2 ~ gain·G/√d` and `W_QK = GᵀG/d`,
    /// which is symmetric PSD by construction.
    pub fn random_init(d: usize, gain: f64, rng: &mut RandomSource) -> ToyParams {
        let scale = gain / (d as f64).sqrt();
        let g = DenseMatrix::gaussian(d, d, rng);
        let w_qk = g.transpose().matmul(&g).scaled(1.0 / d as f64).symmetrized();
        ToyParams {
            w_qk,
            w_v: DenseMatrix::gaussian(d, d, rng).scaled(scale),
            w_f1: DenseMatrix::gaussian(d, d, rng).scaled(scale),
            w_f2: DenseMatrix::gaussian(d, d, rng).scaled(scale),
        }
    }

    pub fn dim(&self) -> usize {
        self.w_qk.rows()
    }

    /// Materialize `W_F = W_F2·W_F1 + I`.
    pub fn w_f(&self) -> DenseMatrix {
        let mut wf = self.w_f2.matmul(&self.w_f1);
        for i in 0..wf.rows() {
            let x = wf.at(i, i) + 1.0;
            wf.set(i, i, x);
        }
        wf
    }
}

/// Truncated-linear softmax expansion at one score vector.
#[derive(Debug, Clone)]
pub struct SoftmaxApprox {
    /// Approximated attention weights `Γᵀω + γ̃₀`.
    pub s_tilde: Vec<f64>,
    /// `T × T` slope matrix; column `i` is the (truncated) coefficient
    /// vector γ̃^i.
    pub gamma: DenseMatrix,
    /// Constant term, `1/T` in every coordinate.
    pub gamma0: Vec<f64>,
}

/// Coefficients of the expansion: `(diag slope, off slope, bias)` where the
/// bias is the `γ^i_0/T = 1/T²` term entering the truncation test.
#[inline]
fn softmax_coeffs(t_len: usize) -> (f64, f64, f64) {
    let t = t_len as f64;
    ((t - 1.0) / (t * t), -1.0 / (t * t), 1.0 / (t * t))
}

/// Truncation pattern at a score vector: `diag[i]` keeps γ̃^i_i, `off[a]`
/// keeps γ̃^i_a for every i ≠ a (the off-diagonal test only involves a).
pub(crate) fn truncation_masks(omega: &[f64], c: f64) -> (Vec<bool>, Vec<bool>) {
    let (gd, go, bias) = softmax_coeffs(omega.len());
    let diag = omega.iter().map(|&w| (gd * w + bias).abs() <= c).collect();
    let off = omega.iter().map(|&w| (go * w + bias).abs() <= c).collect();
    (diag, off)
}

/// Piecewise-linear softmax approximation with slope clipping at `c`
/// (`c = +∞` disables truncation).
///
/// ```
/// use spectral_sentinel::toymodel::approx_softmax;
///
/// // T = 2, scores (t, 0), no truncation: weights (1/2 + t/4, 1/2 − t/4).
/// let sm = approx_softmax(&[0.3, 0.0], f64::INFINITY).unwrap();
/// assert!((sm.s_tilde[0] - 0.575).abs() < 1e-15);
/// assert!((sm.s_tilde[1] - 0.425).abs() < 1e-15);
/// ```
pub fn approx_softmax(omega: &[f64], c: f64) -> Result<SoftmaxApprox> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "truncation threshold must be positive, got {c}"
        )));
    }
    let t_len = omega.len();
    if t_len == 0 {
        return Err(Error::InvalidArgument("empty score vector".into()));
    }
    let (gd, go, _) = softmax_coeffs(t_len);
    let (diag, off) = truncation_masks(omega, c);
    let mut gamma = DenseMatrix::zeros(t_len, t_len);
    for a in 0..t_len {
        for i in 0..t_len {
            let v = if a == i {
                if diag[i] {
                    gd
                } else {
                    0.0
                }
            } else if off[a] {
                go
            } else {
                0.0
            };
            gamma.set(a, i, v);
        }
    }
    let gamma0 = vec![1.0 / t_len as f64; t_len];
    let s_tilde: Vec<f64> = (0..t_len)
        .map(|i| {
            let mut acc = gamma0[i];
            for a in 0..t_len {
                acc += gamma.at(a, i) * omega[a];
            }
            acc
        })
        .collect();
    Ok(SoftmaxApprox { s_tilde, gamma, gamma0 })
}

fn check_shapes(params: &ToyParams, x: &DenseMatrix) -> Result<usize> {
    let d = params.dim();
    if x.cols() != d
        || params.w_v.rows() != d
        || params.w_v.cols() != d
        || params.w_f1.rows() != d
        || params.w_f2.rows() != d
    {
        return Err(Error::InvalidArgument(format!(
            "inconsistent shapes: tokens are {}x{}, parameters are {d}-dimensional",
            x.rows(),
            x.cols()
        )));
    }
    Ok(d)
}

fn scores(w_qk: &DenseMatrix, x: &DenseMatrix) -> Vec<f64> {
    let d = w_qk.rows() as f64;
    let x_last = x.row(x.rows() - 1);
    let wxt = w_qk.matvec(x_last);
    (0..x.rows()).map(|i| dot(x.row(i), &wxt) / d.sqrt()).collect()
}

fn forward_with_wf(
    params: &ToyParams,
    wf: &DenseMatrix,
    x: &DenseMatrix,
    c: f64,
) -> Result<Vec<f64>> {
    let omega = scores(&params.w_qk, x);
    let sm = approx_softmax(&omega, c)?;
    let attn = x.matvec_t(&sm.s_tilde);
    let mut inner = params.w_v.matvec(&attn);
    let x_last = x.row(x.rows() - 1);
    for (v, &xl) in inner.iter_mut().zip(x_last.iter()) {
        *v += xl;
    }
    Ok(wf.matvec(&inner))
}

/// Model output for the last position.
pub fn forward(params: &ToyParams, x: &DenseMatrix, c: f64) -> Result<Vec<f64>> {
    check_shapes(params, x)?;
    forward_with_wf(params, &params.w_f(), x, c)
}

/// Batch-mean squared next-token loss `½‖y − out‖²`.
pub fn loss(params: &ToyParams, batch: &[SequenceSample], c: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let wf = params.w_f();
    let mut total = 0.0;
    for sample in batch {
        check_shapes(params, &sample.tokens)?;
        let out = forward_with_wf(params, &wf, &sample.tokens, c)?;
        total += 0.5
            * out
                .iter()
                .zip(sample.target.iter())
                .map(|(o, y)| (y - o) * (y - o))
                .sum::<f64>();
    }
    Ok(total / batch.len() as f64)
}

/// Gradient evaluation strategy for [`qk_gradient_mc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradMethod {
    /// Literal quadruple loop over (i, j, a, b); `T ≤ 16`.
    BruteForce,
    /// Algebraically identical regrouping in `O(T·d²)` per sequence.
    Factored,
}

/// Monte Carlo estimate of the score-parameter gradient
/// `(1/d) Σ_{i,j,a,b} E[γ̃^i_a γ̃^j_b P_ij (x_bᵀ W_QK x_T) x_a x_Tᵀ]`
/// over a batch of sequences.
pub fn qk_gradient_mc(
    params: &ToyParams,
    batch: &[SequenceSample],
    c: f64,
    method: GradMethod,
) -> Result<DenseMatrix> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let d = params.dim();
    let mut acc = DenseMatrix::zeros(d, d);
    match method {
        GradMethod::BruteForce => {
            let wf = params.w_f();
            for sample in batch {
                check_shapes(params, &sample.tokens)?;
                let t_len = sample.tokens.rows();
                if t_len > BRUTEFORCE_SEQ_CAP {
                    return Err(Error::Capacity(format!(
                        "brute-force gradient handles T <= {BRUTEFORCE_SEQ_CAP}, got {t_len}"
                    )));
                }
                let x = &sample.tokens;
                let omega = scores(&params.w_qk, x);
                let sm = approx_softmax(&omega, c)?;
                let x_last = x.row(t_len - 1).to_vec();
                let wxt = params.w_qk.matvec(&x_last);
                // m_i = W_F W_V x_i by two explicit matvecs.
                let m: Vec<Vec<f64>> =
                    (0..t_len).map(|i| wf.matvec(&params.w_v.matvec(x.row(i)))).collect();
                for i in 0..t_len {
                    for j in 0..t_len {
                        let p_ij = dot(&m[i], &m[j]);
                        for a in 0..t_len {
                            let gia = sm.gamma.at(a, i);
                            if gia == 0.0 {
                                continue;
                            }
                            for b in 0..t_len {
                                let gjb = sm.gamma.at(b, j);
                                if gjb == 0.0 {
                                    continue;
                                }
                                let weight = gia * gjb * p_ij * dot(x.row(b), &wxt);
                                if weight == 0.0 {
                                    continue;
                                }
                                let xa = x.row(a);
                                for r in 0..d {
                                    let wr = weight * xa[r];
                                    let row = acc.row_mut(r);
                                    for (cc, &xl) in row.iter_mut().zip(x_last.iter()) {
                                        *cc += wr * xl;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        GradMethod::Factored => {
            let wfv = params.w_f().matmul(&params.w_v);
            for sample in batch {
                check_shapes(params, &sample.tokens)?;
                let g_seq = factored_seq_gradient(params, &wfv, &sample.tokens, c)?;
                acc.add_assign_scaled(&g_seq, 1.0);
            }
        }
    }
    Ok(acc.scaled(1.0 / (d as f64 * batch.len() as f64)))
}

/// One sequence's gradient via the exact factorization
/// `G = [Σ_i g_i h_iᵀ]·[Σ_j h_j (g_jᵀ W_QK x_T)]·x_Tᵀ` with
/// `g_i = Σ_a γ̃^i_a x_a` and `h_i = W_F W_V x_i`. The γ̃ structure (the
/// off-diagonal truncation test only involves the column index) turns the
/// `g_i` into `O(T·d)` work, for `O(T·d²)` per sequence overall.
fn factored_seq_gradient(
    params: &ToyParams,
    wfv: &DenseMatrix,
    x: &DenseMatrix,
    c: f64,
) -> Result<DenseMatrix> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "truncation threshold must be positive, got {c}"
        )));
    }
    let d = params.dim();
    let t_len = x.rows();
    let omega = scores(&params.w_qk, x);
    let (gd, go, _) = softmax_coeffs(t_len);
    let (diag, off) = truncation_masks(&omega, c);

    // S_o = Σ_a [off a] x_a
    let mut s_off = vec![0.0; d];
    for a in 0..t_len {
        if off[a] {
            let row = x.row(a);
            for (s, &v) in s_off.iter_mut().zip(row.iter()) {
                *s += v;
            }
        }
    }

    let x_last = x.row(t_len - 1).to_vec();
    let wxt = params.w_qk.matvec(&x_last);

    // A = Σ_i g_i h_iᵀ and w = Σ_j h_j (g_jᵀ W_QK x_T), one pass.
    let mut a_mat = DenseMatrix::zeros(d, d);
    let mut w_vec = vec![0.0; d];
    let mut g_i = vec![0.0; d];
    for i in 0..t_len {
        let xi = x.row(i);
        let di = if diag[i] { gd } else { 0.0 };
        let oi = if off[i] { go } else { 0.0 };
        for r in 0..d {
            g_i[r] = di * xi[r] + go * s_off[r] - oi * xi[r];
        }
        let h_i = wfv.matvec(xi);
        for r in 0..d {
            let gr = g_i[r];
            if gr != 0.0 {
                let row = a_mat.row_mut(r);
                for (cc, &h) in row.iter_mut().zip(h_i.iter()) {
                    *cc += gr * h;
                }
            }
        }
        let q_i = dot(&g_i, &wxt);
        if q_i != 0.0 {
            for (w, &h) in w_vec.iter_mut().zip(h_i.iter()) {
                *w += q_i * h;
            }
        }
    }
    let aw = a_mat.matvec(&w_vec);
    Ok(DenseMatrix::outer(&aw, &x_last))
}

/// Monte Carlo estimate of the gradient prefactor
/// `P = (1/d) Σ_{i,j,a,b} E[γ̃^i_a γ̃^j_b P_ij]`.
#[derive(Debug, Clone)]
pub struct PEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub sequences: usize,
}

/// Per-sequence value `(1/d) Σ_{i,j} s_i s_j P_ij` with `s_i = Σ_a γ̃^i_a`,
/// averaged over the batch with its standard error. The row sums are
/// computed in integer form `s_i = [d_i(T−1) − u_i]/T²` so the untruncated
/// case cancels exactly.
///
/// Note the algebraic identity `Σ_{i,j} s_i s_j P_ij = ‖Σ_i s_i h_i‖²`:
/// the per-sequence value is nonnegative for every input, so the batch
/// mean can never be significantly negative. The sign probe in the
/// verification lab reports what this estimator actually measures.
pub fn estimate_p(params: &ToyParams, batch: &[SequenceSample], c: f64) -> Result<PEstimate> {
    if batch.len() < 2 {
        return Err(Error::InvalidArgument(
            "standard error needs at least two sequences".into(),
        ));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "truncation threshold must be positive, got {c}"
        )));
    }
    let d = params.dim();
    let wfv = params.w_f().matmul(&params.w_v);
    let mut values = Vec::with_capacity(batch.len());
    for sample in batch {
        check_shapes(params, &sample.tokens)?;
        let x = &sample.tokens;
        let t_len = x.rows();
        let omega = scores(&params.w_qk, x);
        let (diag, off) = truncation_masks(&omega, c);
        let off_total: i64 = off.iter().map(|&o| o as i64).sum();
        let t_sq = (t_len * t_len) as f64;
        let mut acc = vec![0.0; d];
        for i in 0..t_len {
            let u_i = off_total - off[i] as i64;
            let numer = if diag[i] { (t_len - 1) as i64 } else { 0 } - u_i;
            if numer == 0 {
                continue;
            }
            let s_i = numer as f64 / t_sq;
            let h_i = wfv.matvec(x.row(i));
            for (a, &h) in acc.iter_mut().zip(h_i.iter()) {
                *a += s_i * h;
            }
        }
        values.push(dot(&acc, &acc) / d as f64);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(PEstimate { p_hat: mean, stderr: (var / n).sqrt(), sequences: values.len() })
}

/// Closed-form gradient `p · S · Σ_t μ_t² β_t β_tᵀ` with the coefficient
/// `S = Σ_k λ_k (v_kᵀ p⃗)²`, `p⃗ = Σ_r μ_r β_r`, where `(λ_k, v_k)` are the
/// eigenpairs of the score matrix.
#[derive(Debug, Clone)]
pub struct StructuredGradient {
    pub matrix: DenseMatrix,
    /// The scalar `S` (audit record).
    pub s_coefficient: f64,
}

pub fn qk_gradient_structured(
    w_qk: &DenseMatrix,
    basis: &SemanticBasis,
    p_value: f64,
) -> Result<StructuredGradient> {
    if w_qk.rows() != basis.d {
        return Err(Error::InvalidArgument(format!(
            "score matrix dimension {} does not match basis dimension {}",
            w_qk.rows(),
            basis.d
        )));
    }
    let d = basis.d;
    if w_qk.is_zero() {
        return Ok(StructuredGradient { matrix: DenseMatrix::zeros(d, d), s_coefficient: 0.0 });
    }
    // Same symmetry/PSD contract as the key stable rank.
    validated_score_eigenvalues(w_qk)?;
    let eig = symmetric_eigen(w_qk)?;

    // p⃗ = Σ_r μ_r β_r
    let mut p_vec = vec![0.0; d];
    for r in 0..d {
        let beta = basis.betas.col_to_vec(r);
        for (p, &b) in p_vec.iter_mut().zip(beta.iter()) {
            *p += basis.mus[r] * b;
        }
    }
    let mut s = 0.0;
    for k in 0..d {
        let vk = eig.vectors.col_to_vec(k);
        let proj = dot(&vk, &p_vec);
        s += eig.values[k].max(0.0) * proj * proj;
    }

    // B = Σ_t μ_t² β_t β_tᵀ
    let mut b = DenseMatrix::zeros(d, d);
    for t in 0..d {
        let beta = basis.betas.col_to_vec(t);
        let w = basis.mus[t] * basis.mus[t];
        for r in 0..d {
            let wr = w * beta[r];
            if wr == 0.0 {
                continue;
            }
            let row = b.row_mut(r);
            for (cc, &bv) in row.iter_mut().zip(beta.iter()) {
                *cc += wr * bv;
            }
        }
    }
    Ok(StructuredGradient { matrix: b.scaled(p_value * s), s_coefficient: s })
}

/// Gradient step on the score matrix with PSD projection: subtract
/// `η·grad`, then clamp negative eigenvalues at zero (the score matrix
/// plays the role of a Gram-factor product and must stay PSD). Leaves the
/// matrix bitwise untouched when `η = 0`, and skips the eigen
/// reconstruction when the update is already PSD.
pub fn sgd_step(params: &ToyParams, grad: &DenseMatrix, eta: f64) -> Result<ToyParams> {
    if grad.rows() != params.dim() || grad.cols() != params.dim() {
        return Err(Error::InvalidArgument("gradient shape mismatch".into()));
    }
    if grad.asymmetry() > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "score gradient must be symmetric, asymmetry {:.3e}",
            grad.asymmetry()
        )));
    }
    let mut out = params.clone();
    if eta == 0.0 {
        return Ok(out);
    }
    let mut updated = params.w_qk.clone();
    updated.add_assign_scaled(grad, -eta);
    let eig = crate::linalg::symmetric_eigen(&updated.symmetrized())?;
    if *eig.values.last().unwrap() >= 0.0 {
        out.w_qk = updated;
        return Ok(out);
    }
    let clamped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let lam = DenseMatrix::from_diag(&clamped);
    out.w_qk = eig.vectors.matmul(&lam).matmul(&eig.vectors.transpose()).symmetrized();
    Ok(out)
}

/// Central-difference gradient of an arbitrary scalar functional of a
/// symmetric matrix: each symmetric coordinate pair (i, j), (j, i) is
/// perturbed together by ±h and the derivative halved off the diagonal,
/// yielding the symmetrized gradient.
pub fn fd_gradient_of(
    f: impl Fn(&DenseMatrix) -> Result<f64>,
    w0: &DenseMatrix,
    h: f64,
) -> Result<DenseMatrix> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    if w0.rows() != w0.cols() {
        return Err(Error::InvalidArgument("finite differences need a square matrix".into()));
    }
    let d = w0.rows();
    let mut grad = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let mut plus = w0.clone();
            let mut minus = w0.clone();
            plus.set(i, j, plus.at(i, j) + h);
            minus.set(i, j, minus.at(i, j) - h);
            if i != j {
                plus.set(j, i, plus.at(j, i) + h);
                minus.set(j, i, minus.at(j, i) - h);
            }
            let deriv = (f(&plus)? - f(&minus)?) / (2.0 * h);
            let value = if i == j { deriv } else { deriv / 2.0 };
            grad.set(i, j, value);
            grad.set(j, i, value);
        }
    }
    Ok(grad)
}

/// Finite-difference oracle for the loss as a function of the score
/// matrix; `d ≤ 32` keeps the `2d²` loss evaluations tractable.
pub fn fd_loss_gradient(
    params: &ToyParams,
    batch: &[SequenceSample],
    c: f64,
    h: f64,
) -> Result<DenseMatrix> {
    let d = params.dim();
    if d > FD_DIM_CAP {
        return Err(Error::Capacity(format!(
            "finite differences handle d <= {FD_DIM_CAP}, got {d}"
        )));
    }
    fd_gradient_of(
        |w| {
            let mut p = params.clone();
            p.w_qk = w.clone();
            loss(&p, batch, c)
        },
        &params.w_qk,
        h,
    )
}

/// Pick the truncation threshold so that the requested fraction of the
/// softmax slope tests stays un-truncated at initialization, under
/// zero-mean data: the empirical quantile of `|γ·ω + 1/T²|` over a seeded
/// calibration batch (the limit of bisecting on c).
pub fn calibrate_truncation(
    params: &ToyParams,
    basis: &SemanticBasis,
    target_untruncated: f64,
    calib_sequences: usize,
    rng: &mut RandomSource,
) -> Result<f64> {
    if !(target_untruncated > 0.0 && target_untruncated < 1.0) {
        return Err(Error::InvalidArgument(
            "target fraction must lie strictly between 0 and 1".into(),
        ));
    }
    if calib_sequences == 0 {
        return Err(Error::InvalidArgument("need at least one calibration sequence".into()));
    }
    let (gd, go, bias) = softmax_coeffs(basis.seq_len);
    let mut magnitudes = Vec::with_capacity(2 * basis.seq_len * calib_sequences);
    for _ in 0..calib_sequences {
        let sample = sample_sequence(basis, SampleMode::ZeroMean, rng);
        let omega = scores(&params.w_qk, &sample.tokens);
        for &w in &omega {
            magnitudes.push((gd * w + bias).abs());
            magnitudes.push((go * w + bias).abs());
        }
    }
    magnitudes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx =
        ((magnitudes.len() as f64 * target_untruncated) as usize).min(magnitudes.len() - 1);
    Ok(magnitudes[idx].max(f64::MIN_POSITIVE))
}
