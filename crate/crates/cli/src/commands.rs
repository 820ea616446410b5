//! Subcommand implementations. Each returns the process exit code:
//! 0 success, 1 verification failure, 2 usage/parse error, 3 degenerate
//! input, 4 simulated divergence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use spectral_sentinel::diagnostics::{singularity_alignment, stable_rank};
use spectral_sentinel::linalg::{DenseMatrix, RandomSource};
use spectral_sentinel::smoothing::{smooth_weights, SmoothingPolicy};
use spectral_sentinel::theoremlab::{
    run_check, run_curse_simulation, CheckKind, GradientEngine, PssConfig, SimConfig, SimTrace,
    TheoremConfig, TheoremReport,
};
use spectral_sentinel::toymodel::SpectrumSpec;
use spectral_sentinel::Error as CoreError;

use crate::config::{apply_assignment, parse_kv_text};
use crate::jsonout::{farr, fbool, fnum, fstr};
use crate::matio::{read_matrix, write_matrix, MatrixFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

type CmdResult = Result<i32, Failure>;

fn core_failure(err: CoreError) -> Failure {
    let code = match err {
        CoreError::DegenerateInput(_) | CoreError::DegenerateState(_) => EXIT_DEGENERATE,
        _ => EXIT_USAGE,
    };
    Failure { code, message: format!("{err}") }
}

// ── argument scanning ──────────────────────────────────────────────────

/// Minimal argv scanner: `--name value` pairs, bare switches from a fixed
/// list, everything else positional.
struct Args {
    positional: Vec<String>,
    values: BTreeMap<String, String>,
    switches: Vec<String>,
}

fn scan_args(argv: &[String], switch_names: &[&str]) -> Result<Args, Failure> {
    let mut positional = Vec::new();
    let mut values = BTreeMap::new();
    let mut switches = Vec::new();
    let mut i = 0;
    while i < argv.len() {
        let tok = &argv[i];
        if let Some(name) = tok.strip_prefix("--") {
            if switch_names.contains(&name) {
                switches.push(name.to_string());
                i += 1;
            } else {
                let value = argv
                    .get(i + 1)
                    .ok_or_else(|| Failure::usage(format!("flag --{name} needs a value")))?;
                values.insert(name.to_string(), value.clone());
                i += 2;
            }
        } else {
            positional.push(tok.clone());
            i += 1;
        }
    }
    Ok(Args { positional, values, switches })
}

impl Args {
    fn value(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(|s| s.as_str())
    }

    fn parsed<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>, Failure> {
        match self.value(name) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Failure::usage(format!("flag --{name}: bad value '{v}'"))),
        }
    }

    fn has_switch(&self, name: &str) -> bool {
        self.switches.iter().any(|s| s == name)
    }
}

/// Seed resolution: flag wins, then SPECTRAL_SENTINEL_SEED, then 0.
fn resolve_seed(args: &Args) -> Result<u64, Failure> {
    if let Some(seed) = args.parsed::<u64>("seed")? {
        return Ok(seed);
    }
    match std::env::var("SPECTRAL_SENTINEL_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| Failure::usage(format!("SPECTRAL_SENTINEL_SEED: bad seed '{v}'"))),
        Err(_) => Ok(0),
    }
}

fn parse_policy(name: &str, params: Option<&str>) -> Result<SmoothingPolicy, Failure> {
    match name {
        "conv" => {
            let spec = params.unwrap_or("0.25,0.5,0.25");
            let kernel: Result<Vec<f64>, _> = spec.split(',').map(|s| s.trim().parse()).collect();
            let kernel =
                kernel.map_err(|_| Failure::usage(format!("bad convolution kernel '{spec}'")))?;
            Ok(SmoothingPolicy::Convolution { kernel })
        }
        "softmax" => {
            let beta = match params {
                None | Some("auto") => None,
                Some(spec) => {
                    let v = spec
                        .strip_prefix("beta=")
                        .unwrap_or(spec)
                        .parse()
                        .map_err(|_| Failure::usage(format!("bad softmax parameter '{spec}'")))?;
                    Some(v)
                }
            };
            Ok(SmoothingPolicy::SoftmaxTemp { beta })
        }
        "clip" => {
            let rho = match params {
                None => 1.0,
                Some(spec) => spec
                    .strip_prefix("rho=")
                    .unwrap_or(spec)
                    .parse()
                    .map_err(|_| Failure::usage(format!("bad clip parameter '{spec}'")))?,
            };
            Ok(SmoothingPolicy::Clip { rho })
        }
        "log" => Ok(SmoothingPolicy::LogScale),
        other => Err(Failure::usage(format!("unknown smoothing policy '{other}'"))),
    }
}

fn parse_spectrum(spec: &str) -> Result<SpectrumSpec, Failure> {
    if let Some(r) = spec.strip_prefix("geometric:") {
        let ratio =
            r.parse().map_err(|_| Failure::usage(format!("bad geometric ratio '{r}'")))?;
        Ok(SpectrumSpec::Geometric { ratio })
    } else if let Some(list) = spec.strip_prefix("explicit:") {
        let values: Result<Vec<f64>, _> = list.split(',').map(|s| s.trim().parse()).collect();
        let values =
            values.map_err(|_| Failure::usage(format!("bad explicit spectrum '{list}'")))?;
        Ok(SpectrumSpec::Explicit(values))
    } else {
        Err(Failure::usage(format!(
            "spectrum must be geometric:<ratio> or explicit:<v1,v2,...>, got '{spec}'"
        )))
    }
}

// ── diagnose ───────────────────────────────────────────────────────────

pub fn cmd_diagnose(argv: &[String]) -> CmdResult {
    let args = scan_args(argv, &[])?;
    let path = args
        .positional
        .first()
        .ok_or_else(|| Failure::usage("usage: diagnose <matrix> [--alignment-with <matrix>]"))?;
    let (matrix, _) = read_matrix(Path::new(path)).map_err(|e| Failure::usage(e.0))?;
    let report = stable_rank(&matrix).map_err(core_failure)?;

    let mut fields = vec![
        format!("\"fro_norm\":{}", fnum(report.fro_norm)),
        format!("\"sigma_top\":{}", fnum(report.sigma_top)),
        format!("\"stable_rank\":{}", fnum(report.stable_rank)),
    ];
    if let Some(other) = args.value("alignment-with") {
        let (z, _) = read_matrix(Path::new(other)).map_err(|e| Failure::usage(e.0))?;
        let alignment = singularity_alignment(&matrix, &z).map_err(core_failure)?;
        fields.push(format!("\"phi\":{}", fnum(alignment.phi)));
    }
    println!("{{{}}}", fields.join(","));
    Ok(EXIT_OK)
}

// ── smooth ─────────────────────────────────────────────────────────────

pub fn cmd_smooth(argv: &[String]) -> CmdResult {
    let args = scan_args(argv, &["exact"])?;
    let path = args.positional.first().ok_or_else(|| {
        Failure::usage("usage: smooth <matrix> --policy <name> [--params <spec>] --out <path>")
    })?;
    let policy_name =
        args.value("policy").ok_or_else(|| Failure::usage("smooth requires --policy"))?;
    let policy = parse_policy(policy_name, args.value("params"))?;
    let out_path =
        args.value("out").ok_or_else(|| Failure::usage("smooth requires --out <path>"))?;
    let seed = resolve_seed(&args)?;
    let exact = args.has_switch("exact");

    let (matrix, format) = read_matrix(Path::new(path)).map_err(|e| Failure::usage(e.0))?;
    let mut rng = RandomSource::new(seed);
    let (smoothed, outcome) =
        smooth_weights(&matrix, &policy, &mut rng, exact).map_err(core_failure)?;
    write_matrix(Path::new(out_path), &smoothed, format)
        .map_err(|e| Failure::usage(e.0))?;

    println!(
        "{{\"k\":{},\"policy\":{},\"sigma_before\":{},\"sigma_after\":{},\"sr_before\":{},\"sr_after\":{}}}",
        outcome.k,
        fstr(&outcome.policy),
        farr(&outcome.sigma_before),
        farr(&outcome.sigma_after),
        fnum(outcome.sr_before),
        fnum(outcome.sr_after),
    );
    Ok(EXIT_OK)
}

// ── simulate ───────────────────────────────────────────────────────────

fn csv_field(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x}")
    }
}

pub fn trace_to_csv(trace: &SimTrace) -> String {
    let mut out = String::from("step,loss,grad_fro,sr_wk,sr_zk,phi,lambda1,pss_triggered\n");
    for row in &trace.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.step,
            csv_field(row.loss),
            csv_field(row.grad_fro),
            csv_field(row.sr_wk),
            csv_field(row.sr_zk),
            csv_field(row.phi),
            csv_field(row.lambda1),
            if row.pss_triggered { 1 } else { 0 },
        ));
    }
    out
}

pub fn cmd_simulate(argv: &[String]) -> CmdResult {
    let args = scan_args(argv, &[])?;
    let mut cfg = SimConfig::default();
    if let Some(d) = args.parsed::<usize>("d")? {
        cfg.d = d;
    }
    if let Some(t) = args.parsed::<usize>("t")? {
        cfg.seq_len = t;
    }
    if let Some(eta) = args.parsed::<f64>("eta")? {
        cfg.eta = eta;
    }
    if let Some(steps) = args.parsed::<usize>("steps")? {
        cfg.steps = steps;
    }
    if let Some(batch) = args.parsed::<usize>("batch")? {
        cfg.batch = batch;
    }
    if let Some(p) = args.parsed::<f64>("p-value")? {
        cfg.p_value = p;
    }
    if let Some(c) = args.value("c") {
        cfg.trunc_c = match c {
            "auto" => None,
            "inf" => Some(f64::INFINITY),
            other => Some(
                other
                    .parse()
                    .map_err(|_| Failure::usage(format!("bad truncation threshold '{other}'")))?,
            ),
        };
    }
    if let Some(spec) = args.value("spectrum") {
        cfg.spectrum = parse_spectrum(spec)?;
    }
    if let Some(engine) = args.value("engine") {
        cfg.engine = match engine {
            "structured" => GradientEngine::Structured,
            "mc" => GradientEngine::FactoredMc,
            other => return Err(Failure::usage(format!("unknown engine '{other}'"))),
        };
    }
    let trace_path = args
        .value("trace")
        .ok_or_else(|| Failure::usage("simulate requires --trace <out.csv>"))?
        .to_string();
    let seed = resolve_seed(&args)?;

    let pss = match args.value("pss").unwrap_or("off") {
        "off" => None,
        "on" => {
            let alpha = args.parsed::<f64>("alpha")?.unwrap_or(0.1);
            let tau = args.parsed::<f64>("tau")?.unwrap_or(2.0);
            let policy = parse_policy(
                args.value("policy").unwrap_or("softmax"),
                args.value("params"),
            )?;
            Some(PssConfig { alpha, tau, policy })
        }
        other => return Err(Failure::usage(format!("--pss takes on|off, got '{other}'"))),
    };

    let mut rng = RandomSource::new(seed);
    let trace = run_curse_simulation(&cfg, pss.as_ref(), &mut rng).map_err(core_failure)?;
    std::fs::write(PathBuf::from(&trace_path), trace_to_csv(&trace))
        .map_err(|e| Failure::usage(format!("cannot write {trace_path}: {e}")))?;
    if trace.diverged {
        eprintln!("simulate: run diverged; trace marked with a final nan row");
        Ok(EXIT_DIVERGED)
    } else {
        Ok(EXIT_OK)
    }
}

// ── verify ─────────────────────────────────────────────────────────────

fn report_json(r: &TheoremReport) -> String {
    let order = match r.order_ratio {
        Some(v) => fnum(v),
        None => "null".to_string(),
    };
    format!(
        "{{\"name\":{},\"seed\":{},\"condition_satisfied\":{},\"predicted\":{},\"measured\":{},\"abs_err\":{},\"rel_err\":{},\"sign_agrees\":{},\"order_ratio\":{},\"vacuous\":{},\"passed\":{}}}",
        fstr(&r.name),
        r.seed,
        fbool(r.condition_satisfied),
        fnum(r.predicted),
        fnum(r.measured),
        fnum(r.abs_err),
        fnum(r.rel_err),
        fbool(r.sign_agrees),
        order,
        fbool(r.vacuous),
        fbool(r.passed),
    )
}

pub fn cmd_verify(argv: &[String]) -> CmdResult {
    let args = scan_args(argv, &[])?;
    let which = args.value("theorem").unwrap_or("all");
    let kinds: Vec<CheckKind> = if which == "all" {
        CheckKind::ALL.to_vec()
    } else {
        vec![CheckKind::parse(which)
            .ok_or_else(|| Failure::usage(format!("unknown theorem '{which}'")))?]
    };
    let seeds_n: usize = args.parsed::<usize>("seeds")?.unwrap_or(1);
    if seeds_n == 0 {
        return Err(Failure::usage("--seeds must be at least 1"));
    }
    let seeds: Vec<u64> = (1..=seeds_n as u64).collect();

    let file_kvs = match args.value("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read {path}: {e}")))?;
            parse_kv_text(&text).map_err(|e| Failure::usage(e.0))?
        }
        None => Vec::new(),
    };
    let overrides: Vec<(String, String)> = args
        .positional
        .iter()
        .map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Failure::usage(format!("expected key=value override, got '{tok}'")))
        })
        .collect::<Result<_, _>>()?;

    let mut reports = Vec::new();
    for kind in &kinds {
        let mut cfg = TheoremConfig::default_for(*kind);
        for (k, v) in file_kvs.iter().chain(overrides.iter()) {
            apply_assignment(&mut cfg, k, v).map_err(|e| Failure::usage(e.0))?;
        }
        let mut batch = run_check(*kind, &cfg, &seeds).map_err(core_failure)?;
        reports.append(&mut batch);
    }

    let body: Vec<String> = reports.iter().map(report_json).collect();
    println!("[{}]", body.join(","));

    let passed = reports.iter().filter(|r| r.passed).count();
    let vacuous = reports.iter().filter(|r| r.vacuous).count();
    eprintln!("verify: {passed}/{} passed", reports.len());
    if vacuous > 0 {
        eprintln!("verify: warning: {vacuous} vacuous report(s) counted as passed");
    }
    if passed == reports.len() {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_VERIFY_FAIL)
    }
}

// ── gen-matrix ─────────────────────────────────────────────────────────

pub fn cmd_gen_matrix(argv: &[String]) -> CmdResult {
    let args = scan_args(argv, &[])?;
    let kind = args.value("kind").ok_or_else(|| {
        Failure::usage("usage: gen-matrix --kind gaussian|diag:v1,v2,...|lowrank:k --out <path>")
    })?;
    let out = args
        .value("out")
        .ok_or_else(|| Failure::usage("gen-matrix requires --out <path>"))?
        .to_string();
    let seed = resolve_seed(&args)?;
    let format = match args.value("format").unwrap_or("ssm1") {
        "ssm1" => MatrixFormat::Ssm1,
        "csv" => MatrixFormat::Csv,
        other => return Err(Failure::usage(format!("unknown format '{other}'"))),
    };
    let rows = args.parsed::<usize>("rows")?;
    let cols = args.parsed::<usize>("cols")?;

    let matrix = if kind == "gaussian" {
        let r = rows.ok_or_else(|| Failure::usage("gaussian needs --rows"))?;
        let c = cols.ok_or_else(|| Failure::usage("gaussian needs --cols"))?;
        DenseMatrix::gaussian(r, c, &mut RandomSource::new(seed))
    } else if let Some(list) = kind.strip_prefix("diag:") {
        let values: Result<Vec<f64>, _> = list.split(',').map(|s| s.trim().parse()).collect();
        let values =
            values.map_err(|_| Failure::usage(format!("bad diagonal values '{list}'")))?;
        if values.is_empty() {
            return Err(Failure::usage("diag needs at least one value"));
        }
        let r = rows.unwrap_or(values.len());
        let c = cols.unwrap_or(values.len());
        if values.len() > r.min(c) {
            return Err(Failure::usage(format!(
                "{} diagonal values do not fit a {r}x{c} matrix",
                values.len()
            )));
        }
        let mut m = DenseMatrix::zeros(r, c);
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    } else if let Some(k) = kind.strip_prefix("lowrank:") {
        let k: usize = k.parse().map_err(|_| Failure::usage(format!("bad rank '{k}'")))?;
        let r = rows.ok_or_else(|| Failure::usage("lowrank needs --rows"))?;
        let c = cols.ok_or_else(|| Failure::usage("lowrank needs --cols"))?;
        if k == 0 || k > r.min(c) {
            return Err(Failure::usage(format!("rank {k} out of range for {r}x{c}")));
        }
        let mut rng = RandomSource::new(seed);
        let mut m = DenseMatrix::zeros(r, c);
        for _ in 0..k {
            let mut u = vec![0.0; r];
            let mut v = vec![0.0; c];
            rng.fill_normal(&mut u);
            rng.fill_normal(&mut v);
            let outer = DenseMatrix::outer(&u, &v);
            m.add_assign_scaled(&outer, 1.0 / (k as f64).sqrt());
        }
        m
    } else {
        return Err(Failure::usage(format!("unknown matrix kind '{kind}'")));
    };

    write_matrix(Path::new(&out), &matrix, format).map_err(|e| Failure::usage(e.0))?;
    Ok(EXIT_OK)
}
