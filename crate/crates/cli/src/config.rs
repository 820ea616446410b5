//! Flat `key=value` configuration files for the verification lab.
//!
//! One assignment per line, `#` starts a comment, no nesting. CLI-provided
//! `key=value` overrides win over file values.

use spectral_sentinel::theoremlab::TheoremConfig;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn parse_kv_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!(
                "line {}: expected key=value, got '{line}'",
                lineno + 1
            )));
        };
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("key '{key}': bad number '{value}'")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("key '{key}': bad count '{value}'")))
}

/// Apply one assignment to a lab configuration.
pub fn apply_assignment(
    cfg: &mut TheoremConfig,
    key: &str,
    value: &str,
) -> Result<(), ConfigError> {
    match key {
        "d" => cfg.d = parse_usize(key, value)?,
        "t" => cfg.seq_len = parse_usize(key, value)?,
        "phi" => cfg.phi = parse_f64(key, value)?,
        "sr_z" => cfg.sr_z = parse_f64(key, value)?,
        "sr_wk" => cfg.sr_wk = parse_f64(key, value)?,
        "mu1" => cfg.mu1 = parse_f64(key, value)?,
        "lambda1" => cfg.lambda1 = parse_f64(key, value)?,
        "step_scale" => cfg.step_scale = parse_f64(key, value)?,
        "p_value" => cfg.p_value = parse_f64(key, value)?,
        "margin" => cfg.margin = parse_f64(key, value)?,
        "sequences" => cfg.sequences = parse_usize(key, value)?,
        "batch" => cfg.batch = parse_usize(key, value)?,
        "gain" => cfg.gain = parse_f64(key, value)?,
        "c" => {
            cfg.trunc_c = match value {
                "inf" | "infinite" => Some(f64::INFINITY),
                "auto" => None,
                other => Some(parse_f64(key, other)?),
            }
        }
        other => return Err(ConfigError(format!("unknown configuration key '{other}'"))),
    }
    Ok(())
}
