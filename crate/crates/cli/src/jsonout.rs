//! Fixed-format JSON output: keys in a fixed order, floats printed with 17
//! significant digits, so reports diff cleanly across runs and platforms.

/// 17-significant-digit float; NaN becomes the string "nan" (only legal on
/// diverged rows and undefined ratios).
pub fn fnum(x: f64) -> String {
    if x.is_nan() {
        "\"nan\"".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "\"inf\"".to_string() } else { "\"-inf\"".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn farr(xs: &[f64]) -> String {
    let fields: Vec<String> = xs.iter().map(|&x| fnum(x)).collect();
    format!("[{}]", fields.join(","))
}

pub fn fbool(b: bool) -> &'static str {
    if b { "true" } else { "false" }
}

pub fn fstr(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_17_significant_digits() {
        assert_eq!(fnum(1.0), "1.0000000000000000e0");
        assert_eq!(fnum(-0.5), "-5.0000000000000000e-1");
        assert_eq!(fnum(f64::NAN), "\"nan\"");
        // Round-trips exactly.
        let x = std::f64::consts::PI;
        let s = fnum(x);
        let back: f64 = s.parse().unwrap();
        assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn arrays_and_strings() {
        assert_eq!(farr(&[1.0, 2.0]), "[1.0000000000000000e0,2.0000000000000000e0]");
        assert_eq!(fstr("a\"b"), "\"a\\\"b\"");
    }
}
