//! Matrix file I/O: the SSM1 binary format (canonical, bit-exact) and a
//! headerless CSV form for hand-authored fixtures.
//!
//! SSM1 layout: 4-byte magic `SSM1`, `rows`/`cols` as 32-bit little-endian
//! unsigned integers, then `rows × cols` IEEE-754 doubles, little-endian,
//! row-major. File length must be exactly `12 + 8·rows·cols` bytes.

use std::fs;
use std::path::Path;

use spectral_sentinel::linalg::DenseMatrix;

pub const SSM1_MAGIC: &[u8; 4] = b"SSM1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Ssm1,
    Csv,
}

#[derive(Debug)]
pub struct MatIoError(pub String);

impl std::fmt::Display for MatIoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn read_matrix(path: &Path) -> Result<(DenseMatrix, MatrixFormat), MatIoError> {
    let bytes = fs::read(path)
        .map_err(|e| MatIoError(format!("cannot read {}: {e}", path.display())))?;
    if bytes.len() >= 4 && &bytes[..4] == SSM1_MAGIC {
        Ok((parse_ssm1(&bytes)?, MatrixFormat::Ssm1))
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| MatIoError(format!("{}: neither SSM1 nor UTF-8 CSV", path.display())))?;
        Ok((parse_csv(&text)?, MatrixFormat::Csv))
    }
}

pub fn write_matrix(
    path: &Path,
    m: &DenseMatrix,
    format: MatrixFormat,
) -> Result<(), MatIoError> {
    let bytes = match format {
        MatrixFormat::Ssm1 => encode_ssm1(m),
        MatrixFormat::Csv => encode_csv(m).into_bytes(),
    };
    fs::write(path, bytes)
        .map_err(|e| MatIoError(format!("cannot write {}: {e}", path.display())))
}

pub fn encode_ssm1(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * m.data().len());
    out.extend_from_slice(SSM1_MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for &x in m.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn parse_ssm1(bytes: &[u8]) -> Result<DenseMatrix, MatIoError> {
    if bytes.len() < 12 {
        return Err(MatIoError("SSM1 file shorter than its header".into()));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expect = 12usize
        .checked_add(8usize.saturating_mul(rows).saturating_mul(cols))
        .ok_or_else(|| MatIoError("SSM1 dimensions overflow".into()))?;
    if bytes.len() != expect {
        return Err(MatIoError(format!(
            "SSM1 length mismatch: {} bytes for {rows}x{cols} (expected {expect})",
            bytes.len()
        )));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for chunk in bytes[12..].chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    DenseMatrix::from_vec(rows, cols, data).map_err(|e| MatIoError(format!("SSM1 payload: {e}")))
}

pub fn parse_csv(text: &str) -> Result<DenseMatrix, MatIoError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| MatIoError(format!("line {}: bad number '{field}'", lineno + 1)))?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(MatIoError(format!(
                    "line {}: expected {} fields, got {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(MatIoError("empty CSV matrix".into()));
    }
    let (r, c) = (rows.len(), rows[0].len());
    DenseMatrix::from_vec(r, c, rows.concat()).map_err(|e| MatIoError(format!("CSV payload: {e}")))
}

pub fn encode_csv(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let fields: Vec<String> = m.row(i).iter().map(|x| format!("{x}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
