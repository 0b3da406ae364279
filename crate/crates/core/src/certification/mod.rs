//! Ingestion of measured covariance matrices, certification reports and
//! Monte Carlo propagation of element-wise measurement errors.
//!
//! # File format
//!
//! UTF-8 text. Lines starting with `#` are comments; a comment of the form
//! `# label: NAME` sets the label. The first block of non-comment lines is a
//! whitespace-separated 2n×2n matrix in row-major order. An optional second
//! block, introduced by a line reading `SIGMA`, holds per-element standard
//! errors in the same layout. Numbers use a decimal point and no thousands
//! separators.

mod montecarlo;
mod report;

pub use montecarlo::{
    certify, monte_carlo_eigs, monte_carlo_samples, EntryUncertainty, Spread, Uncertainty,
    MIN_DRAWS, QUANTITIES,
};
pub use report::{render_report, CertificationReport, ReportFormat, CSV_HEADER, REPORT_SCHEMA};

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, ParseError, Result};
use crate::gaussian::CovarianceMatrix;

/// Asymmetry above which parsing warns before symmetrizing.
pub const ASYMMETRY_WARN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredCM {
    pub cm: CovarianceMatrix,
    /// Per-element standard errors, symmetric and nonnegative.
    pub sigma: Option<DMatrix<f64>>,
    pub label: String,
    pub warnings: Vec<String>,
}

impl MeasuredCM {
    pub fn new(cm: CovarianceMatrix, label: impl Into<String>) -> Self {
        Self {
            cm,
            sigma: None,
            label: label.into(),
            warnings: Vec::new(),
        }
    }

    pub fn with_uniform_sigma(mut self, sigma: f64) -> Self {
        let d = self.cm.dim();
        self.sigma = Some(DMatrix::from_element(d, d, sigma));
        self
    }

    /// Sets `sigma` after checking shape, sign and symmetry.
    pub fn with_sigma(mut self, sigma: DMatrix<f64>) -> Result<Self> {
        let d = self.cm.dim();
        if sigma.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: sigma.nrows(),
            });
        }
        if sigma.iter().any(|&s| !(s >= 0.0)) {
            return Err(Error::NegativeVariance(sigma.min()));
        }
        let asym = (&sigma - sigma.transpose()).amax();
        if asym > 0.0 {
            return Err(Error::NotSymmetric(asym));
        }
        self.sigma = Some(sigma);
        Ok(self)
    }
}

struct Cell {
    value: f64,
    line: usize,
    column: usize,
}

struct Block {
    rows: Vec<Vec<Cell>>,
    last_line: usize,
}

impl Block {
    fn new() -> Self {
        Self {
            rows: Vec::new(),
            last_line: 0,
        }
    }

    fn push_row(&mut self, line_no: usize, line: &str) -> Result<(), ParseError> {
        let mut row = Vec::new();
        let mut rest = line;
        let mut offset = 0;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            let tail = &rest[start..];
            let end = tail.find(char::is_whitespace).unwrap_or(tail.len());
            let token = &tail[..end];
            let column = line[..offset + start].chars().count() + 1;
            let value: f64 = token
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| {
                    ParseError::new(line_no, column, format!("invalid number '{token}'"))
                })?;
            row.push(Cell {
                value,
                line: line_no,
                column,
            });
            offset += start + end;
            rest = &tail[end..];
        }
        if let Some(first) = self.rows.first() {
            if first.len() != row.len() {
                return Err(ParseError::new(
                    line_no,
                    1,
                    format!("row has {} entries, expected {}", row.len(), first.len()),
                ));
            }
        }
        self.rows.push(row);
        self.last_line = line_no;
        Ok(())
    }

    fn into_matrix(self, what: &str) -> Result<(DMatrix<f64>, Vec<Vec<Cell>>), ParseError> {
        let n_rows = self.rows.len();
        if n_rows == 0 {
            return Err(ParseError::new(
                self.last_line.max(1),
                1,
                format!("{what} block is empty"),
            ));
        }
        let n_cols = self.rows[0].len();
        if n_rows != n_cols {
            return Err(ParseError::new(
                self.last_line,
                1,
                format!("{what} is not square ({n_rows}x{n_cols})"),
            ));
        }
        if !n_rows.is_multiple_of(2) {
            return Err(ParseError::new(
                self.last_line,
                1,
                format!("{what} dimension {n_rows} is odd; expected (x, p) pairs"),
            ));
        }
        let m = DMatrix::from_fn(n_rows, n_cols, |r, c| self.rows[r][c].value);
        Ok((m, self.rows))
    }
}

/// Parses the covariance-matrix file format (see the module docs).
pub fn parse_cm(text: &str) -> Result<MeasuredCM, ParseError> {
    let mut label = String::new();
    let mut matrix = Block::new();
    let mut sigma: Option<Block> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        let trimmed = line.trim_start();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(l) = comment.trim().strip_prefix("label:") {
                if label.is_empty() {
                    label = l.trim().to_string();
                }
            }
            continue;
        }
        if trimmed == "SIGMA" {
            if sigma.is_some() {
                return Err(ParseError::new(line_no, 1, "duplicate SIGMA block"));
            }
            if matrix.rows.is_empty() {
                return Err(ParseError::new(line_no, 1, "SIGMA block before the matrix"));
            }
            sigma = Some(Block::new());
            continue;
        }
        match sigma.as_mut() {
            Some(block) => block.push_row(line_no, line)?,
            None => matrix.push_row(line_no, line)?,
        }
    }
    if matrix.rows.is_empty() {
        return Err(ParseError::new(
            text.lines().count().max(1),
            1,
            "no matrix found",
        ));
    }

    let mut warnings = Vec::new();
    let (m, cells) = matrix.into_matrix("matrix")?;
    let asym = (&m - m.transpose()).amax();
    if asym > ASYMMETRY_WARN {
        warnings.push(format!("matrix asymmetric by up to {asym:e}; symmetrized"));
    }
    let sym = (&m + m.transpose()) * 0.5;
    for (k, row) in cells.iter().enumerate() {
        if !(sym[(k, k)] > 0.0) {
            let cell = &row[k];
            return Err(ParseError::new(
                cell.line,
                cell.column,
                format!("diagonal entry {} must be positive", cell.value),
            ));
        }
    }
    let cm = CovarianceMatrix::from_matrix(sym)
        .map_err(|e| ParseError::new(cells[0][0].line, 1, e.to_string()))?;

    let sigma = match sigma {
        None => None,
        Some(block) => {
            let first_line = block.rows.first().map(|r| r[0].line);
            let (s, s_cells) = block.into_matrix("SIGMA")?;
            if s.shape() != m.shape() {
                return Err(ParseError::new(
                    first_line.unwrap_or(1),
                    1,
                    format!(
                        "SIGMA is {}x{}, matrix is {}x{}",
                        s.nrows(),
                        s.ncols(),
                        m.nrows(),
                        m.ncols()
                    ),
                ));
            }
            for row in &s_cells {
                for cell in row {
                    if cell.value < 0.0 {
                        return Err(ParseError::new(
                            cell.line,
                            cell.column,
                            "negative uncertainty",
                        ));
                    }
                }
            }
            let s_asym = (&s - s.transpose()).amax();
            if s_asym > ASYMMETRY_WARN {
                warnings.push(format!("SIGMA asymmetric by up to {s_asym:e}; symmetrized"));
            }
            Some((&s + s.transpose()) * 0.5)
        }
    };

    Ok(MeasuredCM {
        cm,
        sigma,
        label,
        warnings,
    })
}

/// Reads and parses a file.
pub fn load_cm(path: &std::path::Path) -> Result<MeasuredCM> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_cm(&text)?)
}

fn write_block(out: &mut String, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| m[(r, c)].to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

/// Serializes in the file format with round-trip precision.
pub fn render_cm(m: &MeasuredCM) -> String {
    let mut out = String::new();
    if !m.label.is_empty() {
        writeln!(out, "# label: {}", m.label).expect("writing to a String");
    }
    write_block(&mut out, m.cm.matrix());
    if let Some(s) = &m.sigma {
        out.push_str("SIGMA\n");
        write_block(&mut out, s);
    }
    out
}

/// The two measured matrices shipped with the crate.
pub mod fixtures {
    use super::{parse_cm, MeasuredCM};

    pub const GAMMA1: &str = include_str!("../../data/gamma1.cm");
    pub const GAMMA2: &str = include_str!("../../data/gamma2.cm");

    /// Protocol-1 measurement, modes (A, B, C).
    pub fn gamma1() -> MeasuredCM {
        parse_cm(GAMMA1).expect("bundled fixture parses")
    }

    /// Protocol-2 measurement, modes (A, B, C).
    pub fn gamma2() -> MeasuredCM {
        parse_cm(GAMMA2).expect("bundled fixture parses")
    }
}
