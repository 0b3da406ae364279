use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::montecarlo::Uncertainty;
use crate::protocols::SeparabilityReport;

/// Value of the `schema` field in JSON reports.
pub const REPORT_SCHEMA: &str = "cv-entangler/certification/v1";

pub const CSV_HEADER: &str = "bipartition,min_eigenvalue,verdict,mc_mean,mc_std";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub schema: String,
    pub label: String,
    pub separability: SeparabilityReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<Uncertainty>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!(
                "unknown format '{other}' (expected text, json or csv)"
            )),
        }
    }
}

fn sig4(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let digits = 3 - v.abs().log10().floor() as i32;
    if (0..=6).contains(&digits) {
        format!("{v:.prec$}", prec = digits as usize)
    } else {
        format!("{v:.3e}")
    }
}

fn render_text(r: &CertificationReport) -> String {
    let mut out = String::new();
    let w = &mut out;
    let label = if r.label.is_empty() {
        "(unlabelled)"
    } else {
        &r.label
    };
    writeln!(w, "state: {label}").unwrap();
    for e in &r.separability.entries {
        let (verdict, label) = (e.verdict, e.bipartition.label());
        write!(w, "{verdict} {label:<5} min eig {}", sig4(e.min_eigenvalue)).unwrap();
        if let Some(u) = &r.uncertainty {
            let mc = u.entry(e.bipartition);
            write!(w, "  (MC {} ± {})", sig4(mc.mean), sig4(mc.std)).unwrap();
        }
        w.push('\n');
    }
    write!(
        w,
        "nonclassicality {}",
        sig4(r.separability.nonclassicality)
    )
    .unwrap();
    if let Some(u) = &r.uncertainty {
        write!(
            w,
            "  (MC {} ± {})",
            sig4(u.nonclassicality.mean),
            sig4(u.nonclassicality.std)
        )
        .unwrap();
    }
    w.push('\n');
    writeln!(
        w,
        "physical {}  (min eig of γ + iΩ {})",
        r.separability.physical,
        sig4(r.separability.min_uncertainty_eigenvalue)
    )
    .unwrap();
    if let Some(u) = &r.uncertainty {
        writeln!(w, "monte carlo: {} draws, seed {}", u.draws, u.seed).unwrap();
    }
    for warning in &r.warnings {
        writeln!(w, "warning: {warning}").unwrap();
    }
    out
}

fn render_csv(r: &CertificationReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for e in &r.separability.entries {
        let (mean, std) = match &r.uncertainty {
            Some(u) => {
                let mc = u.entry(e.bipartition);
                (mc.mean.to_string(), mc.std.to_string())
            }
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{}",
            e.bipartition, e.min_eigenvalue, e.verdict, mean, std
        )
        .unwrap();
    }
    out
}

pub fn render_report(r: &CertificationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(r),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(r).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => render_csv(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certification::{certify, fixtures, monte_carlo_eigs};

    #[test]
    fn four_significant_figures() {
        assert_eq!(sig4(-0.019512), "-0.01951");
        assert_eq!(sig4(9.36891), "9.369");
        assert_eq!(sig4(123.456), "123.5");
        assert_eq!(sig4(1.5e-7), "1.500e-7");
    }

    #[test]
    fn json_round_trips() {
        let rep = monte_carlo_eigs(&fixtures::gamma2(), 200, 4).unwrap();
        let json = render_report(&rep, ReportFormat::Json);
        let back: CertificationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rep);
        assert!(json.contains(REPORT_SCHEMA));
        assert!(json.contains("\"A|BC\""));
    }

    #[test]
    fn csv_has_one_row_per_bipartition() {
        let rep = certify(&fixtures::gamma1()).unwrap();
        let csv = render_report(&rep, ReportFormat::Csv);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("A|BC,"));
        assert!(lines[1].ends_with(",,"));
    }

    #[test]
    fn text_lists_verdicts() {
        let rep = certify(&fixtures::gamma1()).unwrap();
        let text = render_report(&rep, ReportFormat::Text);
        assert!(text.starts_with("state: gamma1"));
        assert!(text.contains("entangled A|BC"));
        assert!(text.contains("separable B|AC"));
    }

    #[test]
    fn format_parsing() {
        assert_eq!("JSON".parse::<ReportFormat>(), Ok(ReportFormat::Json));
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
