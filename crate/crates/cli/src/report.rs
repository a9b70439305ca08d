use std::fmt::Write as _;

use progmeter::{Verdict, VerificationReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

/// Renders reports. Text: a header line and one line per check. Structured:
/// a JSON array of report records.
pub fn emit_report(reports: &[VerificationReport], format: Format) -> Vec<u8> {
    match format {
        Format::Structured => {
            let mut out = serde_json::to_vec_pretty(reports).expect("reports serialize");
            out.push(b'\n');
            out
        }
        Format::Text => {
            let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
            let mut out = format!(
                "progmeter report: {} checks, {} pass, {} fail, {} not_applicable\n",
                reports.len(),
                count(Verdict::Pass),
                count(Verdict::Fail),
                count(Verdict::NotApplicable)
            );
            for r in reports {
                let _ = write!(out, "{:<15} {}", r.verdict.to_string(), r.check_name);
                for (k, v) in &r.residuals {
                    let _ = write!(out, " {k}={v:.3e}");
                }
                if !r.details.is_empty() {
                    let _ = write!(out, " | {}", r.details);
                }
                out.push('\n');
            }
            out.into_bytes()
        }
    }
}

pub fn parse_structured(bytes: &[u8]) -> serde_json::Result<Vec<VerificationReport>> {
    serde_json::from_slice(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_report_is_header_only() {
        let text = String::from_utf8(emit_report(&[], Format::Text)).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("progmeter report: 0 checks"));
    }

    #[test]
    fn single_pass_lists_residuals() {
        let r = VerificationReport::new("spin", Verdict::Pass, "ok").with_residual("overlap", 0.25);
        let text = String::from_utf8(emit_report(&[r], Format::Text)).unwrap();
        assert!(text.contains("pass"));
        assert!(text.contains("overlap=2.500e-1"));
    }

    #[test]
    fn infinite_residual_round_trips() {
        let r = VerificationReport::new("x", Verdict::Fail, "").with_residual("distance", f64::INFINITY);
        let back = parse_structured(&emit_report(std::slice::from_ref(&r), Format::Structured)).unwrap();
        assert_eq!(back, vec![r]);
    }
}
