//! Row-level experiment records and CSV formatting.
//!
//! CSVs use comma separation, dot decimals, and a mandatory header row.
//! Floats are fixed to six decimals so identical runs produce identical
//! bytes no matter the parallel schedule.

use faintmark::jnd::Verdict;

/// One (image, payload, strength) cell.
#[derive(Debug, Clone)]
pub struct ExperimentRecord {
    pub image_id: String,
    pub payload_id: String,
    pub strength: u8,
    /// Global luma entropy of the clean image, in bits.
    pub background_entropy: f64,
    pub jnd_ratio: Option<f64>,
    pub verdict: Option<Verdict>,
    pub blind_detected: Option<bool>,
    pub paired_score: Option<f64>,
    pub scrubbed_detected: Option<bool>,
}

pub const RECORDS_HEADER: &str =
    "image_id,payload_id,strength,background_entropy,jnd_ratio,verdict,blind_detected,paired_score,scrubbed_detected";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn fmt_opt_bool(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

fn fmt_verdict(v: Option<Verdict>) -> String {
    match v {
        Some(Verdict::Invisible) => "invisible".into(),
        Some(Verdict::Borderline) => "borderline".into(),
        Some(Verdict::Visible) => "visible".into(),
        None => String::new(),
    }
}

impl ExperimentRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.image_id,
            self.payload_id,
            self.strength,
            fmt_f64(self.background_entropy),
            fmt_opt_f64(self.jnd_ratio),
            fmt_verdict(self.verdict),
            fmt_opt_bool(self.blind_detected),
            fmt_opt_f64(self.paired_score),
            fmt_opt_bool(self.scrubbed_detected),
        )
    }
}

/// Renders the records table with its header.
pub fn records_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_have_fixed_width_floats_and_empty_optionals() {
        let rec = ExperimentRecord {
            image_id: "img_0000".into(),
            payload_id: "benz".into(),
            strength: 2,
            background_entropy: 0.5,
            jnd_ratio: Some(1.0),
            verdict: Some(Verdict::Invisible),
            blind_detected: Some(true),
            paired_score: None,
            scrubbed_detected: None,
        };
        assert_eq!(
            rec.csv_row(),
            "img_0000,benz,2,0.500000,1.000000,invisible,true,,"
        );
    }
}
