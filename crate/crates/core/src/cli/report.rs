//! The JSON document written by `fit` and `report`.

use serde::Serialize;

use crate::corpus::{entropy, legomena, FrequencyTable};
use crate::fitting::FitResult;

/// Bumped whenever a field is renamed, removed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Observed spectrum rows always included in a report.
pub const SPECTRUM_HEAD: u64 = 6;

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo { name: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION") }
    }
}

/// Effective settings of the run, including defaults that were not typed.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub command: String,
    pub input: String,
    pub method: String,
    pub drop_top: usize,
    pub tol: f64,
    /// A command line that reproduces this report.
    pub rerun: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusSummary {
    pub n_total: u64,
    pub m_distinct: usize,
    pub f_max: u64,
    pub entropy_bits: f64,
    pub dropped_top: usize,
}

impl CorpusSummary {
    pub fn of(table: &FrequencyTable) -> Self {
        CorpusSummary {
            n_total: table.n_total(),
            m_distinct: table.m_distinct(),
            f_max: table.f_max(),
            entropy_bits: entropy(table),
            dropped_top: table.dropped_top(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpectrumRow {
    pub f: u64,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub config: ConfigEcho,
    pub corpus: CorpusSummary,
    pub spectrum_head: Vec<SpectrumRow>,
    /// Every non-empty spectrum row; only present in full reports.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<SpectrumRow>>,
    pub fits: Vec<FitResult>,
}

impl FitReport {
    pub fn new(config: ConfigEcho, table: &FrequencyTable, fits: Vec<FitResult>, full_spectrum: bool) -> Self {
        let spectrum = legomena(table);
        let spectrum_head =
            (1..=SPECTRUM_HEAD).map(|f| SpectrumRow { f, count: spectrum.get(f) }).collect();
        let full = full_spectrum.then(|| spectrum.iter().map(|(f, count)| SpectrumRow { f, count }).collect());
        FitReport {
            schema_version: SCHEMA_VERSION,
            tool: ToolInfo::current(),
            config,
            corpus: CorpusSummary::of(table),
            spectrum_head,
            spectrum: full,
            fits,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

/// The `(γ, t)` of a saved report, preferring the maximum-likelihood fit.
pub fn params_from_report(json: &str) -> Result<(f64, f64), String> {
    let doc: serde_json::Value = serde_json::from_str(json).map_err(|e| format!("fit report: {e}"))?;
    let fits = doc["fits"].as_array().ok_or("fit report has no fits")?;
    let pick = fits
        .iter()
        .find(|f| f["method"] == "mle")
        .or_else(|| fits.first())
        .ok_or("fit report has no fits")?;
    match (pick["gamma"].as_f64(), pick["t"].as_f64()) {
        (Some(g), Some(t)) => Ok((g, t)),
        _ => Err("fit report entry lacks gamma or t".to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::fit_mle;

    fn echo() -> ConfigEcho {
        ConfigEcho {
            command: "fit".into(),
            input: "x.tsv".into(),
            method: "mle".into(),
            drop_top: 0,
            tol: 1e-6,
            rerun: "errfreq fit --input x.tsv".into(),
        }
    }

    #[test]
    fn report_has_summary_head_and_fits() {
        let table = FrequencyTable::from_freqs(vec![40, 9, 5, 3, 2, 2, 1, 1, 1]).unwrap();
        let fit = fit_mle(&table, 1e-6).unwrap();
        let report = FitReport::new(echo(), &table, vec![fit], false);
        let doc: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(doc["schema_version"], 1);
        assert_eq!(doc["corpus"]["n_total"], 64);
        assert_eq!(doc["corpus"]["m_distinct"], 9);
        assert_eq!(doc["corpus"]["f_max"], 40);
        assert!(doc["corpus"]["entropy_bits"].as_f64().unwrap() > 0.0);
        assert_eq!(doc["spectrum_head"].as_array().unwrap().len(), 6);
        assert_eq!(doc["spectrum_head"][0]["count"], 3);
        assert_eq!(doc["spectrum_head"][3]["count"], 0);
        assert!(doc.get("spectrum").is_none());
        assert_eq!(doc["fits"][0]["method"], "mle");

        let (g, t) = params_from_report(&report.to_json()).unwrap();
        assert_eq!(g, report.fits[0].gamma);
        assert_eq!(t, report.fits[0].t);
    }

    #[test]
    fn report_params_errors() {
        assert!(params_from_report("{}").is_err());
        assert!(params_from_report(r#"{"fits": []}"#).is_err());
        assert_eq!(params_from_report(r#"{"fits": [{"method": "chisq", "gamma": 2.0, "t": 1.5}]}"#), Ok((2.0, 1.5)));
    }
}
