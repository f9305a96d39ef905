//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use errfreq::corpus::{legomena, FrequencyTable};
use errfreq::distributions::{evert_log_normalizer, evert_log_weight, sample_zm, seeded_rng, EvertParams, SampleSpec, ZmParams};
use errfreq::fitting::{expected_spectrum, fit_chisq, fit_mle, gamma_from_alpha, shift_from_prop2};
use errfreq::sanitizer::{sanitize_message, RuleSet};
use errfreq::specfun::log_beta;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn shift_consistency() -> Check {
    let rows = [(1.216, 572, 702_102, 33.1), (1.165, 283, 179_624, 44.7)];
    let mut detail = Vec::new();
    for (alpha, m, f_max, want) in rows {
        let gamma = gamma_from_alpha(alpha).map_err(|e| e.to_string())?;
        let t = shift_from_prop2(gamma, m, f_max).map_err(|e| e.to_string())?;
        ensure((t - want).abs() <= 0.2, || format!("alpha={alpha}: t={t:.3}, want {want} ± 0.2"))?;
        detail.push(format!("t={t:.3}"));
    }
    Ok(detail.join(", "))
}

/// Neumaier-compensated log-sum-exp.
fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &x in terms {
        let v = (x - max).exp();
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    max + (sum + comp).ln()
}

fn evert_normalizer_identity() -> Check {
    let mut worst = 0.0f64;
    for &alpha in &[1.1, 1.3, 1.5, 1.7, 1.9] {
        for &f_max in &[100u64, 10_000] {
            let closed = evert_log_normalizer(&EvertParams::new(alpha, f_max).unwrap()).exp();
            let weights: Vec<f64> = (1..=f_max).map(|f| evert_log_weight(f, alpha)).collect();
            let direct = (-log_sum_exp(&weights)).exp();
            let rel = ((closed - direct) / closed).abs();
            worst = worst.max(rel);
            ensure(rel <= 1e-9, || format!("alpha={alpha} F_max={f_max}: relative gap {rel:e}"))?;
        }
    }
    Ok(format!("worst relative gap {worst:.2e}"))
}

fn spectrum_shape() -> Check {
    let params = ZmParams::new(2.0, 5.0).unwrap();
    let exp = expected_spectrum(&params, 10_000_000, 6).map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = (1..=6u64).map(|f| exp.get(f) / log_beta(f as f64 - 0.5, 1.5).unwrap().exp()).collect();
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let spread = (max - min) / mean;
    ensure(spread < 0.05, || format!("relative spread {spread:.2e}"))?;
    Ok(format!("relative spread {spread:.2e}"))
}

fn monte_carlo_spectrum() -> Check {
    const SEEDS: u64 = 200;
    const N: u64 = 100_000;
    let params = ZmParams::new(2.0, 5.0).unwrap();
    let expected = expected_spectrum(&params, N, 6).map_err(|e| e.to_string())?;
    let samples: Vec<[f64; 6]> = (1..=SEEDS)
        .into_par_iter()
        .map(|seed| {
            let table = sample_zm(&SampleSpec::new(params, N, seed)).unwrap();
            let spectrum = legomena(&table);
            std::array::from_fn(|i| spectrum.get(i as u64 + 1) as f64)
        })
        .collect();
    let mut detail = Vec::new();
    for f in 0..6 {
        let n = samples.len() as f64;
        let mean = samples.iter().map(|s| s[f]).sum::<f64>() / n;
        let var = samples.iter().map(|s| (s[f] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        let z = (mean - expected.expected[f]) / se;
        ensure(z.abs() <= 3.0, || {
            format!("f={}: mean {mean:.2}, expected {:.2}, z={z:.2}", f + 1, expected.expected[f])
        })?;
        detail.push(format!("{z:+.2}"));
    }
    Ok(format!("z-scores f=1..6: {}", detail.join(" ")))
}

fn parameter_recovery() -> Check {
    const ALPHA: f64 = 1.0 + 1.0 / 6.3;
    let params = ZmParams::new(6.3, 60.0).unwrap();
    let fixture = sample_zm(&SampleSpec::new(params, 1_000_000, 1)).unwrap();

    let mle = fit_mle(&fixture, 1e-6).map_err(|e| e.to_string())?;
    ensure((mle.alpha - ALPHA).abs() <= 0.03, || format!("mle alpha {:.4}", mle.alpha))?;

    let chisq = fit_chisq(&fixture, fixture.n_total()).map_err(|e| e.to_string())?;
    ensure((chisq.alpha - ALPHA).abs() <= 0.05, || format!("chisq alpha {:.4}", chisq.alpha))?;

    let alphas: Vec<f64> = (1..=20u64)
        .into_par_iter()
        .map(|seed| {
            let table = sample_zm(&SampleSpec::new(params, 1_000_000, seed)).unwrap();
            fit_mle(&table, 1e-6).unwrap().alpha
        })
        .collect();
    let mean_abs_err = alphas.iter().map(|a| (a - ALPHA).abs()).sum::<f64>() / 20.0;
    let bias = alphas.iter().sum::<f64>() / 20.0 - ALPHA;
    ensure(mean_abs_err < 0.02, || format!("mean |alpha - {ALPHA:.4}| = {mean_abs_err:.4} over 20 seeds"))?;
    Ok(format!(
        "mle alpha {:.4}, chisq alpha {:.4}, 20-seed bias {bias:+.4}, mean |err| {mean_abs_err:.4}",
        mle.alpha, chisq.alpha
    ))
}

fn spectrum_identities() -> Check {
    let mut rng = seeded_rng(2024);
    for _ in 0..1000 {
        let m = rng.random_range(1..=300usize);
        let cap = 10u64.pow(rng.random_range(0..=6u32));
        let freqs: Vec<u64> = (0..m).map(|_| rng.random_range(1..=cap)).collect();
        let table = FrequencyTable::from_freqs(freqs).unwrap();
        let spectrum = legomena(&table);
        let types: u64 = spectrum.iter().map(|(_, c)| c).sum();
        let tokens: u64 = spectrum.iter().map(|(f, c)| f * c).sum();
        ensure(types == table.m_distinct() as u64, || format!("Σ #F⁻¹(f) = {types}, M = {}", table.m_distinct()))?;
        ensure(tokens == table.n_total(), || format!("Σ f #F⁻¹(f) = {tokens}, N = {}", table.n_total()))?;
    }
    Ok("1000 tables".into())
}

fn rule_vectors(text: &str) -> Vec<String> {
    let doc: serde_json::Value = serde_json::from_str(text).unwrap();
    doc["rules"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|r| r["tests"].as_array())
        .flatten()
        .map(|t| t["in"].as_str().unwrap().to_string())
        .collect()
}

fn sanitizer_golden() -> Check {
    let python = RuleSet::python();
    let x = sanitize_message("NameError: name 'x' is not defined", &python);
    let sum = sanitize_message("NameError: name 'sum' is not defined", &python);
    ensure(x.is_some() && x == sum, || format!("{x:?} vs {sum:?}"))?;
    let mut checked = 0;
    for (text, rules) in [
        (include_str!("../rules/python.json"), python),
        (include_str!("../rules/java.json"), RuleSet::java()),
    ] {
        for input in rule_vectors(text) {
            let once = sanitize_message(&input, &rules);
            let twice = once.as_deref().and_then(|s| sanitize_message(s, &rules));
            ensure(once.is_none() || twice == once, || format!("{input:?}: {once:?} then {twice:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{} ; {checked} vectors stable", x.unwrap()))
}

fn run_cli(args: &[&str], dir: &Path) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_errfreq"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("errfreq {args:?}: {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok(out.stdout)
}

fn end_to_end_reproducible() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    let mut samples = Vec::new();
    for _ in 0..2 {
        run_cli(&["sample", "--gamma", "6.3", "--t", "60", "--n", "100000", "--seed", "17", "--output", "sample.tsv"], dir.path())?;
        samples.push(std::fs::read(dir.path().join("sample.tsv")).map_err(|e| e.to_string())?);
        reports.push(run_cli(&["fit", "--input", "sample.tsv", "--method", "both"], dir.path())?);
    }
    ensure(samples[0] == samples[1], || "sample files differ".into())?;
    ensure(reports[0] == reports[1], || "reports differ".into())?;
    ensure(!reports[0].is_empty(), || "empty report".into())?;
    Ok(format!("{} report bytes identical", reports[0].len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Check); 8] = [
        ("1 shift rule vs published fits", Duration::from_secs(1), shift_consistency),
        ("2 Evert normalizer identity", Duration::from_secs(10), evert_normalizer_identity),
        ("3 expected spectrum shape", Duration::from_secs(30), spectrum_shape),
        ("4 Monte-Carlo spectrum", Duration::from_secs(300), monte_carlo_spectrum),
        ("5 parameter recovery", Duration::from_secs(300), parameter_recovery),
        ("6 spectrum identities", Duration::from_secs(10), spectrum_identities),
        ("7 sanitizer golden tests", Duration::from_secs(1), sanitizer_golden),
        ("8 end-to-end reproducibility", Duration::from_secs(120), end_to_end_reproducible),
    ];
    let mut failures = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} ({elapsed:.2?})"),
            Err(reason) => {
                failures += 1;
                println!("FAIL  {name}: {reason} ({elapsed:.2?})");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
