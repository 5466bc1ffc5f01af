//! Under- and overestimates of the minimum VaR over `X_T`, and the gap
//! arithmetic comparing the CVaR/LP-relaxation pair against the RLT and
//! alternating-minimization pair.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::altmin::{alternate_minimize, DEFAULT_EPS};
use crate::distribution::validate_probs;
use crate::error::{Error, Result};
use crate::model::{var_ip, BigM, BilinearProgram, FeasibleSet};
use crate::programs::cvar_min;
use crate::rlt::{build_rlt_improved, build_rlt_shifted, shift_admissible};
use crate::threshold::{alpha_star, DEFAULT_B};

pub const DEFAULT_DELTA_PRIMES: [f64; 2] = [0.007, 0.01];
/// Slack allowed when checking the bound chain.
pub const CHAIN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateConfig {
    pub label: String,
    pub delta_primes: Vec<f64>,
    pub b: u32,
    pub eps: f64,
    pub with_ip_true: bool,
    /// Big-M for the VaR integer program and its relaxation.
    pub big_m: BigM,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            label: String::new(),
            delta_primes: DEFAULT_DELTA_PRIMES.to_vec(),
            b: DEFAULT_B,
            eps: DEFAULT_EPS,
            with_ip_true: false,
            big_m: BigM::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct O3Entry {
    pub delta_prime: f64,
    pub value: f64,
    pub rounds: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub ip_true: Option<f64>,
    pub u1: f64,
    pub u2: f64,
    pub o1: f64,
    pub o2: f64,
    pub o3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub label: String,
    pub gamma: f64,
    pub ip_true: Option<f64>,
    pub u1: f64,
    pub u2: f64,
    pub o1: f64,
    pub o2: f64,
    /// Upper level used for O2 (the lower level is `gamma`).
    pub o2_gamma_tilde: f64,
    /// Sorted by increasing `delta_prime`.
    pub o3: Vec<O3Entry>,
    pub alpha_star: f64,
    pub g1: Option<f64>,
    pub our_g: Option<f64>,
    pub imp_pct: Option<f64>,
    pub u2_ge_u1: bool,
    pub o3_monotone: bool,
    pub timings: Timings,
    /// Inputs echoed for reproducibility.
    pub metadata: BTreeMap<String, String>,
}

impl EstimateReport {
    /// A report holding only bound values, for gap arithmetic.
    pub fn from_bounds(label: &str, gamma: f64, u1: f64, o1: f64, u2: f64, o2: f64, o3: &[(f64, f64)]) -> Self {
        let mut o3: Vec<O3Entry> = o3
            .iter()
            .map(|&(delta_prime, value)| O3Entry {
                delta_prime,
                value,
                rounds: 0,
            })
            .collect();
        o3.sort_by(|a, b| a.delta_prime.total_cmp(&b.delta_prime));
        Self {
            label: label.to_string(),
            gamma,
            ip_true: None,
            u1,
            u2,
            o1,
            o2,
            o2_gamma_tilde: f64::NAN,
            o3,
            alpha_star: f64::NAN,
            g1: None,
            our_g: None,
            imp_pct: None,
            u2_ge_u1: u2 >= u1,
            o3_monotone: true,
            timings: Timings::default(),
            metadata: BTreeMap::new(),
        }
    }

    /// Every bound-chain violation against `ip_true`, as text.
    pub fn chain_violations(&self) -> Vec<String> {
        let Some(rho) = self.ip_true else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut check = |ok: bool, what: String| {
            if !ok {
                out.push(what);
            }
        };
        check(self.u1 <= rho + CHAIN_TOL, format!("U1 {} > IP {}", self.u1, rho));
        check(self.u2 <= rho + CHAIN_TOL, format!("U2 {} > IP {}", self.u2, rho));
        check(rho <= self.o1 + CHAIN_TOL, format!("IP {} > O1 {}", rho, self.o1));
        check(rho <= self.o2 + CHAIN_TOL, format!("IP {} > O2 {}", rho, self.o2));
        for e in &self.o3 {
            check(
                rho <= e.value + CHAIN_TOL,
                format!("IP {} > O3({}) {}", rho, e.delta_prime, e.value),
            );
            check(
                e.value <= self.o1 + CHAIN_TOL,
                format!("O3({}) {} > O1 {}", e.delta_prime, e.value, self.o1),
            );
        }
        out
    }

    /// Bound column names, followed by bookkeeping columns.
    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["label", "gamma", "ip_true", "u1", "o1", "u2", "o2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for e in self.o3.iter().rev() {
            h.push(format!("o3({})", e.delta_prime));
        }
        for s in [
            "g1",
            "our_g",
            "imp_pct",
            "alpha_star",
            "o2_gamma_tilde",
            "u2_ge_u1",
            "o3_monotone",
            "t_ip_true",
            "t_u1",
            "t_u2",
            "t_o1",
            "t_o2",
            "t_o3",
        ] {
            h.push(s.to_string());
        }
        h
    }

    pub fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt5).unwrap_or_default();
        let mut r = vec![
            self.label.clone(),
            self.gamma.to_string(),
            opt(self.ip_true),
            fmt5(self.u1),
            fmt5(self.o1),
            fmt5(self.u2),
            fmt5(self.o2),
        ];
        for e in self.o3.iter().rev() {
            r.push(fmt5(e.value));
        }
        r.push(opt(self.g1));
        r.push(opt(self.our_g));
        r.push(self.imp_pct.map(|v| format!("{v:.2}")).unwrap_or_default());
        r.push(fmt5(self.alpha_star));
        r.push(fmt5(self.o2_gamma_tilde));
        r.push(self.u2_ge_u1.to_string());
        r.push(self.o3_monotone.to_string());
        let t = &self.timings;
        r.push(t.ip_true.map(|v| format!("{v:.3}")).unwrap_or_default());
        for v in [t.u1, t.u2, t.o1, t.o2, t.o3] {
            r.push(format!("{v:.3}"));
        }
        r
    }
}

fn fmt5(v: f64) -> String {
    let s = format!("{v:.5}");
    if s == "-0.00000" {
        "0.00000".to_string()
    } else {
        s
    }
}

/// Write reports as CSV (one row each).
pub fn reports_to_csv(reports: &[EstimateReport]) -> Result<String> {
    reports_to_csv_with(reports, true)
}

/// CSV with optional timing columns, followed by one `meta_<key>` column per
/// metadata entry of the first report.
pub fn reports_to_csv_with(reports: &[EstimateReport], timings: bool) -> Result<String> {
    const TIMING_COLUMNS: usize = 6;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let keys: Vec<String> = reports.first().map(|r| r.metadata.keys().cloned().collect()).unwrap_or_default();
    let trim = |mut row: Vec<String>| {
        if !timings {
            row.truncate(row.len() - TIMING_COLUMNS);
        }
        row
    };
    if let Some(first) = reports.first() {
        let mut header = trim(first.csv_header());
        header.extend(keys.iter().map(|k| format!("meta_{k}")));
        wtr.write_record(header)?;
    }
    for r in reports {
        let mut row = trim(r.csv_record());
        row.extend(keys.iter().map(|k| r.metadata.get(k).cloned().unwrap_or_default()));
        wtr.write_record(row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

/// Fill `g1 = o1 − u1`, `our_g = o3(smallest δ′) − u2` and the percentage
/// improvement. When `g1 = 0` the improvement is 100 if `our_g = 0` and
/// left empty otherwise.
pub fn gap_metrics(mut report: EstimateReport) -> EstimateReport {
    let g1 = report.o1 - report.u1;
    report.g1 = Some(g1);
    let Some(first) = report.o3.first() else {
        log::warn!("{}: no O3 value, gaps left empty", report.label);
        return report;
    };
    let our_g = first.value - report.u2;
    report.our_g = Some(our_g);
    report.imp_pct = if g1 > 0.0 {
        Some((g1 - our_g) / g1 * 100.0)
    } else if our_g == 0.0 {
        Some(100.0)
    } else {
        log::warn!("{}: G1 is zero but Our-G is {our_g}; Imp% omitted", report.label);
        None
    };
    report
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed().as_secs_f64()))
}

/// Run U1, U2, O1, O2, O3 (and optionally the exact IP) on one instance.
pub fn estimate_var_min(fs: &FeasibleSet, probs: &[f64], gamma: f64, cfg: &EstimateConfig) -> Result<EstimateReport> {
    validate_probs(probs)?;
    if probs.len() != fs.n() {
        return Err(Error::validation(format!("{} probabilities for {} scenarios", probs.len(), fs.n())));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::validation(format!("gamma = {gamma} outside (0, 1)")));
    }
    if cfg.delta_primes.is_empty() {
        return Err(Error::validation("at least one delta' is required"));
    }
    let mut deltas = cfg.delta_primes.clone();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    for &d in &deltas {
        if !(d > 0.0) || gamma + d > 1.0 + 1e-12 {
            return Err(Error::validation(format!("delta' = {d} needs 0 < delta' and gamma + delta' <= 1")));
        }
    }
    let min_p = probs.iter().copied().fold(f64::INFINITY, f64::min);

    let ip_true = if cfg.with_ip_true {
        let (sol, t) = timed(|| var_ip(fs, probs, gamma, cfg.big_m.clone(), false)).map_err(|e| e.tagged("IP-true"))?;
        Some((sol.value, t))
    } else {
        None
    };
    let (u1, t_u1) = timed(|| var_ip(fs, probs, gamma, cfg.big_m.clone(), true)).map_err(|e| e.tagged("U1"))?;

    let (u2, t_u2, a_star) = {
        let start = Instant::now();
        let cert = alpha_star(probs, gamma, cfg.b).map_err(|e| e.tagged("U2"))?;
        let bp = BilinearProgram::new(fs, probs, cert.alpha_star, gamma)?;
        let model = build_rlt_improved(&bp, &cert).map_err(|e| e.tagged("U2"))?;
        let sol = model.solve().map_err(|e| e.tagged("U2"))?;
        (sol.value, start.elapsed().as_secs_f64(), cert.alpha_star)
    };

    let (o1, t_o1) = timed(|| cvar_min(fs, probs, gamma)).map_err(|e| e.tagged("O1"))?;

    let requested = gamma + deltas[0];
    let gamma_tilde = if shift_admissible(probs, gamma, requested) {
        requested
    } else {
        let fallback = 1.0 - min_p / 2.0;
        log::warn!(
            "O2: gamma + delta' = {requested} does not exceed 1 - min p = {}; using {fallback}",
            1.0 - min_p
        );
        fallback
    };
    let (o2, t_o2) = timed(|| {
        let bp = BilinearProgram::new(fs, probs, gamma, gamma_tilde)?;
        build_rlt_shifted(&bp, gamma, gamma_tilde)?.solve()
    })
    .map_err(|e| e.tagged("O2"))?;

    let start = Instant::now();
    let mut o3 = Vec::with_capacity(deltas.len());
    for &d in &deltas {
        let bp = BilinearProgram::new(fs, probs, gamma, (gamma + d).min(1.0))?;
        let r = alternate_minimize(&bp, cfg.eps).map_err(|e| e.tagged("O3"))?;
        o3.push(O3Entry {
            delta_prime: d,
            value: r.value,
            rounds: r.rounds,
        });
    }
    let t_o3 = start.elapsed().as_secs_f64();
    let o3_monotone = o3.windows(2).all(|w| w[0].value <= w[1].value + CHAIN_TOL);

    let mut metadata = BTreeMap::new();
    metadata.insert("gamma".into(), gamma.to_string());
    metadata.insert("b".into(), cfg.b.to_string());
    metadata.insert("eps".into(), cfg.eps.to_string());
    metadata.insert(
        "delta_prime".into(),
        deltas.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
    );
    metadata.insert(
        "big_m".into(),
        match &cfg.big_m {
            BigM::Uniform(m) => m.to_string(),
            BigM::Auto => "auto".into(),
        },
    );
    metadata.insert("scenarios".into(), fs.n().to_string());

    let report = EstimateReport {
        label: cfg.label.clone(),
        gamma,
        ip_true: ip_true.map(|v| v.0),
        u1: u1.value,
        u2,
        o1: o1.value,
        o2: o2.value,
        o2_gamma_tilde: gamma_tilde,
        o3,
        alpha_star: a_star,
        g1: None,
        our_g: None,
        imp_pct: None,
        u2_ge_u1: u2 >= u1.value - CHAIN_TOL,
        o3_monotone,
        timings: Timings {
            ip_true: ip_true.map(|v| v.1),
            u1: t_u1,
            u2: t_u2,
            o1: t_o1,
            o2: t_o2,
            o3: t_o3,
        },
        metadata,
    };
    Ok(gap_metrics(report))
}
