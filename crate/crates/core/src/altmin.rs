//! Alternating minimization between `(x, T)` and `w'`, giving an upper
//! bound on the bilinear optimum.

use std::io::Write;

use crate::error::{Error, Result};
use crate::model::BilinearProgram;
use crate::programs::{find_w, find_xt};

pub const DEFAULT_EPS: f64 = 1e-6;
pub const MAX_ROUNDS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AltMinResult {
    pub value: f64,
    /// Completed rounds (one `find_xt` plus one `find_w` each).
    pub rounds: usize,
    /// `ν_0, ν_1, ...` in the order computed.
    pub trace: Vec<f64>,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub wprime: Vec<f64>,
}

impl AltMinResult {
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iter,value")?;
        for (i, v) in self.trace.iter().enumerate() {
            writeln!(out, "{i},{v}")?;
        }
        Ok(())
    }
}

/// Start from `w' = 0` and alternate until consecutive values differ by at
/// most `eps`; the result is the last `find_xt` value.
pub fn alternate_minimize(bp: &BilinearProgram<'_>, eps: f64) -> Result<AltMinResult> {
    if !(eps > 0.0) {
        return Err(Error::validation(format!("eps must be positive, got {eps}")));
    }
    let mut wprime = vec![0.0; bp.n()];
    let mut trace = Vec::new();
    for round in 1..=MAX_ROUNDS {
        let xt = find_xt(bp, &wprime).map_err(|e| e.tagged("find_xt"))?;
        let w = find_w(bp, &xt.x, &xt.t).map_err(|e| e.tagged("find_w"))?;
        trace.push(xt.value);
        trace.push(w.value);
        log::debug!("alternating round {round}: {} -> {}", xt.value, w.value);
        if (w.value - xt.value).abs() <= eps {
            return Ok(AltMinResult {
                value: xt.value,
                rounds: round,
                trace,
                x: xt.x,
                t: xt.t,
                wprime: w.wprime,
            });
        }
        wprime = w.wprime;
    }
    Err(Error::Internal(format!("alternating minimization exceeded {MAX_ROUNDS} rounds")))
}
