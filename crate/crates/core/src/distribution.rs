//! Quantiles, the integrated quantile function, and the α–γ expectation of
//! a finite discrete loss distribution.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on total probability mass.
pub const MASS_TOL: f64 = 1e-9;
/// Slack when comparing a level against cumulative mass.
const LEVEL_TOL: f64 = 1e-12;

/// Finite atoms `values[i]` with probabilities `probs[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
    /// Atom indices sorted by value (stable).
    order: Vec<usize>,
    /// Cumulative mass along `order`.
    cum: Vec<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
struct Atom {
    value: f64,
    prob: f64,
}

/// Check a probability vector: non-empty, entries in (0, 1], sum 1.
pub fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::validation("probability vector is empty"));
    }
    for (i, &p) in probs.iter().enumerate() {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::validation(format!("probability {i} is {p}, expected (0, 1]")));
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::validation(format!("probabilities sum to {total}, expected 1")));
    }
    Ok(())
}

/// Check a level pair `0 <= alpha < gamma <= 1`.
pub fn validate_levels(alpha: f64, gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&gamma) {
        return Err(Error::validation(format!("levels ({alpha}, {gamma}) must lie in [0, 1]")));
    }
    if alpha >= gamma {
        return Err(Error::validation(format!("alpha = {alpha} must be below gamma = {gamma}")));
    }
    Ok(())
}

impl DiscreteDistribution {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.len() != probs.len() {
            return Err(Error::validation(format!(
                "{} values but {} probabilities",
                values.len(),
                probs.len()
            )));
        }
        validate_probs(&probs)?;
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite value {v}")));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut cum = Vec::with_capacity(order.len());
        let mut acc = 0.0;
        for &i in &order {
            acc += probs[i];
            cum.push(acc);
        }
        Ok(Self {
            values,
            probs,
            order,
            cum,
        })
    }

    /// Read a `value,prob` CSV.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut values = Vec::new();
        let mut probs = Vec::new();
        for atom in rdr.deserialize::<Atom>() {
            let atom = atom?;
            values.push(atom.value);
            probs.push(atom.prob);
        }
        Self::new(values, probs)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        for (&value, &prob) in self.values.iter().zip(&self.probs) {
            wtr.serialize(Atom { value, prob })?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `F(t) = P(T <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .filter(|(v, _)| **v <= t)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }

    /// Smallest value whose cumulative probability reaches `p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::validation(format!("quantile level {p} outside (0, 1]")));
        }
        let k = self
            .cum
            .iter()
            .position(|&c| c >= p - LEVEL_TOL)
            .unwrap_or(self.cum.len() - 1);
        Ok(self.values[self.order[k]])
    }

    /// `VaR_p`, the same as [`quantile`](Self::quantile).
    pub fn var(&self, p: f64) -> Result<f64> {
        self.quantile(p)
    }

    /// `I(p)`, the integral of the quantile function over `[0, p]`.
    pub fn iqf(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::validation(format!("IQF level {p} outside [0, 1]")));
        }
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (k, &i) in self.order.iter().enumerate() {
            if p <= prev {
                break;
            }
            let take = (p.min(self.cum[k]) - prev).max(0.0);
            acc += take * self.values[i];
            prev = self.cum[k];
        }
        Ok(acc)
    }

    /// `E_{α−γ}`, the chord slope `(I(γ) − I(α)) / (γ − α)`, integrated
    /// atom by atom over the band.
    pub fn expectation_slice(&self, alpha: f64, gamma: f64) -> Result<f64> {
        validate_levels(alpha, gamma)?;
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (k, &i) in self.order.iter().enumerate() {
            let hi = if k + 1 == self.order.len() { 1.0f64.max(self.cum[k]) } else { self.cum[k] };
            if hi > alpha {
                let take = gamma.min(hi) - alpha.max(prev);
                if take > 0.0 {
                    acc += take * self.values[i];
                }
            }
            if hi >= gamma {
                break;
            }
            prev = hi;
        }
        Ok(acc / (gamma - alpha))
    }

    /// `CVaR_α = E_{α−1}`.
    pub fn cvar(&self, alpha: f64) -> Result<f64> {
        self.expectation_slice(alpha, 1.0)
    }
}
