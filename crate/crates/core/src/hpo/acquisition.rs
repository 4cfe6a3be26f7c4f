//! Acquisition functions (minimization convention) and the softmax hedge
//! over them.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Acquisition {
    #[serde(rename = "PI")]
    Pi,
    #[serde(rename = "EI")]
    Ei,
    #[serde(rename = "LCB")]
    Lcb,
}

impl Acquisition {
    pub const ALL: [Acquisition; 3] = [Acquisition::Pi, Acquisition::Ei, Acquisition::Lcb];

    pub fn label(&self) -> &'static str {
        match self {
            Acquisition::Pi => "PI",
            Acquisition::Ei => "EI",
            Acquisition::Lcb => "LCB",
        }
    }
}

impl fmt::Display for Acquisition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcqValues {
    pub pi: f64,
    pub ei: f64,
    pub lcb: f64,
}

impl AcqValues {
    pub fn get(&self, a: Acquisition) -> f64 {
        match a {
            Acquisition::Pi => self.pi,
            Acquisition::Ei => self.ei,
            Acquisition::Lcb => self.lcb,
        }
    }
}

/// PI, EI and negated LCB at a point with posterior `(mean, std)`. Larger
/// is better for all three.
pub fn acquisitions(mean: f64, std: f64, best_y: f64, kappa: f64) -> AcqValues {
    let lcb = -(mean - kappa * std);
    if std <= 0.0 {
        let gain = best_y - mean;
        return AcqValues {
            pi: if gain > 0.0 { 1.0 } else { 0.0 },
            ei: gain.max(0.0),
            lcb,
        };
    }
    let normal = Normal::standard();
    let z = (best_y - mean) / std;
    AcqValues {
        pi: normal.cdf(z),
        ei: (best_y - mean) * normal.cdf(z) + std * normal.pdf(z),
        lcb,
    }
}

/// Cumulative rewards of the acquisition portfolio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeState {
    pub gains: [f64; 3],
    pub eta: f64,
}

impl HedgeState {
    pub fn new(eta: f64) -> Self {
        Self { gains: [0.0; 3], eta }
    }

    /// `softmax(η · gains)`, computed with the maximum subtracted.
    pub fn probabilities(&self) -> [f64; 3] {
        let scaled = self.gains.map(|g| self.eta * g);
        let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e = scaled.map(|s| (s - max).exp());
        let sum: f64 = e.iter().sum();
        e.map(|v| v / sum)
    }

    pub fn reward(&mut self, rewards: [f64; 3]) {
        for (g, r) in self.gains.iter_mut().zip(rewards) {
            *g += r;
        }
    }

    /// Picks an acquisition by inverse-CDF sampling with `u ∈ [0, 1)`.
    pub fn select(&self, u: f64) -> Acquisition {
        let p = self.probabilities();
        let mut acc = 0.0;
        for (i, a) in Acquisition::ALL.iter().enumerate() {
            acc += p[i];
            if u < acc {
                return *a;
            }
        }
        Acquisition::ALL[2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_and_standard_values() {
        let a = acquisitions(1.0, 0.0, 1.0, 1.96);
        assert_eq!((a.pi, a.ei), (0.0, 0.0));
        let b = acquisitions(1.0, 0.5, 1.0, 1.96);
        assert!((b.pi - 0.5).abs() < 1e-15);
        assert!((b.ei - 0.5 * 0.398_942_280_401_432_7).abs() < 1e-15);
        let c = acquisitions(0.2, 0.0, 1.0, 1.96);
        assert_eq!((c.pi, c.ei), (1.0, 0.8));
    }

    #[test]
    fn hedge_probabilities_are_a_distribution() {
        let mut h = HedgeState::new(1.0);
        assert_eq!(h.probabilities(), [1.0 / 3.0; 3]);
        h.reward([1000.0, -5.0, 3.0]);
        let p = h.probabilities();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(h.select(0.5), Acquisition::Pi);
    }
}
