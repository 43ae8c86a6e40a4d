//! Losses, per-row gradient statistics and the second-order boosting gain.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::RuleEnsemble;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Squared,
    Logistic,
}

/// Logistic function, evaluated without overflow for any finite input.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl Loss {
    pub fn value(self, y: f64, f: f64) -> f64 {
        match self {
            Loss::Squared => (y - f) * (y - f),
            Loss::Logistic => softplus(-y * f),
        }
    }

    /// First and second derivative of the loss in its prediction argument.
    pub fn derivatives(self, y: f64, f: f64) -> (f64, f64) {
        match self {
            Loss::Squared => (-2.0 * (y - f), 2.0),
            Loss::Logistic => {
                let p_wrong = sigmoid(-y * f);
                let p_right = sigmoid(y * f);
                (-y * p_wrong, p_right * p_wrong)
            }
        }
    }
}

/// Gradient statistics of one boosting round.
#[derive(Debug, Clone)]
pub struct GradientStats {
    g: Vec<f64>,
    h: Vec<f64>,
    order: Vec<usize>,
}

/// Descending `g/h` order via cross-multiplication.
///
/// Rows with `h = 0` sort by the sign of `g` (positive first, negative last);
/// `g = h = 0` counts as ratio zero. Ties break by ascending row index.
fn ratio_order(g: &[f64], h: &[f64], a: usize, b: usize) -> Ordering {
    // 0: +inf ratio, 1: finite, 2: -inf ratio
    let class = |i: usize| match (h[i] == 0.0, g[i]) {
        (true, x) if x > 0.0 => 0,
        (true, x) if x < 0.0 => 2,
        _ => 1,
    };
    let denom = |i: usize| if h[i] == 0.0 { 1.0 } else { h[i] };
    class(a)
        .cmp(&class(b))
        .then_with(|| {
            let lhs = g[a] * denom(b);
            let rhs = g[b] * denom(a);
            rhs.partial_cmp(&lhs).unwrap_or(Ordering::Equal)
        })
        .then(a.cmp(&b))
}

impl GradientStats {
    pub fn new(g: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if g.len() != h.len() {
            return Err(Error::InvalidData("g and h differ in length".into()));
        }
        if g.iter().chain(&h).any(|v| !v.is_finite()) || h.iter().any(|&v| v < 0.0) {
            return Err(Error::Domain("gradient statistics must be finite with h >= 0".into()));
        }
        let mut order: Vec<usize> = (0..g.len()).collect();
        order.sort_by(|&a, &b| ratio_order(&g, &h, a, b));
        Ok(GradientStats { g, h, order })
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Row indices by descending `g/h`.
    pub fn sorted_order(&self) -> &[usize] {
        &self.order
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    /// Position of each row within [`Self::sorted_order`].
    pub fn ranks(&self) -> Vec<usize> {
        let mut rank = vec![0; self.order.len()];
        for (k, &row) in self.order.iter().enumerate() {
            rank[row] = k;
        }
        rank
    }

    /// Sorts an extent into ratio order.
    pub fn sort_extent(&self, extent: &[usize]) -> Vec<usize> {
        let rank = self.ranks();
        let mut out = extent.to_vec();
        out.sort_by_key(|&r| rank[r]);
        out
    }

    fn sums(&self, extent: &[usize]) -> (f64, f64) {
        extent.iter().fold((0.0, 0.0), |(sg, sh), &i| (sg + self.g[i], sh + self.h[i]))
    }
}

/// Computes `(g, h)` for every row at predictions `f`.
pub fn gradient_stats(loss: Loss, y: &[f64], f: &[f64]) -> Result<GradientStats> {
    if y.len() != f.len() {
        return Err(Error::InvalidData(format!("{} targets but {} predictions", y.len(), f.len())));
    }
    if loss == Loss::Logistic && y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::Domain("logistic loss requires labels in {-1, +1}".into()));
    }
    let (g, h) = y.iter().zip(f).map(|(&y, &f)| loss.derivatives(y, f)).unzip();
    GradientStats::new(g, h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveContext {
    pub lambda: f64,
    pub n: usize,
}

impl ObjectiveContext {
    pub fn new(lambda: f64, n: usize) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if n == 0 {
            return Err(Error::InvalidConfig("n must be positive".into()));
        }
        Ok(ObjectiveContext { lambda, n })
    }

    /// Gain from gradient sums; errors if the denominator vanishes.
    pub fn gain(&self, sum_g: f64, sum_h: f64) -> Result<f64> {
        let denom = self.lambda + sum_h;
        if denom <= 0.0 {
            return Err(Error::Domain(format!("zero denominator (lambda={}, sum h={sum_h})", self.lambda)));
        }
        Ok(sum_g * sum_g / (2.0 * self.n as f64 * denom))
    }

    /// Like [`Self::gain`] but treats a zero gradient sum as gain zero even
    /// when the denominator vanishes (the empty extent at `lambda = 0`).
    pub(crate) fn gain_or_zero(&self, sum_g: f64, sum_h: f64) -> Result<f64> {
        if sum_g == 0.0 {
            Ok(0.0)
        } else {
            self.gain(sum_g, sum_h)
        }
    }

    pub fn weight(&self, sum_g: f64, sum_h: f64) -> Result<f64> {
        let denom = self.lambda + sum_h;
        if denom <= 0.0 {
            return Err(Error::Domain(format!("zero denominator (lambda={}, sum h={sum_h})", self.lambda)));
        }
        Ok(-sum_g / denom)
    }
}

/// Boosting gain `(Σg)² / (2n(λ + Σh))` over `extent`.
pub fn objective(extent: &[usize], stats: &GradientStats, ctx: &ObjectiveContext) -> Result<f64> {
    let (sg, sh) = stats.sums(extent);
    ctx.gain(sg, sh)
}

/// Rule weight `-Σg / (λ + Σh)` minimizing the second-order risk estimate.
pub fn optimal_weight(extent: &[usize], stats: &GradientStats, ctx: &ObjectiveContext) -> Result<f64> {
    let (sg, sh) = stats.sums(extent);
    ctx.weight(sg, sh)
}

/// Mean loss plus `(λ / 2n) Σ w²`.
pub fn risk_from_predictions(
    loss: Loss,
    y: &[f64],
    f: &[f64],
    weights: impl IntoIterator<Item = f64>,
    lambda: f64,
) -> f64 {
    let n = y.len() as f64;
    let mean_loss = y.iter().zip(f).map(|(&y, &f)| loss.value(y, f)).sum::<f64>() / n;
    let penalty: f64 = weights.into_iter().map(|w| w * w).sum();
    mean_loss + lambda / (2.0 * n) * penalty
}

pub fn regularized_risk(ensemble: &RuleEnsemble, ds: &Dataset, loss: Loss, lambda: f64) -> Result<f64> {
    let f = ensemble.predict_dataset(ds)?;
    Ok(risk_from_predictions(loss, ds.target(), &f, ensemble.rules.iter().map(|r| r.weight), lambda))
}
