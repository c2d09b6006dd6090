//! Bit-flip metrics and candidate ranking.
//!
//! Every metric has the shape
//!
//! ```text
//! Q(E) = sum_{i in A, i <= i_w} term(|L_i|) + sum_{i in E} |L_i|
//! ```
//!
//! where `L_i` are the decision LLRs of the parent attempt and `term` is
//!
//! | kind         | term(x)                     |
//! |--------------|-----------------------------|
//! | alpha-exact  | softplus(-alpha x) / alpha  |
//! | alpha-relu   | relu(-alpha x) / alpha = 0  |
//! | beta-exact   | softplus(beta - x)          |
//! | beta-relu    | relu(beta - x)              |
//!
//! Smaller is better. The alpha-relu term vanishes identically, so that
//! metric no longer depends on alpha at all.

use std::fmt;
use std::str::FromStr;

use crate::code::PolarCode;
use crate::error::{Error, Result};
use crate::sc::ScTrace;

/// Numerically stable `ln(1 + e^x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Confidence `1 / (1 + e^{-|L|})` of a hard decision, in [0.5, 1).
#[inline]
pub fn p_estimate(llr: f64) -> f64 {
    1.0 / (1.0 + (-llr.abs()).exp())
}

/// Which flip metric ranks the candidates.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricKind {
    AlphaExact(f64),
    AlphaRelu,
    /// One beta per error order; orders past the end reuse the last value.
    BetaExact(Vec<f64>),
    BetaRelu(Vec<f64>),
}

impl MetricKind {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            MetricKind::AlphaExact(a) => a.is_finite() && *a > 0.0,
            MetricKind::AlphaRelu => true,
            MetricKind::BetaExact(b) | MetricKind::BetaRelu(b) => {
                !b.is_empty() && b.iter().all(|v| v.is_finite() && *v > 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::MetricSpec(self.to_string()))
        }
    }

    /// Beta for a candidate of order `order` (1-based).
    pub fn beta(&self, order: usize) -> Option<f64> {
        match self {
            MetricKind::BetaExact(b) | MetricKind::BetaRelu(b) => {
                let idx = order.max(1).min(b.len()) - 1;
                b.get(idx).copied()
            }
            _ => None,
        }
    }

    /// Per-bit term for decision-LLR magnitude `x` at candidate order
    /// `order`.
    #[inline]
    fn term(&self, x: f64, order: usize) -> f64 {
        match self {
            MetricKind::AlphaExact(a) => softplus(-a * x) / a,
            MetricKind::AlphaRelu => 0.0,
            MetricKind::BetaExact(_) => softplus(self.beta(order).unwrap_or(0.0) - x),
            MetricKind::BetaRelu(_) => relu(self.beta(order).unwrap_or(0.0) - x),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |b: &[f64]| {
            b.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            MetricKind::AlphaExact(a) => write!(f, "alpha-exact:{a}"),
            MetricKind::AlphaRelu => write!(f, "alpha-relu"),
            MetricKind::BetaExact(b) => write!(f, "beta-exact:{}", join(b)),
            MetricKind::BetaRelu(b) => write!(f, "beta-relu:{}", join(b)),
        }
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    /// `alpha-exact:<a>`, `alpha-relu`, `beta-exact:<b1,b2,..>`,
    /// `beta-relu:<b1,b2,..>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MetricSpec(s.to_string());
        let (name, args) = match s.trim().split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let list = |args: Option<&str>| -> Result<Vec<f64>> {
            args.ok_or_else(bad)?
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                .collect()
        };
        let kind = match name {
            "alpha-exact" => {
                let a = args.ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?;
                MetricKind::AlphaExact(a)
            }
            "alpha-relu" if args.is_none() => MetricKind::AlphaRelu,
            "beta-exact" => MetricKind::BetaExact(list(args)?),
            "beta-relu" => MetricKind::BetaRelu(list(args)?),
            _ => return Err(bad()),
        };
        kind.validate().map_err(|_| bad())?;
        Ok(kind)
    }
}

/// Ordered set of flipped information positions and its metric.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipSet {
    indices: Vec<usize>,
    metric: f64,
}

impl FlipSet {
    pub fn empty() -> Self {
        Self {
            indices: Vec::new(),
            metric: 0.0,
        }
    }

    /// Validated flip set with metric 0.
    pub fn new(code: &PolarCode, indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::UnorderedFlipSet);
        }
        if let Some(&bad) = indices
            .iter()
            .find(|&&i| i >= code.block_len() || code.is_frozen(i))
        {
            return Err(Error::NotInformation(bad));
        }
        Ok(Self {
            indices,
            metric: 0.0,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn order(&self) -> usize {
        self.indices.len()
    }

    pub fn last(&self) -> Option<usize> {
        self.indices.last().copied()
    }

    pub fn metric(&self) -> f64 {
        self.metric
    }

    pub fn with_metric(mut self, metric: f64) -> Self {
        self.metric = metric;
        self
    }

    fn child(&self, index: usize, metric: f64) -> Self {
        let mut indices = Vec::with_capacity(self.indices.len() + 1);
        indices.extend_from_slice(&self.indices);
        indices.push(index);
        Self { indices, metric }
    }
}

impl fmt::Display for FlipSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

fn metric_with(trace: &ScTrace, set: &FlipSet, code: &PolarCode, kind: &MetricKind) -> Result<f64> {
    let last = set.last().ok_or(Error::EmptyFlipSet)?;
    let order = set.order();
    let llrs = &trace.decision_llrs;
    let head: f64 = code
        .info_set()
        .iter()
        .take_while(|&&i| i <= last)
        .map(|&i| kind.term(llrs[i].abs(), order))
        .sum();
    let flipped: f64 = set.indices().iter().map(|&i| llrs[i].abs()).sum();
    Ok(head + flipped)
}

/// Log-domain metric with multiplicative perturbation alpha.
pub fn q_alpha_exact(trace: &ScTrace, set: &FlipSet, code: &PolarCode, alpha: f64) -> Result<f64> {
    metric_with(trace, set, code, &MetricKind::AlphaExact(alpha))
}

/// ReLU simplification of the alpha metric: just the flipped magnitudes.
pub fn q_alpha_relu(trace: &ScTrace, set: &FlipSet) -> Result<f64> {
    if set.order() == 0 {
        return Err(Error::EmptyFlipSet);
    }
    Ok(set
        .indices()
        .iter()
        .map(|&i| trace.decision_llrs[i].abs())
        .sum())
}

/// Log-domain metric with additive perturbation beta.
pub fn q_beta_exact(trace: &ScTrace, set: &FlipSet, code: &PolarCode, beta: f64) -> Result<f64> {
    metric_with(trace, set, code, &MetricKind::BetaExact(vec![beta]))
}

/// Hardware-friendly beta metric using only additions and comparisons.
pub fn q_beta_relu(trace: &ScTrace, set: &FlipSet, code: &PolarCode, beta: f64) -> Result<f64> {
    metric_with(trace, set, code, &MetricKind::BetaRelu(vec![beta]))
}

/// Metric of `set` under `kind`, using the beta of the set's order.
pub fn metric_value(
    trace: &ScTrace,
    set: &FlipSet,
    code: &PolarCode,
    kind: &MetricKind,
) -> Result<f64> {
    metric_with(trace, set, code, kind)
}

/// All children `parent ∪ {i}`, `i ∈ A`, `i > max(parent)`, scored from the
/// parent's decision LLRs and sorted by ascending metric, ties to the lower
/// index.
pub fn select_candidates(
    trace: &ScTrace,
    parent: &FlipSet,
    code: &PolarCode,
    kind: &MetricKind,
) -> Vec<FlipSet> {
    let order = parent.order() + 1;
    let llrs = &trace.decision_llrs;
    let flipped: f64 = parent.indices().iter().map(|&i| llrs[i].abs()).sum();
    let mut head = 0.0;
    let mut children = Vec::new();
    for &i in code.info_set() {
        let mag = llrs[i].abs();
        head += kind.term(mag, order);
        if parent.last().is_some_and(|last| i <= last) {
            continue;
        }
        children.push(parent.child(i, head + flipped + mag));
    }
    children.sort_by(|a, b| {
        a.metric
            .total_cmp(&b.metric)
            .then_with(|| a.last().cmp(&b.last()))
    });
    children
}
