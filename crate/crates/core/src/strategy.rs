//! Frontier utility, strategy presets, selection and termination criteria.
//!
//! Utility of a frontier `f` among the current candidates:
//!
//! ```text
//! u(f) = alpha * IG(f) - (1 - alpha) * dist(f) + beta * S(f)
//! ```
//!
//! IG and dist are min-max normalized over the candidates; S is used as is.

use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::str::FromStr;

use crate::error::{param_err, Error, Result};
use crate::gridmap::{coverage_ratio, GridMap};
use crate::perception::Frontier;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityParams {
    alpha: f64,
    beta: f64,
}

impl UtilityParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(param_err!("alpha must lie in [0, 1], got {alpha}"));
        }
        if !beta.is_finite() {
            return Err(param_err!("beta must be finite, got {beta}"));
        }
        Ok(UtilityParams { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn utility(&self, ig_norm: f64, dist_norm: f64, s: f64) -> f64 {
        self.alpha * ig_norm - (1.0 - self.alpha) * dist_norm + self.beta * s
    }
}

/// How the information gain of a frontier is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseStrategy {
    /// Nearest frontier; gain ignored.
    Nf,
    /// Optimistic gain (unknown space assumed free).
    Ig,
    /// Exact gain from the ground truth.
    IgStar,
}

impl BaseStrategy {
    pub fn default_alpha(self) -> f64 {
        match self {
            BaseStrategy::Nf => 0.0,
            BaseStrategy::Ig | BaseStrategy::IgStar => 0.5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BaseStrategy::Nf => "NF",
            BaseStrategy::Ig => "IG",
            BaseStrategy::IgStar => "IG*",
        }
    }
}

/// A base strategy, optionally biased by saliency with weight beta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyKind {
    pub base: BaseStrategy,
    pub saliency_beta: Option<f64>,
}

impl StrategyKind {
    pub const fn plain(base: BaseStrategy) -> Self {
        StrategyKind {
            base,
            saliency_beta: None,
        }
    }

    pub const fn biased(base: BaseStrategy, beta: f64) -> Self {
        StrategyKind {
            base,
            saliency_beta: Some(beta),
        }
    }

    pub fn uses_saliency(&self) -> bool {
        self.saliency_beta.is_some_and(|b| b != 0.0)
    }

    pub fn params(&self) -> UtilityParams {
        UtilityParams {
            alpha: self.base.default_alpha(),
            beta: self.saliency_beta.unwrap_or(0.0),
        }
    }

    /// The twelve configurations of the reference experiment table.
    pub fn presets() -> Vec<StrategyKind> {
        use BaseStrategy::*;
        let mut v = vec![StrategyKind::plain(Nf)];
        v.extend([1.0, 2.0, 4.0, -2.0].map(|b| StrategyKind::biased(Nf, b)));
        v.push(StrategyKind::plain(Ig));
        v.extend([1.0, 2.0, 4.0].map(|b| StrategyKind::biased(Ig, b)));
        v.push(StrategyKind::plain(IgStar));
        v.extend([2.0, 4.0].map(|b| StrategyKind::biased(IgStar, b)));
        v
    }

    /// File-name friendly label, e.g. `NF_S-2`.
    pub fn slug(&self) -> String {
        self.to_string()
            .replace('*', "star")
            .replace("+S(", "_S")
            .replace(')', "")
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base.label())?;
        if let Some(b) = self.saliency_beta {
            write!(f, "+S({b})")?;
        }
        Ok(())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    /// Accepts `NF`, `IG`, `IG*` (or `IGstar`), each optionally followed
    /// by `+S(beta)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (base, rest) = match s.split_once('+') {
            Some((b, r)) => (b.trim(), Some(r.trim())),
            None => (s, None),
        };
        let base = match base.to_ascii_uppercase().as_str() {
            "NF" => BaseStrategy::Nf,
            "IG" => BaseStrategy::Ig,
            "IG*" | "IGSTAR" => BaseStrategy::IgStar,
            _ => return Err(param_err!("unknown strategy {s:?}")),
        };
        let saliency_beta = match rest {
            None => None,
            Some(r) => {
                let inner = r
                    .strip_prefix("S(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| param_err!("expected +S(beta) in {s:?}"))?;
                let beta: f64 = inner
                    .trim()
                    .parse()
                    .map_err(|_| param_err!("bad beta in {s:?}"))?;
                if !beta.is_finite() {
                    return Err(param_err!("bad beta in {s:?}"));
                }
                Some(beta)
            }
        };
        Ok(StrategyKind {
            base,
            saliency_beta,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredFrontier {
    pub frontier: Frontier,
    pub ig_raw: f64,
    pub dist_raw: f64,
    pub ig_norm: f64,
    pub dist_norm: f64,
    pub s: f64,
    pub utility: f64,
}

/// Min-max normalization to [0, 1]; a constant list maps to zeros.
pub fn normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(param_err!("cannot normalize an empty list"));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(param_err!("non-finite value {v} in normalization"));
    }
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if max == min {
        return Ok(vec![0.0; values.len()]);
    }
    let span = max - min;
    Ok(values.iter().map(|&v| (v - min) / span).collect())
}

pub fn score_frontiers(
    frontiers: &[Frontier],
    ig_raw: &[f64],
    dist_raw: &[f64],
    s: &[f64],
    params: UtilityParams,
) -> Result<Vec<ScoredFrontier>> {
    let n = frontiers.len();
    if ig_raw.len() != n || dist_raw.len() != n || s.len() != n {
        return Err(param_err!(
            "length mismatch: {n} frontiers, {} gains, {} distances, {} saliencies",
            ig_raw.len(),
            dist_raw.len(),
            s.len()
        ));
    }
    let ig_norm = normalize(ig_raw)?;
    let dist_norm = normalize(dist_raw)?;
    Ok((0..n)
        .map(|i| ScoredFrontier {
            frontier: frontiers[i].clone(),
            ig_raw: ig_raw[i],
            dist_raw: dist_raw[i],
            ig_norm: ig_norm[i],
            dist_norm: dist_norm[i],
            s: s[i],
            utility: params.utility(ig_norm[i], dist_norm[i], s[i]),
        })
        .collect())
}

/// Highest utility; ties go to the shorter distance, then to the frontier
/// with the smaller first cell index.
pub fn select_frontier(scored: &[ScoredFrontier]) -> Result<&ScoredFrontier> {
    scored
        .iter()
        .min_by(|a, b| {
            b.utility
                .total_cmp(&a.utility)
                .then(a.dist_raw.total_cmp(&b.dist_raw))
                .then(a.frontier.first_cell().cmp(&b.frontier.first_cell()))
        })
        .ok_or(Error::NoCandidates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Continue,
    Explored,
}

/// Replayable sequence of classifier labels (`explored` / `not-explored`).
/// Once exhausted, the last label repeats.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelStream {
    labels: Vec<Verdict>,
    cursor: usize,
}

impl LabelStream {
    pub fn new(labels: Vec<Verdict>) -> Self {
        LabelStream { labels, cursor: 0 }
    }

    pub fn parse<R: Read>(source: R) -> Result<Self> {
        let mut labels = Vec::new();
        for line in BufReader::new(source).lines() {
            let line = line?;
            match line.trim() {
                "" => {}
                "explored" => labels.push(Verdict::Explored),
                "not-explored" => labels.push(Verdict::Continue),
                other => return Err(Error::Format(format!("unknown label {other:?}"))),
            }
        }
        Ok(LabelStream::new(labels))
    }

    pub fn next_label(&mut self) -> Verdict {
        let v = self
            .labels
            .get(self.cursor)
            .or(self.labels.last())
            .copied()
            .unwrap_or(Verdict::Continue);
        self.cursor += 1;
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TerminationCriterion {
    NoFrontiers,
    MinFrontierLength(usize),
    CoverageOracle(f64),
    ExternalLabel(LabelStream),
}

impl TerminationCriterion {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TerminationCriterion::MinFrontierLength(0) => {
                Err(param_err!("minimum frontier length must be at least 1"))
            }
            TerminationCriterion::CoverageOracle(t) if !(t > 0.0 && t <= 1.0) => {
                Err(param_err!("coverage threshold must lie in (0, 1], got {t}"))
            }
            _ => Ok(()),
        }
    }

    /// Parses `none`, `min-length:L`, `coverage:T` or `labels:PATH`.
    pub fn parse_spec(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let c = match kind.trim() {
            "none" | "no-frontiers" => TerminationCriterion::NoFrontiers,
            "min-length" => TerminationCriterion::MinFrontierLength(
                arg.trim()
                    .parse()
                    .map_err(|_| param_err!("bad length in {s:?}"))?,
            ),
            "coverage" => TerminationCriterion::CoverageOracle(
                arg.trim()
                    .parse()
                    .map_err(|_| param_err!("bad threshold in {s:?}"))?,
            ),
            "labels" => {
                TerminationCriterion::ExternalLabel(LabelStream::parse(std::fs::File::open(arg)?)?)
            }
            _ => return Err(param_err!("unknown termination criterion {s:?}")),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn check(
        &mut self,
        map: &GridMap,
        ground_truth: Option<&GridMap>,
        frontiers: &[Frontier],
    ) -> Result<Verdict> {
        let explored = match self {
            TerminationCriterion::NoFrontiers => frontiers.is_empty(),
            TerminationCriterion::MinFrontierLength(l) => frontiers.iter().all(|f| f.len() < *l),
            TerminationCriterion::CoverageOracle(t) => {
                let truth = ground_truth
                    .ok_or_else(|| param_err!("coverage criterion needs the ground truth"))?;
                coverage_ratio(map, truth)? >= *t
            }
            TerminationCriterion::ExternalLabel(stream) => {
                return Ok(stream.next_label());
            }
        };
        Ok(if explored {
            Verdict::Explored
        } else {
            Verdict::Continue
        })
    }
}

impl fmt::Display for TerminationCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerminationCriterion::NoFrontiers => write!(f, "none"),
            TerminationCriterion::MinFrontierLength(l) => write!(f, "min-length:{l}"),
            TerminationCriterion::CoverageOracle(t) => write!(f, "coverage:{t}"),
            TerminationCriterion::ExternalLabel(_) => write!(f, "labels"),
        }
    }
}
