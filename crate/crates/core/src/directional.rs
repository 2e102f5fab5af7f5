//! Correction strategies for signed statistics where inference is wanted
//! separately for each direction.
//!
//! | strategy        | procedure input                        | calls        |
//! |-----------------|----------------------------------------|--------------|
//! | `Canonical`     | `{p}`, `{1 - p}`                       | two, V each  |
//! | `Combined`      | `{p} ∪ {1 - p}`                        | one, 2V      |
//! | `TwoTailed`     | `{p_two}`                              | one, V       |
//! | `SplitTails`    | `{p_two : z > 0}`, `{p_two : z < 0}`   | two, V total |
//! | `CanonicalBb`   | as `Canonical`, via two-stage BB       | two          |
//! | `SplitTailsBb`  | as `SplitTails`, via two-stage BB      | two          |
//!
//! `p` is the one-tailed p-value `P(Z >= z)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_level, Error, Result};
use crate::fdr::{adjust, FdrOutcome, Method, PValueSet};
use crate::numerics::{self, DegreesOfFreedom};
use crate::pvalues::two_tailed_unchecked;
use crate::selective::{bb_procedure, Partition, Simes};

/// Where the one-tailed p-values came from, which decides how critical
/// p-values map back to statistic space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Normal,
    StudentT(DegreesOfFreedom),
    /// Supplied by the caller with no known distribution.
    Supplied,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalInput {
    z: Vec<f64>,
    p_one: Vec<f64>,
    reference: Reference,
}

impl DirectionalInput {
    /// Statistics with caller-supplied one-tailed p-values. Passing `dof`
    /// declares them t-distributed, enabling parametric thresholds.
    pub fn new(z: Vec<f64>, p_one: Vec<f64>, dof: Option<DegreesOfFreedom>) -> Result<Self> {
        if z.len() != p_one.len() {
            return Err(Error::LengthMismatch {
                left: z.len(),
                right: p_one.len(),
            });
        }
        if z.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(&bad) = z.iter().find(|x| x.is_nan()) {
            return Err(Error::NonFinite(bad));
        }
        if let Some((index, &value)) = p_one
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::PValueOutOfRange { index, value });
        }
        let reference = dof.map_or(Reference::Supplied, Reference::StudentT);
        Ok(Self { z, p_one, reference })
    }

    /// Standard normal statistics; `p = 1 - Phi(z)`.
    pub fn from_normal(z: Vec<f64>) -> Result<Self> {
        let p_one = z
            .iter()
            .map(|&x| numerics::normal_sf(x))
            .collect::<Result<Vec<_>>>()?;
        let mut input = Self::new(z, p_one, None)?;
        input.reference = Reference::Normal;
        Ok(input)
    }

    /// Student-t statistics with `dof` degrees of freedom.
    pub fn from_t(z: Vec<f64>, dof: DegreesOfFreedom) -> Result<Self> {
        let p_one = z
            .iter()
            .map(|&x| numerics::t_sf(x, dof))
            .collect::<Result<Vec<_>>>()?;
        Self::new(z, p_one, Some(dof))
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn p_one(&self) -> &[f64] {
        &self.p_one
    }

    pub fn reference(&self) -> Reference {
        self.reference
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    fn p_two(&self) -> Vec<f64> {
        self.p_one.iter().map(|&p| two_tailed_unchecked(p)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Canonical,
    Combined,
    TwoTailed,
    SplitTails,
    CanonicalBb,
    SplitTailsBb,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::Canonical,
        StrategyKind::Combined,
        StrategyKind::TwoTailed,
        StrategyKind::SplitTails,
        StrategyKind::CanonicalBb,
        StrategyKind::SplitTailsBb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Canonical => "canonical",
            StrategyKind::Combined => "combined",
            StrategyKind::TwoTailed => "twotailed",
            StrategyKind::SplitTails => "splittails",
            StrategyKind::CanonicalBb => "canonical-bb",
            StrategyKind::SplitTailsBb => "splittails-bb",
        }
    }

    pub fn uses_bb(self) -> bool {
        matches!(self, StrategyKind::CanonicalBb | StrategyKind::SplitTailsBb)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key: String = s
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | '+'))
            .collect();
        match key.as_str() {
            "canonical" => Ok(StrategyKind::Canonical),
            "combined" => Ok(StrategyKind::Combined),
            "twotailed" => Ok(StrategyKind::TwoTailed),
            "splittails" => Ok(StrategyKind::SplitTails),
            "canonicalbb" => Ok(StrategyKind::CanonicalBb),
            "splittailsbb" => Ok(StrategyKind::SplitTailsBb),
            _ => Err(format!("unknown strategy `{s}`")),
        }
    }
}

/// Screening, set counts and modified level of a BB strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BbSummary {
    pub r: usize,
    pub s: usize,
    pub q_prime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalOutcome {
    /// `None` for uncorrected thresholding.
    pub strategy: Option<StrategyKind>,
    pub method: Option<Method>,
    pub q: f64,
    /// Level the adjusted maps are compared against: `q`, or `q'` for BB.
    pub level: f64,
    /// Adjusted p-value for the "effect is positive" question, where defined.
    pub adjusted_pos: Vec<Option<f64>>,
    pub adjusted_neg: Vec<Option<f64>>,
    pub rejected_pos: Vec<bool>,
    pub rejected_neg: Vec<bool>,
    /// Non-directional decisions (either side, or a two-tailed rejection at
    /// `z = 0`).
    pub rejected: Vec<bool>,
    /// Smallest positively rejected statistic, `+inf` if none.
    pub t_pos: f64,
    /// Largest negatively rejected statistic, `-inf` if none.
    pub t_neg: f64,
    /// Critical one-tailed p-value per side (`P(Z >= t)` for the positive
    /// side, `P(Z <= t)` for the negative side).
    pub critical_pos: Option<f64>,
    pub critical_neg: Option<f64>,
    /// Map rejections whose statistic has the opposite sign (or is zero).
    /// These are counted in `rejected` only. They can occur with the
    /// canonical and combined strategies at large `q`, or under BKY when
    /// nearly every test carries signal in one direction.
    pub sign_mismatches: usize,
    pub bb: Option<BbSummary>,
}

impl DirectionalOutcome {
    pub fn count_pos(&self) -> usize {
        self.rejected_pos.iter().filter(|&&r| r).count()
    }

    pub fn count_neg(&self) -> usize {
        self.rejected_neg.iter().filter(|&&r| r).count()
    }
}

/// Statistic-space thresholds for each side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Empirical boundary: extreme rejected statistic, `±inf` if none.
    pub t_pos: f64,
    pub t_neg: f64,
    /// Critical statistic from the critical p-value through the reference
    /// distribution; `None` when p-values were supplied without one.
    pub parametric: Option<(f64, f64)>,
}

fn run(method: Method, values: Vec<f64>, q: f64) -> Result<FdrOutcome> {
    adjust(method, &PValueSet::new(values)?, q)
}

struct Sides {
    adjusted_pos: Vec<Option<f64>>,
    adjusted_neg: Vec<Option<f64>>,
    rejected_pos: Vec<bool>,
    rejected_neg: Vec<bool>,
    undirected: Vec<bool>,
    level: f64,
    bb: Option<BbSummary>,
}

impl Sides {
    fn new(v: usize, level: f64) -> Self {
        Self {
            adjusted_pos: vec![None; v],
            adjusted_neg: vec![None; v],
            rejected_pos: vec![false; v],
            rejected_neg: vec![false; v],
            undirected: vec![false; v],
            level,
            bb: None,
        }
    }
}

fn sign_split(z: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let pos = (0..z.len()).filter(|&k| z[k] > 0.0).collect();
    let neg = (0..z.len()).filter(|&k| z[k] < 0.0).collect();
    (pos, neg)
}

/// Applies one of the six strategies. `screening_level` is the Simes level
/// of the first BB stage and is ignored by the other strategies.
pub fn apply_strategy(
    input: &DirectionalInput,
    strategy: StrategyKind,
    method: Method,
    q: f64,
    screening_level: f64,
) -> Result<DirectionalOutcome> {
    let q = check_level(q)?;
    if strategy.uses_bb() {
        check_level(screening_level)?;
    }
    let v = input.len();
    let z = input.z();
    let p = input.p_one();
    let complement: Vec<f64> = p.iter().map(|&x| 1.0 - x).collect();
    let mut sides = Sides::new(v, q);

    match strategy {
        StrategyKind::Canonical => {
            let pos = run(method, p.to_vec(), q)?;
            let neg = run(method, complement, q)?;
            for k in 0..v {
                sides.adjusted_pos[k] = Some(pos.adjusted_p[k]);
                sides.adjusted_neg[k] = Some(neg.adjusted_p[k]);
            }
            sides.rejected_pos = pos.rejected;
            sides.rejected_neg = neg.rejected;
        }
        StrategyKind::Combined => {
            let mut both = p.to_vec();
            both.extend_from_slice(&complement);
            let out = run(method, both, q)?;
            for k in 0..v {
                sides.adjusted_pos[k] = Some(out.adjusted_p[k]);
                sides.adjusted_neg[k] = Some(out.adjusted_p[v + k]);
                sides.rejected_pos[k] = out.rejected[k];
                sides.rejected_neg[k] = out.rejected[v + k];
            }
        }
        StrategyKind::TwoTailed => {
            let out = run(method, input.p_two(), q)?;
            for k in 0..v {
                let adj = Some(out.adjusted_p[k]);
                if z[k] > 0.0 {
                    sides.adjusted_pos[k] = adj;
                    sides.rejected_pos[k] = out.rejected[k];
                } else if z[k] < 0.0 {
                    sides.adjusted_neg[k] = adj;
                    sides.rejected_neg[k] = out.rejected[k];
                } else {
                    sides.undirected[k] = out.rejected[k];
                }
            }
        }
        StrategyKind::SplitTails => {
            let p_two = input.p_two();
            let (pos_idx, neg_idx) = sign_split(z);
            for k in 0..v {
                if z[k] == 0.0 {
                    sides.adjusted_pos[k] = Some(1.0);
                    sides.adjusted_neg[k] = Some(1.0);
                }
            }
            for (idx, positive) in [(pos_idx, true), (neg_idx, false)] {
                if idx.is_empty() {
                    continue;
                }
                let out = run(method, idx.iter().map(|&k| p_two[k]).collect(), q)?;
                for (pos, &k) in idx.iter().enumerate() {
                    let (adj, rej) = if positive {
                        (&mut sides.adjusted_pos, &mut sides.rejected_pos)
                    } else {
                        (&mut sides.adjusted_neg, &mut sides.rejected_neg)
                    };
                    adj[k] = Some(out.adjusted_p[pos]);
                    rej[k] = out.rejected[pos];
                }
            }
        }
        StrategyKind::CanonicalBb => {
            let mut both = p.to_vec();
            both.extend_from_slice(&complement);
            let membership = (0..2 * v).map(|k| usize::from(k >= v)).collect();
            let partition = Partition::new(vec!["positive".into(), "negative".into()], membership)?;
            let screen = Simes {
                level: screening_level,
            };
            let out = bb_procedure(&both, &partition, q, &screen, method)?;
            for k in 0..v {
                sides.adjusted_pos[k] = out.adjusted_p[k];
                sides.adjusted_neg[k] = out.adjusted_p[v + k];
                sides.rejected_pos[k] = out.rejected[k];
                sides.rejected_neg[k] = out.rejected[v + k];
            }
            sides.level = out.q_prime;
            sides.bb = Some(BbSummary {
                r: out.r,
                s: out.s,
                q_prime: out.q_prime,
            });
        }
        StrategyKind::SplitTailsBb => {
            let p_two = input.p_two();
            let (pos_idx, neg_idx) = sign_split(z);
            let tests: Vec<usize> = pos_idx.iter().chain(&neg_idx).copied().collect();
            let membership = pos_idx
                .iter()
                .map(|_| 0)
                .chain(neg_idx.iter().map(|_| 1))
                .collect();
            let partition = Partition::new(vec!["positive".into(), "negative".into()], membership)?;
            let values: Vec<f64> = tests.iter().map(|&k| p_two[k]).collect();
            let screen = Simes {
                level: screening_level,
            };
            for k in 0..v {
                if z[k] == 0.0 {
                    sides.adjusted_pos[k] = Some(1.0);
                    sides.adjusted_neg[k] = Some(1.0);
                }
            }
            let summary = if tests.is_empty() {
                BbSummary {
                    r: 0,
                    s: 2,
                    q_prime: 0.0,
                }
            } else {
                let out = bb_procedure(&values, &partition, q, &screen, method)?;
                for (pos, &k) in tests.iter().enumerate() {
                    if z[k] > 0.0 {
                        sides.adjusted_pos[k] = out.adjusted_p[pos];
                        sides.rejected_pos[k] = out.rejected[pos];
                    } else {
                        sides.adjusted_neg[k] = out.adjusted_p[pos];
                        sides.rejected_neg[k] = out.rejected[pos];
                    }
                }
                BbSummary {
                    r: out.r,
                    s: out.s,
                    q_prime: out.q_prime,
                }
            };
            sides.level = summary.q_prime;
            sides.bb = Some(summary);
        }
    }

    Ok(finish(input, Some(strategy), Some(method), q, sides))
}

/// Thresholds every test at `alpha` on its two-tailed p-value, with no
/// multiplicity correction.
pub fn apply_uncorrected(input: &DirectionalInput, alpha: f64) -> Result<DirectionalOutcome> {
    let alpha = check_level(alpha)?;
    let z = input.z();
    let mut sides = Sides::new(input.len(), alpha);
    for (k, p_two) in input.p_two().into_iter().enumerate() {
        let rej = p_two <= alpha;
        if z[k] > 0.0 {
            sides.adjusted_pos[k] = Some(p_two);
            sides.rejected_pos[k] = rej;
        } else if z[k] < 0.0 {
            sides.adjusted_neg[k] = Some(p_two);
            sides.rejected_neg[k] = rej;
        } else {
            sides.undirected[k] = rej;
        }
    }
    let mut out = finish(input, None, None, alpha, sides);
    out.critical_pos = Some(0.5 * alpha);
    out.critical_neg = Some(0.5 * alpha);
    Ok(out)
}

fn finish(
    input: &DirectionalInput,
    strategy: Option<StrategyKind>,
    method: Option<Method>,
    q: f64,
    sides: Sides,
) -> DirectionalOutcome {
    let z = input.z();
    let p = input.p_one();
    let v = input.len();
    // A map rejection only counts for its direction when the statistic has
    // the matching sign; anything else is a non-directional rejection.
    let rejected_pos: Vec<bool> = (0..v).map(|k| sides.rejected_pos[k] && z[k] > 0.0).collect();
    let rejected_neg: Vec<bool> = (0..v).map(|k| sides.rejected_neg[k] && z[k] < 0.0).collect();
    let sign_mismatches = (0..v)
        .map(|k| {
            usize::from(sides.rejected_pos[k] && !rejected_pos[k])
                + usize::from(sides.rejected_neg[k] && !rejected_neg[k])
        })
        .sum();
    let rejected = (0..v)
        .map(|k| sides.rejected_pos[k] || sides.rejected_neg[k] || sides.undirected[k])
        .collect();
    let pick = |flags: &[bool]| flags.iter().enumerate().filter(|(_, &r)| r).map(|(k, _)| k).collect::<Vec<_>>();
    let pos = pick(&rejected_pos);
    let neg = pick(&rejected_neg);
    let t_pos = pos.iter().map(|&k| z[k]).fold(f64::INFINITY, f64::min);
    let t_neg = neg.iter().map(|&k| z[k]).fold(f64::NEG_INFINITY, f64::max);
    let critical_pos = pos.iter().map(|&k| p[k]).reduce(f64::max);
    let critical_neg = neg.iter().map(|&k| 1.0 - p[k]).reduce(f64::max);
    DirectionalOutcome {
        strategy,
        method,
        q,
        level: sides.level,
        adjusted_pos: sides.adjusted_pos,
        adjusted_neg: sides.adjusted_neg,
        rejected_pos,
        rejected_neg,
        rejected,
        t_pos,
        t_neg,
        critical_pos,
        critical_neg,
        sign_mismatches,
        bb: sides.bb,
    }
}

/// Upper-tail quantile through the reference distribution.
fn upper_quantile(reference: Reference, tail: f64) -> Option<f64> {
    let p = 1.0 - tail;
    match reference {
        Reference::Normal => numerics::normal_inv_cdf(p).ok(),
        Reference::StudentT(dof) => numerics::t_inv_cdf(p, dof).ok(),
        Reference::Supplied => None,
    }
}

/// Empirical and (when the reference distribution is known) parametric
/// thresholds. Sides without rejections get `±inf`.
pub fn compute_thresholds(input: &DirectionalInput, outcome: &DirectionalOutcome) -> Thresholds {
    let reference = input.reference();
    let parametric = match reference {
        Reference::Supplied => None,
        _ => {
            let pos = outcome
                .critical_pos
                .and_then(|c| upper_quantile(reference, c))
                .unwrap_or(f64::INFINITY);
            let neg = outcome
                .critical_neg
                .and_then(|c| upper_quantile(reference, c).map(|t| -t))
                .unwrap_or(f64::NEG_INFINITY);
            Some((pos, neg))
        }
    };
    Thresholds {
        t_pos: outcome.t_pos,
        t_neg: outcome.t_neg,
        parametric,
    }
}

/// Symmetric critical statistics `±t` for uncorrected two-tailed testing at
/// `alpha`; normal reference when `dof` is `None`.
pub fn uncorrected_thresholds(alpha: f64, dof: Option<DegreesOfFreedom>) -> Result<(f64, f64)> {
    let alpha = check_level(alpha)?;
    let upper = match dof {
        Some(d) => numerics::t_inv_cdf(1.0 - 0.5 * alpha, d)?,
        None => numerics::normal_inv_cdf(1.0 - 0.5 * alpha)?,
    };
    let lower = match dof {
        Some(d) => numerics::t_inv_cdf(0.5 * alpha, d)?,
        None => numerics::normal_inv_cdf(0.5 * alpha)?,
    };
    Ok((upper, lower))
}
