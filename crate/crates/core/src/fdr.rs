//! Step-up FDR procedures (BH, BY, BKY) and the Šidák / Bonferroni FWER
//! baselines.
//!
//! Every procedure returns an [`FdrOutcome`] whose adjusted p-values are
//! coherent with its decisions: a test is rejected at level `q` exactly when
//! its adjusted p-value is `<= q`. Adjusted values are clipped at 1.
//!
//! BKY corrected values solve the BKY inequality for `q` at every rank `i`:
//!
//! ```text
//! corr(i) = min_{j >= i} p(j) (V + 1 - i) / (j - i p(j))
//! adj(i)  = max_{k <= i} corr(k)
//! ```
//!
//! [`bky_decide`] evaluates this literally in O(V^2). [`bky_decide_fast`]
//! rewrites the inner minimum as `(V + 1 - i) / (M(i) - i)` with
//! `M(i) = max_{j >= i} j / p(j)`, a single suffix scan.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_level, Error, Result};

/// An owned set of p-values together with their ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueSet {
    values: Vec<f64>,
    order: Vec<usize>,
}

impl PValueSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::PValueOutOfRange { index, value });
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        // stable, so ties keep input order
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        Ok(Self { values, order })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values in input order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `order()[rank]` is the input position of the `rank`-th smallest value.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Values in ascending order.
    pub fn sorted(&self) -> Vec<f64> {
        self.order.iter().map(|&k| self.values[k]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Bh,
    By,
    Bky,
    Sidak,
    Bonferroni,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Bh,
        Method::By,
        Method::Bky,
        Method::Sidak,
        Method::Bonferroni,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bh => "bh",
            Method::By => "by",
            Method::Bky => "bky",
            Method::Sidak => "sidak",
            Method::Bonferroni => "bonferroni",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bh" => Ok(Method::Bh),
            "by" => Ok(Method::By),
            "bky" => Ok(Method::Bky),
            "sidak" => Ok(Method::Sidak),
            "bonferroni" | "bonf" => Ok(Method::Bonferroni),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// Decisions and adjusted p-values of one procedure, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct FdrOutcome {
    pub rejected: Vec<bool>,
    pub adjusted_p: Vec<f64>,
    /// Largest uncorrected p-value among the rejected tests.
    pub critical_p: Option<f64>,
    pub q: f64,
    pub method: Method,
}

impl FdrOutcome {
    pub fn rejection_count(&self) -> usize {
        self.rejected.iter().filter(|&&r| r).count()
    }

    pub fn len(&self) -> usize {
        self.rejected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rejected.is_empty()
    }

    /// Builds the outcome from adjusted values listed by rank.
    fn from_ranked(p: &PValueSet, ranked_adjusted: Vec<f64>, q: f64, method: Method) -> Self {
        let v = p.len();
        let mut adjusted_p = vec![0.0; v];
        for (rank, &k) in p.order().iter().enumerate() {
            adjusted_p[k] = ranked_adjusted[rank].min(1.0);
        }
        Self::from_adjusted(p.values(), adjusted_p, q, method)
    }

    fn from_adjusted(values: &[f64], adjusted_p: Vec<f64>, q: f64, method: Method) -> Self {
        let rejected: Vec<bool> = adjusted_p.iter().map(|&a| a <= q).collect();
        let critical_p = values
            .iter()
            .zip(&rejected)
            .filter(|(_, &r)| r)
            .map(|(&p, _)| p)
            .reduce(f64::max);
        Self {
            rejected,
            adjusted_p,
            critical_p,
            q,
            method,
        }
    }
}

/// Dispatches to the named procedure; BKY uses the fast path.
pub fn adjust(method: Method, p: &PValueSet, q: f64) -> Result<FdrOutcome> {
    match method {
        Method::Bh => bh_decide(p, q),
        Method::By => by_decide(p, q),
        Method::Bky => bky_decide_fast(p, q),
        Method::Sidak => sidak_adjust(p, q),
        Method::Bonferroni => bonferroni_adjust(p, q),
    }
}

/// `p(i) V / i` monotonized by a running minimum from the top rank.
fn bh_ranked(sorted: &[f64], scale: f64) -> Vec<f64> {
    let v = sorted.len() as f64;
    let mut out = vec![0.0; sorted.len()];
    let mut running = f64::INFINITY;
    for (rank, &p) in sorted.iter().enumerate().rev() {
        let corrected = p * v / (rank + 1) as f64 * scale;
        running = running.min(corrected);
        out[rank] = running;
    }
    out
}

/// Benjamini–Hochberg.
pub fn bh_decide(p: &PValueSet, q: f64) -> Result<FdrOutcome> {
    let q = check_level(q)?;
    let ranked = bh_ranked(&p.sorted(), 1.0);
    Ok(FdrOutcome::from_ranked(p, ranked, q, Method::Bh))
}

/// `c(V) = sum_{j=1}^{V} 1/j`.
pub fn by_constant(v: usize) -> f64 {
    (1..=v).map(|j| 1.0 / j as f64).sum()
}

/// Benjamini–Yekutieli: BH with the slope deflated by `c(V)`.
pub fn by_decide(p: &PValueSet, q: f64) -> Result<FdrOutcome> {
    let q = check_level(q)?;
    let ranked = bh_ranked(&p.sorted(), by_constant(p.len()));
    Ok(FdrOutcome::from_ranked(p, ranked, q, Method::By))
}

/// Running maximum over ranks, then ties forced onto one value.
fn bky_monotonize(sorted: &[f64], mut corrected: Vec<f64>) -> Vec<f64> {
    let mut running = 0.0_f64;
    for c in corrected.iter_mut() {
        running = running.max(*c);
        *c = running;
    }
    // Tied p-values are equal mathematically; rounding in the corrected
    // values must not split them.
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] == sorted[start] {
            end += 1;
        }
        let first = corrected[start];
        corrected[start..end].fill(first);
        start = end;
    }
    corrected
}

/// Corrected BKY value for a single `(i, j)` pair, both 1-based.
#[inline]
fn bky_pair(p_j: f64, i: usize, j: usize, v: usize) -> f64 {
    let denom = j as f64 - i as f64 * p_j;
    if denom <= 0.0 {
        // only p(j) = 1 with j = i: never rejectable
        f64::INFINITY
    } else {
        p_j * (v + 1 - i) as f64 / denom
    }
}

/// Benjamini–Krieger–Yekutieli multi-stage procedure, evaluated literally
/// over every `(i, j)` pair. Quadratic in `V`; see [`bky_decide_fast`].
pub fn bky_decide(p: &PValueSet, q: f64) -> Result<FdrOutcome> {
    let q = check_level(q)?;
    let sorted = p.sorted();
    let v = sorted.len();
    let corrected: Vec<f64> = (1..=v)
        .map(|i| {
            (i..=v)
                .map(|j| bky_pair(sorted[j - 1], i, j, v))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let ranked = bky_monotonize(&sorted, corrected);
    Ok(FdrOutcome::from_ranked(p, ranked, q, Method::Bky))
}

/// Same decisions as [`bky_decide`] from one suffix scan after sorting.
pub fn bky_decide_fast(p: &PValueSet, q: f64) -> Result<FdrOutcome> {
    let q = check_level(q)?;
    let sorted = p.sorted();
    let v = sorted.len();
    let mut corrected = vec![0.0; v];
    let mut suffix_max = f64::NEG_INFINITY;
    for i in (1..=v).rev() {
        let p_i = sorted[i - 1];
        let ratio = if p_i == 0.0 {
            f64::INFINITY
        } else {
            i as f64 / p_i
        };
        suffix_max = suffix_max.max(ratio);
        let gap = suffix_max - i as f64;
        corrected[i - 1] = if suffix_max == f64::INFINITY {
            0.0
        } else if gap <= 0.0 {
            f64::INFINITY
        } else {
            (v + 1 - i) as f64 / gap
        };
    }
    let ranked = bky_monotonize(&sorted, corrected);
    Ok(FdrOutcome::from_ranked(p, ranked, q, Method::Bky))
}

/// Šidák adjusted p-values `1 - (1 - p)^V`.
pub fn sidak_adjust(p: &PValueSet, q: f64) -> Result<FdrOutcome> {
    let q = check_level(q)?;
    let v = p.len() as f64;
    let adjusted = p
        .values()
        .iter()
        .map(|&x| {
            if p.len() == 1 {
                x
            } else {
                // rounding can push the tiny-p case just past p V
                (-(v * (-x).ln_1p()).exp_m1()).min(x * v).min(1.0)
            }
        })
        .collect();
    Ok(FdrOutcome::from_adjusted(p.values(), adjusted, q, Method::Sidak))
}

/// Bonferroni adjusted p-values `min(1, p V)`.
pub fn bonferroni_adjust(p: &PValueSet, q: f64) -> Result<FdrOutcome> {
    let q = check_level(q)?;
    let v = p.len() as f64;
    let adjusted = p.values().iter().map(|&x| (x * v).min(1.0)).collect();
    Ok(FdrOutcome::from_adjusted(
        p.values(),
        adjusted,
        q,
        Method::Bonferroni,
    ))
}

/// Per-test level `1 - (1 - alpha)^(1/V)`.
pub fn sidak_level(alpha: f64, v: usize) -> Result<f64> {
    let alpha = check_level(alpha)?;
    if v == 0 {
        return Err(Error::Empty);
    }
    Ok(-((-alpha).ln_1p() / v as f64).exp_m1())
}

/// Per-test level `alpha / V`.
pub fn bonferroni_level(alpha: f64, v: usize) -> Result<f64> {
    let alpha = check_level(alpha)?;
    if v == 0 {
        return Err(Error::Empty);
    }
    Ok(alpha / v as f64)
}
