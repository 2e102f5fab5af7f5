//! Two-stage selective inference over a partition of the tests into
//! families: screen each family on its own p-values, count the `R` families
//! that survive out of `S`, then test every survivor at `q' = q R / S`.

use std::collections::HashMap;

use crate::error::{check_level, Error, Result};
use crate::fdr::{adjust, FdrOutcome, Method, PValueSet};

/// Assignment of every test to exactly one of `S` named sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    names: Vec<String>,
    membership: Vec<usize>,
}

impl Partition {
    /// `membership[k]` is the set index of test `k`; sets with no members
    /// are allowed and still count toward `S`.
    pub fn new(names: Vec<String>, membership: Vec<usize>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidPartition("no sets defined".into()));
        }
        if let Some(&bad) = membership.iter().find(|&&m| m >= names.len()) {
            return Err(Error::InvalidPartition(format!(
                "set index {bad} out of range for {} sets",
                names.len()
            )));
        }
        Ok(Self { names, membership })
    }

    /// Builds a partition from per-test labels, numbering sets in order of
    /// first appearance.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let mut names = Vec::new();
        let mut index = HashMap::new();
        let membership = labels
            .iter()
            .map(|label| {
                let label = label.as_ref();
                *index.entry(label.to_string()).or_insert_with(|| {
                    names.push(label.to_string());
                    names.len() - 1
                })
            })
            .collect();
        Self::new(names, membership)
    }

    pub fn set_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    pub fn len(&self) -> usize {
        self.membership.len()
    }

    pub fn is_empty(&self) -> bool {
        self.membership.is_empty()
    }

    /// Input positions belonging to each set.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.names.len()];
        for (k, &m) in self.membership.iter().enumerate() {
            out[m].push(k);
        }
        out
    }
}

/// A first-stage rule deciding whether a family shows any signal. It may
/// only look at the p-values of the family it is given.
pub trait Screen: Sync {
    fn passes(&self, p: &[f64]) -> Result<bool>;
}

/// Simes global test at `level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simes {
    pub level: f64,
}

impl Default for Simes {
    fn default() -> Self {
        Self { level: 0.05 }
    }
}

impl Screen for Simes {
    fn passes(&self, p: &[f64]) -> Result<bool> {
        simes_test(p, self.level)
    }
}

/// Any procedure from [`crate::fdr`] used as a detector: the family passes
/// when the procedure rejects at least one test at `level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcedureScreen {
    pub method: Method,
    pub level: f64,
}

impl Screen for ProcedureScreen {
    fn passes(&self, p: &[f64]) -> Result<bool> {
        if p.is_empty() {
            return Ok(false);
        }
        let set = PValueSet::from_slice(p)?;
        Ok(adjust(self.method, &set, self.level)?.rejection_count() > 0)
    }
}

/// Simes test: true iff `min_i p(i) V / i <= alpha`. An empty family never
/// passes.
pub fn simes_test(p: &[f64], alpha: f64) -> Result<bool> {
    let alpha = check_level(alpha)?;
    if p.is_empty() {
        return Ok(false);
    }
    let set = PValueSet::from_slice(p)?;
    let v = set.len() as f64;
    Ok(set
        .sorted()
        .iter()
        .enumerate()
        .any(|(rank, &x)| x * v / (rank + 1) as f64 <= alpha))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BbOutcome {
    /// Number of sets that passed screening.
    pub r: usize,
    /// Number of sets in the partition, empty ones included.
    pub s: usize,
    /// Per set, whether it passed screening.
    pub selected: Vec<bool>,
    /// `q R / S`; zero when nothing was selected.
    pub q_prime: f64,
    /// Second-stage outcome per set at `q_prime`, `None` for unselected sets.
    /// Member order follows [`Partition::members`].
    pub per_set: Vec<Option<FdrOutcome>>,
    /// Global decisions in input order.
    pub rejected: Vec<bool>,
    /// Second-stage adjusted p-values in input order; `None` for tests in
    /// unselected sets.
    pub adjusted_p: Vec<Option<f64>>,
}

impl BbOutcome {
    pub fn rejection_count(&self) -> usize {
        self.rejected.iter().filter(|&&r| r).count()
    }
}

/// Runs the two-stage procedure. Screening uses `screen`; each selected set
/// is then tested with `second_stage` at `q R / S`.
pub fn bb_procedure(
    p: &[f64],
    partition: &Partition,
    q: f64,
    screen: &dyn Screen,
    second_stage: Method,
) -> Result<BbOutcome> {
    let q = check_level(q)?;
    if partition.len() != p.len() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} tests but {} p-values were given",
            partition.len(),
            p.len()
        )));
    }
    let members = partition.members();
    let family_p: Vec<Vec<f64>> = members
        .iter()
        .map(|idx| idx.iter().map(|&k| p[k]).collect())
        .collect();

    let selected = family_p
        .iter()
        .map(|fp| screen.passes(fp))
        .collect::<Result<Vec<bool>>>()?;
    let s = partition.set_count();
    let r = selected.iter().filter(|&&x| x).count();

    let mut rejected = vec![false; p.len()];
    let mut adjusted_p = vec![None; p.len()];
    let mut per_set = vec![None; s];
    let q_prime = q * r as f64 / s as f64;

    if r > 0 {
        for (set, fp) in family_p.iter().enumerate() {
            if !selected[set] {
                continue;
            }
            // a selected set is never empty
            let outcome = adjust(second_stage, &PValueSet::from_slice(fp)?, q_prime)?;
            for (pos, &k) in members[set].iter().enumerate() {
                rejected[k] = outcome.rejected[pos];
                adjusted_p[k] = Some(outcome.adjusted_p[pos]);
            }
            per_set[set] = Some(outcome);
        }
    }

    Ok(BbOutcome {
        r,
        s,
        selected,
        q_prime,
        per_set,
        rejected,
        adjusted_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdr::bh_decide;
    use proptest::prelude::*;

    const FIGURE_ONE: [f64; 17] = [
        0.0026, 0.01, 0.014, 0.025, 0.042, 0.066, 0.1, 0.12, 0.17, 0.28, 0.36, 0.524, 0.61, 0.68,
        0.78, 0.9, 0.96,
    ];

    #[test]
    fn simes_examples() {
        assert!(simes_test(&[0.01], 0.05).unwrap());
        assert!(!simes_test(&[0.06, 0.9], 0.05).unwrap());
        assert!(simes_test(&FIGURE_ONE, 0.2).unwrap());
        assert!(!simes_test(&[], 0.05).unwrap());
        assert!(simes_test(&[0.5], 1.5).is_err());
    }

    #[test]
    fn nothing_selected_stops() {
        let p = [0.5, 0.6, 0.7, 0.8];
        let part = Partition::from_labels(&["a", "a", "b", "b"]).unwrap();
        let out = bb_procedure(&p, &part, 0.05, &Simes::default(), Method::Bh).unwrap();
        assert_eq!(out.r, 0);
        assert_eq!(out.q_prime, 0.0);
        assert_eq!(out.rejection_count(), 0);
        assert!(out.adjusted_p.iter().all(Option::is_none));
    }

    #[test]
    fn both_selected_matches_plain_procedure() {
        let a = [0.001, 0.004, 0.3, 0.02];
        let b = [0.0001, 0.2, 0.03];
        let p: Vec<f64> = a.iter().chain(&b).copied().collect();
        let part = Partition::from_labels(&["a", "a", "a", "a", "b", "b", "b"]).unwrap();
        let out = bb_procedure(&p, &part, 0.05, &Simes::default(), Method::Bh).unwrap();
        assert_eq!((out.r, out.s), (2, 2));
        assert_eq!(out.q_prime, 0.05);
        let plain_a = bh_decide(&PValueSet::from_slice(&a).unwrap(), 0.05).unwrap();
        let plain_b = bh_decide(&PValueSet::from_slice(&b).unwrap(), 0.05).unwrap();
        assert_eq!(out.per_set[0].as_ref().unwrap().rejected, plain_a.rejected);
        assert_eq!(out.per_set[1].as_ref().unwrap().rejected, plain_b.rejected);
    }

    #[test]
    fn one_of_two_selected_halves_level() {
        let p = [0.001, 0.004, 0.3, 0.5, 0.6, 0.9];
        let part = Partition::from_labels(&["a", "a", "a", "b", "b", "b"]).unwrap();
        let out = bb_procedure(&p, &part, 0.05, &Simes::default(), Method::Bh).unwrap();
        assert_eq!(out.r, 1);
        assert!((out.q_prime - 0.025).abs() < 1e-15);
        assert_eq!(out.rejected, vec![true, true, false, false, false, false]);
    }

    #[test]
    fn empty_sets_count_toward_s() {
        let p = [0.001, 0.004, 0.3];
        let part = Partition::new(vec!["a".into(), "b".into(), "c".into()], vec![0, 0, 0]).unwrap();
        let out = bb_procedure(&p, &part, 0.06, &Simes::default(), Method::Bh).unwrap();
        assert_eq!((out.r, out.s), (1, 3));
        assert!((out.q_prime - 0.02).abs() < 1e-15);
    }

    #[test]
    fn partition_errors() {
        assert!(Partition::new(vec![], vec![]).is_err());
        assert!(Partition::new(vec!["a".into()], vec![0, 1]).is_err());
        let part = Partition::from_labels(&["a", "b"]).unwrap();
        assert!(bb_procedure(&[0.1], &part, 0.05, &Simes::default(), Method::Bh).is_err());
    }

    #[test]
    fn procedure_screen_agrees_with_simes_for_bh() {
        let screen = ProcedureScreen { method: Method::Bh, level: 0.05 };
        assert!(screen.passes(&[0.01, 0.5]).unwrap());
        assert!(!screen.passes(&[0.06, 0.9]).unwrap());
        assert!(!screen.passes(&[]).unwrap());
    }

    fn labelled() -> impl Strategy<Value = (Vec<f64>, Vec<usize>)> {
        prop::collection::vec((0.0f64..=1.0, 0usize..3), 1..60)
            .prop_map(|v| v.into_iter().unzip())
    }

    proptest! {
        #[test]
        fn simes_equals_bh_nonempty(p in prop::collection::vec(0.0f64..=1.0, 1..80), alpha in 0.001f64..0.999) {
            let bh = bh_decide(&PValueSet::from_slice(&p).unwrap(), alpha).unwrap();
            prop_assert_eq!(simes_test(&p, alpha).unwrap(), bh.rejection_count() > 0);
        }

        #[test]
        fn screening_is_local((p, labels) in labelled(), noise in prop::collection::vec(0.0f64..=1.0, 60)) {
            let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
            let part = Partition::new(names, labels.clone()).unwrap();
            let base = bb_procedure(&p, &part, 0.05, &Simes::default(), Method::Bh).unwrap();
            // perturb everything outside set 0
            let moved: Vec<f64> = p.iter().zip(&labels).zip(&noise)
                .map(|((&x, &l), &n)| if l == 0 { x } else { n })
                .collect();
            let other = bb_procedure(&moved, &part, 0.05, &Simes::default(), Method::Bh).unwrap();
            prop_assert_eq!(base.selected[0], other.selected[0]);
        }

        #[test]
        fn failing_set_shrinks_rejections((p, labels) in labelled(), extra in prop::collection::vec(0.5f64..=1.0, 1..10)) {
            let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
            let part = Partition::new(names.clone(), labels.clone()).unwrap();
            let base = bb_procedure(&p, &part, 0.05, &Simes::default(), Method::Bky).unwrap();

            let mut names4 = names;
            names4.push("d".into());
            let mut labels4 = labels;
            labels4.extend(std::iter::repeat_n(3, extra.len()));
            let mut p4 = p.clone();
            p4.extend(&extra);
            let part4 = Partition::new(names4, labels4).unwrap();
            let grown = bb_procedure(&p4, &part4, 0.05, &Simes::default(), Method::Bky).unwrap();
            prop_assert!(!grown.selected[3]);
            prop_assert_eq!(grown.r, base.r);
            prop_assert!(grown.q_prime <= base.q_prime);
            for k in 0..p.len() {
                prop_assert!(!grown.rejected[k] || base.rejected[k]);
            }
        }
    }
}
