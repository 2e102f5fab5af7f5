//! Monte Carlo evaluation of empirical FDR and power for every
//! method × strategy combination on synthetic normal statistics.
//!
//! Each realization draws `z_i = sqrt(rho) g + sqrt(1 - rho) e_i + shift_i`
//! with a common factor `g`, independent noise `e_i`, and shifts of `±3`
//! on a randomly placed subset of tests. Realization `r` uses its own
//! ChaCha8 stream `r` under the scenario seed, so results do not depend on
//! how the realizations are scheduled across threads.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::directional::{apply_strategy, DirectionalInput, DirectionalOutcome, StrategyKind};
use crate::error::{check_level, Error, Result};
use crate::fdr::Method;

/// Table of the ten synthetic scenarios: id, fraction shifted up, fraction
/// shifted down, pairwise correlation.
pub const SCENARIOS: [(&str, f64, f64, f64); 10] = [
    ("i", 0.0, 0.0, 0.0),
    ("ii", 0.25, 0.0, 0.0),
    ("iii", 0.0, 0.25, 0.0),
    ("iv", 0.25, 0.25, 0.0),
    ("v", 0.10, 0.40, 0.0),
    ("vi", 0.0, 0.0, 0.25),
    ("vii", 0.25, 0.0, 0.25),
    ("viii", 0.0, 0.25, 0.25),
    ("ix", 0.25, 0.25, 0.25),
    ("x", 0.10, 0.40, 0.25),
];

pub const PAPER_TESTS: usize = 2000;
pub const PAPER_REALIZATIONS: usize = 2000;
pub const DESK_TESTS: usize = 500;
pub const DESK_REALIZATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub tests: usize,
    pub frac_pos: f64,
    pub frac_neg: f64,
    pub rho: f64,
    pub realizations: usize,
    pub q: f64,
    pub seed: u64,
    /// Magnitude of the added effect.
    pub shift: f64,
    /// Simes level for the first stage of the BB strategies.
    pub screening_level: f64,
}

impl ScenarioSpec {
    /// One of the ten tabulated scenarios by roman numeral (`"i"`..`"x"`),
    /// at `q = 0.05` with the paper-scale test and realization counts.
    pub fn named(id: &str, seed: u64) -> Result<Self> {
        let key = id.to_ascii_lowercase();
        let &(name, frac_pos, frac_neg, rho) = SCENARIOS
            .iter()
            .find(|s| s.0 == key)
            .ok_or_else(|| Error::InvalidScenario(format!("unknown scenario `{id}`")))?;
        Ok(Self {
            name: name.to_string(),
            tests: PAPER_TESTS,
            frac_pos,
            frac_neg,
            rho,
            realizations: PAPER_REALIZATIONS,
            q: 0.05,
            seed,
            shift: 3.0,
            screening_level: 0.05,
        })
    }

    pub fn with_scale(mut self, tests: usize, realizations: usize) -> Self {
        self.tests = tests;
        self.realizations = realizations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.tests == 0 || self.realizations == 0 {
            return bad("test and realization counts must be positive".into());
        }
        for f in [self.frac_pos, self.frac_neg] {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("fraction {f} outside [0, 1]"));
            }
        }
        if self.frac_pos + self.frac_neg > 1.0 + 1e-12 {
            return bad("effect fractions sum to more than 1".into());
        }
        if self.positive_count() + self.negative_count() > self.tests {
            return bad("more shifted tests than tests".into());
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("correlation {} outside [0, 1)", self.rho));
        }
        if !self.shift.is_finite() {
            return bad("shift must be finite".into());
        }
        check_level(self.q)?;
        check_level(self.screening_level)?;
        Ok(())
    }

    pub fn positive_count(&self) -> usize {
        shifted_count(self.frac_pos, self.tests)
    }

    pub fn negative_count(&self) -> usize {
        shifted_count(self.frac_neg, self.tests)
    }
}

fn shifted_count(frac: f64, tests: usize) -> usize {
    // ceil, but 0.1 * 2000 must stay 200
    ((frac * tests as f64) - 1e-9).ceil().max(0.0) as usize
}

/// RNG for realization `index` of a run seeded with `seed`.
pub fn realization_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub z: Vec<f64>,
    pub truth_pos: Vec<bool>,
    pub truth_neg: Vec<bool>,
}

pub fn generate_realization<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<Realization> {
    spec.validate()?;
    let v = spec.tests;
    let n_pos = spec.positive_count();
    let n_neg = spec.negative_count();

    let mut shifts: Vec<i8> = (0..v)
        .map(|k| {
            if k < n_pos {
                1
            } else if k < n_pos + n_neg {
                -1
            } else {
                0
            }
        })
        .collect();
    shifts.shuffle(rng);

    let common: f64 = if spec.rho > 0.0 {
        rng.sample(StandardNormal)
    } else {
        0.0
    };
    let a = spec.rho.sqrt();
    let b = (1.0 - spec.rho).sqrt();
    let z = shifts
        .iter()
        .map(|&s| {
            let e: f64 = rng.sample(StandardNormal);
            a * common + b * e + f64::from(s) * spec.shift
        })
        .collect();
    Ok(Realization {
        z,
        truth_pos: shifts.iter().map(|&s| s > 0).collect(),
        truth_neg: shifts.iter().map(|&s| s < 0).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum View {
    Both,
    Positive,
    Negative,
}

impl View {
    pub const ALL: [View; 3] = [View::Both, View::Positive, View::Negative];

    pub fn name(self) -> &'static str {
        match self {
            View::Both => "both",
            View::Positive => "positive",
            View::Negative => "negative",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ViewCounts {
    pub true_discoveries: usize,
    pub false_discoveries: usize,
    pub true_effects: usize,
}

impl ViewCounts {
    /// False discovery proportion; zero when nothing was discovered.
    pub fn fdp(&self) -> f64 {
        let d = self.true_discoveries + self.false_discoveries;
        if d == 0 {
            0.0
        } else {
            self.false_discoveries as f64 / d as f64
        }
    }

    /// Fraction of true effects recovered; undefined without true effects.
    pub fn power(&self) -> Option<f64> {
        (self.true_effects > 0).then(|| self.true_discoveries as f64 / self.true_effects as f64)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RealizationTally {
    pub both: ViewCounts,
    pub positive: ViewCounts,
    pub negative: ViewCounts,
}

impl RealizationTally {
    pub fn view(&self, view: View) -> &ViewCounts {
        match view {
            View::Both => &self.both,
            View::Positive => &self.positive,
            View::Negative => &self.negative,
        }
    }
}

/// Counts true and false discoveries per direction. Directional counts use
/// the side-specific decisions (which already require the matching sign of
/// the statistic); the non-directional count ignores direction entirely.
pub fn tally_realization(
    outcome: &DirectionalOutcome,
    truth_pos: &[bool],
    truth_neg: &[bool],
) -> RealizationTally {
    let mut t = RealizationTally::default();
    for k in 0..truth_pos.len() {
        let (tp, tn) = (truth_pos[k], truth_neg[k]);
        let any = tp || tn;
        t.both.true_effects += usize::from(any);
        t.positive.true_effects += usize::from(tp);
        t.negative.true_effects += usize::from(tn);
        if outcome.rejected[k] {
            if any {
                t.both.true_discoveries += 1;
            } else {
                t.both.false_discoveries += 1;
            }
        }
        if outcome.rejected_pos[k] {
            if tp {
                t.positive.true_discoveries += 1;
            } else {
                t.positive.false_discoveries += 1;
            }
        }
        if outcome.rejected_neg[k] {
            if tn {
                t.negative.true_discoveries += 1;
            } else {
                t.negative.false_discoveries += 1;
            }
        }
    }
    t
}

/// Mean of per-realization proportions with a 95% Wald interval
/// `m ± 1.96 sqrt(m (1 - m) / n)`, clipped to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Estimate {
    pub fn wald(mean: f64, n: usize) -> Self {
        let half = 1.96 * (mean * (1.0 - mean) / n as f64).sqrt();
        Self {
            mean,
            lo: (mean - half).max(0.0),
            hi: (mean + half).min(1.0),
            n,
        }
    }

    fn from_samples(samples: impl Iterator<Item = f64>) -> Option<Self> {
        let (sum, n) = samples.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        (n > 0).then(|| Self::wald(sum / n as f64, n))
    }

    pub fn overlaps(&self, lo: f64, hi: f64) -> bool {
        self.lo <= hi && lo <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: Method,
    pub strategy: StrategyKind,
    pub view: View,
    pub fdp: Estimate,
    /// `None` when the scenario has no true effects in this view.
    pub power: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub spec: ScenarioSpec,
    pub rows: Vec<ReportRow>,
}

impl ScenarioReport {
    pub fn get(&self, method: Method, strategy: StrategyKind, view: View) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.strategy == strategy && r.view == view)
    }
}

/// Runs every realization of `spec` through each method × strategy pair.
/// Realizations are spread over the rayon pool; the report is identical to
/// a sequential run.
pub fn run_scenario(
    spec: &ScenarioSpec,
    methods: &[Method],
    strategies: &[StrategyKind],
) -> Result<ScenarioReport> {
    spec.validate()?;
    let combos: Vec<(Method, StrategyKind)> = methods
        .iter()
        .flat_map(|&m| strategies.iter().map(move |&s| (m, s)))
        .collect();

    let tallies: Vec<Vec<RealizationTally>> = (0..spec.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = realization_rng(spec.seed, r);
            let real = generate_realization(spec, &mut rng)?;
            let input = DirectionalInput::from_normal(real.z)?;
            combos
                .iter()
                .map(|&(m, s)| {
                    let out = apply_strategy(&input, s, m, spec.q, spec.screening_level)?;
                    Ok(tally_realization(&out, &real.truth_pos, &real.truth_neg))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(combos.len() * View::ALL.len());
    for (c, &(method, strategy)) in combos.iter().enumerate() {
        for view in View::ALL {
            let counts = || tallies.iter().map(move |t| *t[c].view(view));
            let fdp = Estimate::from_samples(counts().map(|v| v.fdp()))
                .expect("at least one realization");
            let power = Estimate::from_samples(counts().filter_map(|v| v.power()));
            rows.push(ReportRow {
                method,
                strategy,
                view,
                fdp,
                power,
            });
        }
    }
    Ok(ScenarioReport {
        spec: spec.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk(id: &str, seed: u64) -> ScenarioSpec {
        ScenarioSpec::named(id, seed).unwrap().with_scale(200, 50)
    }

    #[test]
    fn scenario_table() {
        let v = ScenarioSpec::named("v", 1).unwrap();
        assert_eq!((v.positive_count(), v.negative_count()), (200, 800));
        assert_eq!(v.rho, 0.0);
        let x = ScenarioSpec::named("X", 1).unwrap();
        assert_eq!(x.rho, 0.25);
        assert!(ScenarioSpec::named("xi", 1).is_err());
        for (id, ..) in SCENARIOS {
            ScenarioSpec::named(id, 0).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn invalid_specs() {
        let mut s = desk("i", 0);
        s.frac_pos = 0.7;
        s.frac_neg = 0.6;
        assert!(s.validate().is_err());
        let mut s = desk("i", 0);
        s.rho = 1.0;
        assert!(s.validate().is_err());
        let mut s = desk("i", 0);
        s.frac_neg = -0.1;
        assert!(generate_realization(&s, &mut realization_rng(0, 0)).is_err());
    }

    #[test]
    fn null_realizations_are_centered() {
        let spec = desk("i", 7).with_scale(2000, 200);
        let mut sum = 0.0;
        let mut n = 0usize;
        for r in 0..spec.realizations as u64 {
            let real = generate_realization(&spec, &mut realization_rng(spec.seed, r)).unwrap();
            assert!(!real.truth_pos.iter().any(|&t| t));
            assert!(!real.truth_neg.iter().any(|&t| t));
            sum += real.z.iter().sum::<f64>();
            n += real.z.len();
        }
        let mean = sum / n as f64;
        assert!(mean.abs() < 3.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn equicorrelated_noise() {
        // average pairwise correlation across tests, estimated per realization
        // pair of columns over 200 realizations of V = 500
        let spec = desk("vi", 11).with_scale(500, 200);
        let draws: Vec<Vec<f64>> = (0..spec.realizations as u64)
            .map(|r| generate_realization(&spec, &mut realization_rng(spec.seed, r)).unwrap().z)
            .collect();
        let n = draws.len() as f64;
        let v = spec.tests;
        let means: Vec<f64> = (0..v).map(|k| draws.iter().map(|d| d[k]).sum::<f64>() / n).collect();
        let sds: Vec<f64> = (0..v)
            .map(|k| (draws.iter().map(|d| (d[k] - means[k]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
            .collect();
        let mut total = 0.0;
        let mut pairs = 0usize;
        for a in (0..v).step_by(5) {
            for b in ((a + 1)..v).step_by(7) {
                let cov = draws.iter().map(|d| (d[a] - means[a]) * (d[b] - means[b])).sum::<f64>() / (n - 1.0);
                total += cov / (sds[a] * sds[b]);
                pairs += 1;
            }
        }
        let avg = total / pairs as f64;
        assert!((avg - 0.25).abs() < 0.01, "average correlation {avg}");
    }

    #[test]
    fn signal_placement() {
        let spec = desk("v", 3);
        let real = generate_realization(&spec, &mut realization_rng(3, 0)).unwrap();
        assert_eq!(real.truth_pos.iter().filter(|&&t| t).count(), 20);
        assert_eq!(real.truth_neg.iter().filter(|&&t| t).count(), 80);
        assert!(real.truth_pos.iter().zip(&real.truth_neg).all(|(&a, &b)| !(a && b)));
        // not all at the front
        assert!(real.truth_pos[..20].iter().any(|&t| !t));
    }

    fn outcome_with(pos: Vec<bool>, neg: Vec<bool>) -> DirectionalOutcome {
        let rejected = pos.iter().zip(&neg).map(|(&a, &b)| a || b).collect();
        let v = pos.len();
        DirectionalOutcome {
            strategy: Some(StrategyKind::Canonical),
            method: Some(Method::Bh),
            q: 0.05,
            level: 0.05,
            adjusted_pos: vec![None; v],
            adjusted_neg: vec![None; v],
            rejected_pos: pos,
            rejected_neg: neg,
            rejected,
            t_pos: f64::INFINITY,
            t_neg: f64::NEG_INFINITY,
            critical_pos: None,
            critical_neg: None,
            sign_mismatches: 0,
            bb: None,
        }
    }

    #[test]
    fn tally_no_rejections() {
        let out = outcome_with(vec![false; 4], vec![false; 4]);
        let t = tally_realization(&out, &[true, false, false, false], &[false; 4]);
        assert_eq!(t.both.fdp(), 0.0);
        assert_eq!(t.positive.power(), Some(0.0));
        assert_eq!(t.negative.power(), None);
    }

    #[test]
    fn tally_perfect() {
        let truth_pos = [true, true, false, false];
        let truth_neg = [false, false, true, false];
        let out = outcome_with(truth_pos.to_vec(), truth_neg.to_vec());
        let t = tally_realization(&out, &truth_pos, &truth_neg);
        for v in View::ALL {
            assert_eq!(t.view(v).fdp(), 0.0);
            assert_eq!(t.view(v).power(), Some(1.0));
        }
    }

    #[test]
    fn tally_hand_fixture() {
        // six tests: two true positives found, one null found on the positive side,
        // one true negative missed
        let truth_pos = [true, true, false, false, false, true];
        let truth_neg = [false, false, false, true, false, false];
        let pos = vec![true, true, true, false, false, false];
        let neg = vec![false; 6];
        let t = tally_realization(&outcome_with(pos, neg), &truth_pos, &truth_neg);
        assert_eq!(t.positive, ViewCounts { true_discoveries: 2, false_discoveries: 1, true_effects: 3 });
        assert!((t.positive.fdp() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.both.true_effects, 4);
        assert_eq!(t.negative.power(), Some(0.0));
    }

    #[test]
    fn wald_interval() {
        let e = Estimate::wald(0.5, 100);
        assert!((e.hi - e.lo - 2.0 * 1.96 * 0.05).abs() < 1e-12);
        let z = Estimate::wald(0.0, 10);
        assert_eq!((z.lo, z.hi), (0.0, 0.0));
        assert!(e.overlaps(0.55, 0.7) && !e.overlaps(0.7, 0.8));
    }

    #[test]
    fn reproducible_and_schedule_independent() {
        let spec = desk("iv", 42);
        let methods = [Method::Bh, Method::Bky];
        let a = run_scenario(&spec, &methods, &StrategyKind::ALL).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_scenario(&spec, &methods, &StrategyKind::ALL)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2 * 6 * 3);
        for row in &a.rows {
            assert!(row.fdp.lo <= row.fdp.mean && row.fdp.mean <= row.fdp.hi);
            assert!((0.0..=1.0).contains(&row.fdp.mean));
        }
    }

    #[test]
    fn null_scenario_has_no_power() {
        let spec = desk("i", 1);
        let rep = run_scenario(&spec, &[Method::Bh], &[StrategyKind::TwoTailed]).unwrap();
        assert!(rep.get(Method::Bh, StrategyKind::TwoTailed, View::Both).unwrap().power.is_none());
    }
}
