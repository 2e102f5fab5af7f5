//! One-tailed to two-tailed p-value conversion.

use crate::error::{Error, Result};

/// How one-tailed p-values were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailConversionMode {
    /// Parametric or otherwise continuous p-values.
    Continuous,
    /// Permutation p-values from `permutations` (J >= 1) relabellings.
    Discrete { permutations: u64 },
}

impl TailConversionMode {
    pub fn discrete(permutations: u64) -> Result<Self> {
        if permutations == 0 {
            Err(Error::InvalidPermutationCount)
        } else {
            Ok(Self::Discrete { permutations })
        }
    }

    /// The correction term: 0 for continuous, 1/J for discrete.
    pub fn correction(self) -> f64 {
        match self {
            Self::Continuous => 0.0,
            Self::Discrete { permutations } => 1.0 / permutations as f64,
        }
    }
}

fn check(p_one: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p_one) {
        Ok(p_one)
    } else {
        Err(Error::ProbabilityOutOfRange(p_one))
    }
}

/// `2 * min(p, 1 - p + C)`, clipped at 1.
pub fn one_to_two_tailed(p_one: f64, mode: TailConversionMode) -> Result<f64> {
    let p = check(p_one)?;
    Ok(match mode {
        TailConversionMode::Continuous => two_tailed_unchecked(p),
        mode => (2.0 * p.min(1.0 - p + mode.correction())).min(1.0),
    })
}

/// `1 - |2p - 1|`, valid for statistics symmetric about zero.
pub fn symmetric_two_tailed(p_one: f64) -> Result<f64> {
    check(p_one).map(two_tailed_unchecked)
}

#[inline]
pub(crate) fn two_tailed_unchecked(p: f64) -> f64 {
    2.0 * p.min(1.0 - p)
}
