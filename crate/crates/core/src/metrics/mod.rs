//! Evaluation math: Dice similarity and Student's paired t-test.

mod special;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::BinaryMask;

pub use special::{ln_gamma, reg_inc_beta, student_t_two_tailed};

/// `2|a ∩ b| / (|a| + |b|)`; two empty masks score 1.0.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::ShapeMismatch(a.width(), a.height(), b.width(), b.height()));
    }
    let (mut inter, mut total) = (0usize, 0usize);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        inter += (x && y) as usize;
        total += x as usize + y as usize;
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

/// Case-aligned score vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedScores {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedScores {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::domain(format!("paired scores differ in length: {} vs {}", a.len(), b.len())));
        }
        if a.len() < 2 {
            return Err(Error::domain("a paired t-test needs at least two cases"));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value_two_tailed: f64,
}

impl TTestResult {
    pub fn significance(&self) -> SignificanceBand {
        SignificanceBand::of(self.p_value_two_tailed)
    }
}

/// Significance thresholds used in result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignificanceBand {
    /// p < 0.001
    Strong,
    /// 0.001 <= p < 0.05
    Significant,
    /// p >= 0.05
    NotSignificant,
}

impl SignificanceBand {
    pub fn of(p: f64) -> Self {
        if p < 0.001 {
            Self::Strong
        } else if p < 0.05 {
            Self::Significant
        } else {
            Self::NotSignificant
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Strong => "p < 0.001",
            Self::Significant => "0.001 <= p < 0.05",
            Self::NotSignificant => "p >= 0.05",
        }
    }
}

pub fn paired_t_test(scores: &PairedScores) -> Result<TTestResult> {
    let n = scores.len();
    let d: Vec<f64> = scores.a.iter().zip(&scores.b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = (n - 1) as u64;
    if var == 0.0 {
        if mean == 0.0 {
            return Ok(TTestResult { t_statistic: 0.0, degrees_of_freedom: df, p_value_two_tailed: 1.0 });
        }
        return Err(Error::DegenerateVariance(mean));
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value_two_tailed: student_t_two_tailed(t, df as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask(w: usize, h: usize, on: &[(usize, usize)]) -> BinaryMask {
        let mut m = BinaryMask::new(w, h);
        for &(x, y) in on {
            m.set(x, y, true);
        }
        m
    }

    #[test]
    fn dice_cases() {
        let a = mask(4, 4, &[(0, 0), (1, 0), (2, 0), (3, 0)]);
        let b = mask(4, 4, &[(2, 0), (3, 0), (0, 1), (1, 1)]);
        let c = mask(4, 4, &[(0, 3)]);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        assert_eq!(dice(&a, &c).unwrap(), 0.0);
        assert_eq!(dice(&a, &b).unwrap(), 0.5);
        assert_eq!(dice(&BinaryMask::new(3, 3), &BinaryMask::new(3, 3)).unwrap(), 1.0);
        assert!(dice(&a, &BinaryMask::new(3, 4)).is_err());
    }

    #[test]
    fn hand_case() {
        let s = PairedScores::new(vec![1.0, 2.0, 3.0], vec![0.0; 3]).unwrap();
        let r = paired_t_test(&s).unwrap();
        assert!((r.t_statistic - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.degrees_of_freedom, 2);
        assert!((r.p_value_two_tailed - 0.0742).abs() < 5e-5);
        assert_eq!(r.significance(), SignificanceBand::NotSignificant);
    }

    #[test]
    fn degenerate_inputs() {
        let same = PairedScores::new(vec![0.3, 0.7], vec![0.3, 0.7]).unwrap();
        let r = paired_t_test(&same).unwrap();
        assert_eq!((r.t_statistic, r.p_value_two_tailed), (0.0, 1.0));
        let shifted = PairedScores::new(vec![1.0, 2.0], vec![0.5, 1.5]).unwrap();
        assert!(matches!(paired_t_test(&shifted), Err(Error::DegenerateVariance(_))));
        assert!(PairedScores::new(vec![1.0], vec![1.0]).is_err());
        assert!(PairedScores::new(vec![1.0, 2.0], vec![1.0]).is_err());
    }

    #[test]
    fn bands() {
        assert_eq!(SignificanceBand::of(0.0005), SignificanceBand::Strong);
        assert_eq!(SignificanceBand::of(0.001), SignificanceBand::Significant);
        assert_eq!(SignificanceBand::of(0.049), SignificanceBand::Significant);
        assert_eq!(SignificanceBand::of(0.05), SignificanceBand::NotSignificant);
    }

    #[test]
    fn p_limits() {
        assert_eq!(student_t_two_tailed(0.0, 5.0), 1.0);
        assert!(student_t_two_tailed(1e8, 5.0) < 1e-30);
        assert_eq!(student_t_two_tailed(f64::INFINITY, 5.0), 0.0);
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        prop::collection::vec(any::<bool>(), 64).prop_map(|v| BinaryMask::from_vec(8, 8, v))
    }

    proptest! {
        #[test]
        fn dice_symmetric_and_monotone(a in arb_mask(), b in arb_mask(), x in 0usize..8, y in 0usize..8) {
            prop_assert_eq!(dice(&a, &b).unwrap(), dice(&b, &a).unwrap());
            if !a.is_empty() {
                prop_assert_eq!(dice(&a, &a).unwrap(), 1.0);
            }
            let (mut a2, mut b2) = (a.clone(), b.clone());
            a2.set(x, y, true);
            b2.set(x, y, true);
            prop_assert!(dice(&a2, &b2).unwrap() >= dice(&a, &b).unwrap() - 1e-15);
        }

        #[test]
        fn t_test_antisymmetric(a in prop::collection::vec(0.0f64..1.0, 2..40), seed in any::<u64>()) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| (v * 0.7 + ((seed >> (i % 64)) & 1) as f64 * 0.1) % 1.0).collect();
            let ab = PairedScores::new(a.clone(), b.clone()).unwrap();
            let ba = PairedScores::new(b, a).unwrap();
            if let (Ok(x), Ok(y)) = (paired_t_test(&ab), paired_t_test(&ba)) {
                prop_assert!((x.t_statistic + y.t_statistic).abs() < 1e-12 * x.t_statistic.abs().max(1.0));
                prop_assert!((x.p_value_two_tailed - y.p_value_two_tailed).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&x.p_value_two_tailed));
            }
        }
    }
}
