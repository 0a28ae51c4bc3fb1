//! Small-sample summaries used by the sweep records.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single value.
    pub std: f64,
    /// Half-width of the two-sided 95% Student-t interval on the mean.
    pub ci95: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        let count = values.len();
        if count == 0 {
            return None;
        }
        let n = count as f64;
        let mean = values.iter().sum::<f64>() / n;
        if count == 1 {
            return Some(Self {
                count,
                mean,
                std: 0.0,
                ci95: f64::NAN,
            });
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let std = var.sqrt();
        let t = StudentsT::new(0.0, 1.0, n - 1.0)
            .expect("degrees of freedom positive")
            .inverse_cdf(0.975);
        Some(Self {
            count,
            mean,
            std,
            ci95: t * std / n.sqrt(),
        })
    }

    pub fn ci_low(&self) -> f64 {
        self.mean - self.ci95
    }

    pub fn ci_high(&self) -> f64 {
        self.mean + self.ci95
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedTTest {
    pub n: usize,
    pub mean_diff: f64,
    pub t: f64,
    /// One-sided p-value for the alternative `mean(a − b) < 0`.
    pub p_value: f64,
}

/// One-sided paired t-test of `mean(a) < mean(b)`.
pub fn paired_t_test_less(a: &[f64], b: &[f64]) -> Option<PairedTTest> {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let s = Summary::of(&diffs)?;
    if s.count < 2 {
        return None;
    }
    let se = s.std / (s.count as f64).sqrt();
    let t = if se > 0.0 {
        s.mean / se
    } else if s.mean < 0.0 {
        f64::NEG_INFINITY
    } else if s.mean > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let dist = StudentsT::new(0.0, 1.0, s.count as f64 - 1.0).expect("df positive");
    Some(PairedTTest {
        n: s.count,
        mean_diff: s.mean,
        t,
        p_value: dist.cdf(t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_known_values() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        // t_{0.975, 3} = 3.182446305284263
        assert!((s.ci95 - 3.182446305284263 * s.std / 2.0).abs() < 1e-9);
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn paired_test_direction() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [1.5, 2.4, 3.6, 4.3, 5.7];
        let t = paired_t_test_less(&a, &b).unwrap();
        assert!(t.mean_diff < 0.0);
        assert!(t.p_value < 0.05);
        let rev = paired_t_test_less(&b, &a).unwrap();
        assert!(rev.p_value > 0.95);
    }
}
