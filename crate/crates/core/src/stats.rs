//! Small summary statistics over replicate vectors.

use serde::{Deserialize, Serialize};

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Half-width of the 95% normal-approximation interval of the mean.
    pub ci_radius: f64,
    pub count: usize,
}

/// Mean and 95% CI radius. With fewer than two samples the radius is 0.
pub fn summarize(values: &[f64]) -> Summary {
    let count = values.len();
    if count == 0 {
        return Summary {
            mean: f64::NAN,
            ci_radius: 0.0,
            count,
        };
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    let ci_radius = if count < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        Z95 * (var / count as f64).sqrt()
    };
    Summary {
        mean,
        ci_radius,
        count,
    }
}

/// Binomial proportion with a Wald interval.
pub fn proportion(successes: usize, trials: usize) -> Summary {
    let q = successes as f64 / trials as f64;
    Summary {
        mean: q,
        ci_radius: Z95 * (q * (1.0 - q) / trials as f64).sqrt(),
        count: trials,
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_constant_has_zero_radius() {
        let s = summarize(&[2.0; 10]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.ci_radius, 0.0);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
