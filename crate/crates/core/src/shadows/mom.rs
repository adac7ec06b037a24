use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Default number of batches for median-of-means.
pub const DEFAULT_BATCHES: usize = 10;

/// A point estimate with its batch-spread standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Median of `k` contiguous batch means (the first `len % k` batches hold one
/// extra sample). The standard error is the sample deviation of the batch
/// means divided by `√k`.
pub fn median_of_means(values: &[f64], k: usize) -> Result<Estimate> {
    if k == 0 {
        return validation("batch count must be at least 1");
    }
    if k > values.len() {
        return validation(format!("batch count {k} exceeds the {} samples", values.len()));
    }
    let means = batch_means(values, k);
    let mut sorted = means.clone();
    sorted.sort_by(f64::total_cmp);
    let value = if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    };
    let stderr = if k > 1 {
        let mu = means.iter().sum::<f64>() / k as f64;
        let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (k - 1) as f64;
        (var / k as f64).sqrt()
    } else {
        0.0
    };
    Ok(Estimate { value, stderr })
}

pub(crate) fn batch_means(values: &[f64], k: usize) -> Vec<f64> {
    let base = values.len() / k;
    let extra = values.len() % k;
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for b in 0..k {
        let len = base + usize::from(b < extra);
        out.push(values[start..start + len].iter().sum::<f64>() / len as f64);
        start += len;
    }
    out
}

/// Mean and unbiased variance.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mu, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed() {
        let v = [1.0, 2.0, 3.0, 4.0, 100.0, 6.0, 7.0];
        // Batches of 3: [1,2,3] [4,100] [6,7] -> means 2, 52, 6.5.
        let e = median_of_means(&v, 3).unwrap();
        assert_eq!(e.value, 6.5);
        assert!(median_of_means(&v, 8).is_err());
        assert!(median_of_means(&v, 0).is_err());
        assert_eq!(median_of_means(&v, 1).unwrap().value, v.iter().sum::<f64>() / 7.0);
    }

    proptest! {
        #[test]
        fn within_batch_mean_range(v in prop::collection::vec(-1e3f64..1e3, 10..200), k in 1usize..10) {
            let e = median_of_means(&v, k).unwrap();
            let means = batch_means(&v, k);
            let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(e.value >= lo && e.value <= hi);
            prop_assert!(e.stderr >= 0.0);
        }

        #[test]
        fn constant_input_is_exact(c in -10.0f64..10.0, n in 10usize..100) {
            let e = median_of_means(&vec![c; n], 10).unwrap();
            prop_assert!((e.value - c).abs() < 1e-12);
            prop_assert!(e.stderr < 1e-12);
        }
    }
}
