//! Income-inequality style indices applied to outcome samples.

use super::MetricsError;

fn mean(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyLedger);
    }
    let mu = values.iter().sum::<f64>() / values.len() as f64;
    if mu == 0.0 {
        return Err(MetricsError::ZeroMean);
    }
    Ok(mu)
}

/// Gini coefficient, `Σᵢ Σⱼ |yᵢ − yⱼ| / (2 n² μ)`.
///
/// Evaluated in O(n log n) from the sorted sample:
/// `Σᵢ Σⱼ |yᵢ − yⱼ| = 2 Σᵢ (2i − n + 1) y₍ᵢ₎` for 0-based ranks.
pub fn gini(values: &[f64]) -> Result<f64, MetricsError> {
    let mu = mean(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let pair_sum: f64 = sorted.iter().enumerate().map(|(i, y)| (2.0 * i as f64 - n + 1.0) * y).sum::<f64>() * 2.0;
    Ok(pair_sum / (2.0 * n * n * mu))
}

fn is_even_integer(alpha: f64) -> bool {
    alpha.fract() == 0.0 && (alpha / 2.0).fract() == 0.0
}

/// Generalized entropy index GE(α).
///
/// α = 0 is the mean log deviation and α = 1 the Theil index. Negative values
/// are only admissible for even integer α; α ≤ 0 also needs strictly positive values.
pub fn generalized_entropy(values: &[f64], alpha: f64) -> Result<f64, MetricsError> {
    let mu = mean(values)?;
    for &y in values {
        let bad = (y < 0.0 && !is_even_integer(alpha)) || (y == 0.0 && alpha <= 0.0);
        if bad {
            return Err(MetricsError::DomainError { alpha, value: y });
        }
    }
    let n = values.len() as f64;
    let ratios = values.iter().map(|y| y / mu);
    let ge = if alpha == 0.0 {
        -ratios.map(f64::ln).sum::<f64>() / n
    } else if alpha == 1.0 {
        ratios.map(|x| if x == 0.0 { 0.0 } else { x * x.ln() }).sum::<f64>() / n
    } else {
        ratios.map(|x| x.powf(alpha) - 1.0).sum::<f64>() / (n * alpha * (alpha - 1.0))
    };
    Ok(ge)
}

/// Theil index, `GE(1)`.
pub fn theil(values: &[f64]) -> Result<f64, MetricsError> {
    generalized_entropy(values, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_gini(y: &[f64]) -> f64 {
        let n = y.len() as f64;
        let mu = y.iter().sum::<f64>() / n;
        let s: f64 = y.iter().flat_map(|a| y.iter().map(move |b| (a - b).abs())).sum();
        s / (2.0 * n * n * mu)
    }

    #[test]
    fn gini_cases() {
        assert_eq!(gini(&[4.0, 4.0, 4.0]).unwrap(), 0.0);
        assert_eq!(gini(&[7.0]).unwrap(), 0.0);
        assert!((gini(&[0.0, 6.0]).unwrap() - brute_gini(&[0.0, 6.0])).abs() < 1e-15);
        assert!((gini(&[0.0, 6.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(gini(&[-1.0, 1.0]), Err(MetricsError::ZeroMean));
    }

    #[test]
    fn ge_cases() {
        assert!(generalized_entropy(&[3.0; 5], 2.0).unwrap().abs() < 1e-15);
        assert!(generalized_entropy(&[3.0; 5], 0.5).unwrap().abs() < 1e-15);
        assert!(theil(&[3.0; 5]).unwrap().abs() < 1e-15);

        // GE(2) is half the squared coefficient of variation.
        let y = [1.0, 3.0];
        let mu = 2.0;
        let var = y.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / 2.0;
        let oracle = 0.5 * var / (mu * mu);
        assert!((generalized_entropy(&y, 2.0).unwrap() - oracle).abs() < 1e-15);
        assert!((oracle - 0.125).abs() < 1e-15);

        assert!(matches!(theil(&[-1.0, 3.0]), Err(MetricsError::DomainError { .. })));
        assert!(generalized_entropy(&[-1.0, 3.0], 2.0).is_ok());
    }

    proptest! {
        #[test]
        fn gini_matches_pairwise_and_is_scale_invariant(y in prop::collection::vec(0.01f64..1e4, 1..60), c in 0.01f64..1e3) {
            let g = gini(&y).unwrap();
            prop_assert!((g - brute_gini(&y)).abs() < 1e-9);
            let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
            prop_assert!((gini(&scaled).unwrap() - g).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&g));
        }

        #[test]
        fn ge_tends_to_theil(y in prop::collection::vec(0.1f64..100.0, 2..40)) {
            let t = theil(&y).unwrap();
            for a in [1.0 - 1e-6, 1.0 + 1e-6] {
                prop_assert!((generalized_entropy(&y, a).unwrap() - t).abs() < 1e-4);
            }
        }
    }
}
