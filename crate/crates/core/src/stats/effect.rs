use crate::error::{Error, Result};

/// Standardized difference of two proportions. The scale is the root mean
/// of the two Bernoulli variances.
pub fn cohens_d(p1: f64, n1: u64, p0: f64, n0: u64) -> Result<f64> {
    if n1 == 0 || n0 == 0 {
        return Err(Error::Data("cohens_d needs non-empty groups".into()));
    }
    let var = (p1 * (1.0 - p1) + p0 * (1.0 - p0)) / 2.0;
    if var <= 0.0 {
        return Err(Error::Undefined("Cohen's d with both groups at 0 or 1"));
    }
    Ok((p1 - p0) / var.sqrt())
}

/// Share of the available headroom recovered by an improvement, in percent.
pub fn gap_normalized(delta_pp: f64, control_acc: f64) -> Result<f64> {
    if control_acc >= 1.0 {
        return Err(Error::Undefined("gap normalization at a ceiling baseline"));
    }
    Ok(100.0 * delta_pp / (100.0 * (1.0 - control_acc)))
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Data("pearson_r needs two equal-length series of at least 2 points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation with a constant series"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn d_basics() {
        assert_eq!(cohens_d(0.4, 10, 0.4, 30).unwrap(), 0.0);
        assert!(cohens_d(1.0, 10, 1.0, 10).is_err());
        assert!(cohens_d(1.0, 10, 0.0, 10).is_err());
        // One group at the ceiling still has a scale from the other.
        let d = cohens_d(1.0, 10, 0.5, 10).unwrap();
        assert!((d - 0.5 / 0.125f64.sqrt()).abs() < 1e-12);
        assert!(cohens_d(0.5, 0, 0.5, 10).is_err());
    }

    #[test]
    fn gap_examples() {
        assert!((gap_normalized(8.3, 0.917).unwrap() - 100.0).abs() < 1e-9);
        assert!((gap_normalized(42.3, 0.417).unwrap() - 72.4).abs() <= 0.5);
        assert_eq!(gap_normalized(0.0, 0.3).unwrap(), 0.0);
        assert!(gap_normalized(1.0, 1.0).is_err());
    }

    #[test]
    fn pearson_extremes() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_r(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson_r(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!(pearson_r(&x, &[3.0; 4]).is_err());
        assert!(pearson_r(&x[..1], &x[..1]).is_err());
    }

    proptest! {
        #[test]
        fn d_antisymmetric(p1 in 0.01f64..0.99, p0 in 0.01f64..0.99, n1 in 1u64..500, n0 in 1u64..500) {
            let fwd = cohens_d(p1, n1, p0, n0).unwrap();
            let back = cohens_d(p0, n0, p1, n1).unwrap();
            prop_assert!((fwd + back).abs() < 1e-12);
        }

        #[test]
        fn gap_recovers_delta(delta in -50.0f64..100.0, c in 0.0f64..0.999) {
            let g = gap_normalized(delta, c).unwrap();
            prop_assert!((g * (100.0 * (1.0 - c)) / 100.0 - delta).abs() < 1e-9);
        }
    }
}
