use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
}

/// Pearson correlation and least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub n: usize,
    pub pearson_r: f64,
    pub slope: f64,
    pub intercept: f64,
}

pub fn stats(xs: &[f64], ys: &[f64]) -> Result<Fit, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::DegenerateInput("xs and ys differ in length"));
    }
    if xs.len() < 2 {
        return Err(StatsError::DegenerateInput("need at least two points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(StatsError::DegenerateInput("non-finite value"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::DegenerateInput("xs have zero variance"));
    }
    if syy == 0.0 {
        return Err(StatsError::DegenerateInput("ys have zero variance"));
    }
    let slope = sxy / sxx;
    Ok(Fit { n: xs.len(), pearson_r: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0), slope, intercept: my - slope * mx })
}

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (m, f64::NAN);
    }
    (m, (sample_variance(values) / n).sqrt())
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
}
