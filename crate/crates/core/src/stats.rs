//! t-tests, Bonferroni thresholds, sorted regression and value bands.

use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::datamodel::{likert_layout, likert_membership, LikertResponseMatrix};
use crate::error::{Error, Result};

fn check_df(df: f64) -> Result<()> {
    if df > 0.0 && df.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("degrees of freedom must be positive, got {df}")))
    }
}

/// `P(T > |t|)` for a Student t variable.
fn upper_tail(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let t2 = t * t;
    if t2 < df {
        // avoids the cancellation in 1 - df / (df + t^2) near t = 0
        0.5 * (1.0 - beta_reg(0.5, 0.5 * df, t2 / (df + t2)))
    } else {
        0.5 * beta_reg(0.5 * df, 0.5, df / (df + t2))
    }
}

/// Student t distribution function.
pub fn t_cdf(t: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if t.is_nan() {
        return Err(Error::Domain("t is NaN".into()));
    }
    let tail = upper_tail(t, df);
    Ok(if t >= 0.0 { 1.0 - tail } else { tail })
}

/// Inverse of [`t_cdf`] by bisection.
pub fn t_quantile(p: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile level {p} outside (0, 1)")));
    }
    let (mut lo, mut hi) = (-1.0, 1.0);
    while t_cdf(lo, df)? > p {
        lo *= 2.0;
    }
    while t_cdf(hi, df)? < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_cdf(mid, df)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Two-tailed p-value of a t statistic.
pub fn two_tailed_p(t: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    Ok((2.0 * upper_tail(t, df)).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    pub threshold: f64,
    pub rejected: bool,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

fn t_test(x: &[f64], mu0: f64, threshold: f64, df: Option<f64>) -> Result<TestResult> {
    if x.len() < 2 {
        return Err(Error::Input(format!("a t-test needs 2 or more values, got {}", x.len())));
    }
    let sd = sample_sd(x);
    if sd <= 1e-14 * mean(x).abs().max(1.0) {
        return Err(Error::Degenerate("sample variance is zero".into()));
    }
    let statistic = (mean(x) - mu0) / (sd / (x.len() as f64).sqrt());
    let df = df.unwrap_or((x.len() - 1) as f64);
    let p_value = two_tailed_p(statistic, df)?;
    Ok(TestResult {
        statistic,
        df,
        p_value,
        threshold,
        rejected: p_value < threshold,
    })
}

/// Two-tailed paired test of `x - y` against zero. `df` defaults to n - 1.
pub fn paired_t_test(x: &[f64], y: &[f64], threshold: f64, df: Option<f64>) -> Result<TestResult> {
    if x.len() != y.len() {
        return Err(Error::Input(format!(
            "paired samples differ in length: {} and {}",
            x.len(),
            y.len()
        )));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    t_test(&d, 0.0, threshold, df)
}

/// Two-tailed test of the mean of `x` against `mu0`. `df` defaults to n - 1.
pub fn one_sample_t_test(x: &[f64], mu0: f64, threshold: f64, df: Option<f64>) -> Result<TestResult> {
    t_test(x, mu0, threshold, df)
}

pub fn bonferroni_threshold(alpha: f64, comparisons: usize) -> Result<f64> {
    if comparisons == 0 {
        return Err(Error::Input("at least one comparison is needed".into()));
    }
    Ok(alpha / comparisons as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares of the sorted values against their rank 0..n-1. A constant
/// input has R^2 = 0.
pub fn sorted_regression(values: &[f64]) -> Result<RegressionResult> {
    if values.len() < 3 {
        return Err(Error::Input(format!(
            "regression needs 3 or more values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("regression input is not finite".into()));
    }
    let mut y = values.to_vec();
    y.sort_by(f64::total_cmp);
    let n = y.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = mean(&y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - xm;
        let dy = v - ym;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(RegressionResult {
        slope,
        intercept: ym - slope * xm,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueBand {
    pub level: f64,
    /// t interval for the mean.
    pub mean_ci: Band,
    /// Central empirical quantiles.
    pub quantile: Band,
}

/// Linearly interpolated empirical quantile of sorted data.
fn quantile_sorted(y: &[f64], p: f64) -> f64 {
    let h = (y.len() - 1) as f64 * p;
    let k = h.floor() as usize;
    if k + 1 >= y.len() {
        return y[y.len() - 1];
    }
    y[k] + (h - k as f64) * (y[k + 1] - y[k])
}

/// Both readings of a confidence band at `level`.
pub fn value_band(values: &[f64], level: f64) -> Result<ValueBand> {
    if values.len() < 3 {
        return Err(Error::Input(format!("a band needs 3 or more values, got {}", values.len())));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level {level} outside (0, 1)")));
    }
    let mut y = values.to_vec();
    y.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let m = mean(&y);
    let half = t_quantile(1.0 - tail, (y.len() - 1) as f64)? * sample_sd(&y) / (y.len() as f64).sqrt();
    Ok(ValueBand {
        level,
        mean_ci: Band { lo: m - half, hi: m + half },
        quantile: Band {
            lo: quantile_sorted(&y, tail),
            hi: quantile_sorted(&y, 1.0 - tail),
        },
    })
}

/// Conjunction weights whose sum each marginal is compared with, by schema
/// column: A, B, A', B' against (AB, AB'), (AB, A'B), (A'B, A'B'), (AB', A'B').
const MARGINAL_SPLITS: [(usize, usize, usize, &str); 4] =
    [(0, 4, 5, "A"), (1, 4, 6, "B"), (2, 6, 7, "A'"), (3, 5, 7, "B'")];

/// Per-exemplar tests over the subjects of a Likert panel: four paired tests
/// of each marginal against the sum of its two conjunctions, and a
/// one-sample test of the four conjunctions' sum against 1. The threshold is
/// `alpha` divided by the number of exemplars. Subjects missing an answer
/// are left out of the tests that need it.
pub fn panel_tests(
    m: &LikertResponseMatrix,
    alpha: f64,
    df: Option<f64>,
) -> Result<Vec<(String, Result<TestResult>)>> {
    let layout = likert_layout(m)?;
    let threshold = bonferroni_threshold(alpha, layout.len())?;
    let member = |s: usize, q: usize| -> Option<f64> {
        m.entries[s][q].and_then(|v| likert_membership(v.into()).ok())
    };
    let mut out = Vec::new();
    for (ex, idx) in &layout {
        for (x, c1, c2, name) in MARGINAL_SPLITS {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for s in 0..m.subjects.len() {
                if let (Some(v), Some(p), Some(q)) = (member(s, idx[x]), member(s, idx[c1]), member(s, idx[c2])) {
                    a.push(v);
                    b.push(p + q);
                }
            }
            out.push((format!("{ex}:{name}"), paired_t_test(&a, &b, threshold, df)));
        }
        let sums: Vec<f64> = (0..m.subjects.len())
            .filter_map(|s| (4..8).map(|k| member(s, idx[k])).sum::<Option<f64>>())
            .collect();
        out.push((format!("{ex}:sum"), one_sample_t_test(&sums, 1.0, threshold, df)));
    }
    Ok(out)
}
