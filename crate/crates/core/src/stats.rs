//! Two-sample t-tests and histogram density estimates.
//!
//! The Student-t tail probability is evaluated through the regularized
//! incomplete beta function, `P(|T| > t) = I_x(df/2, 1/2)` with
//! `x = df / (df + t^2)`. The incomplete beta uses the standard continued
//! fraction (modified Lentz), switched to the complementary argument when
//! `x > (a + 1) / (a + b + 2)` so the fraction always converges quickly, and
//! `ln Γ` uses a 9-term Lanczos approximation (g = 7). Combined relative
//! accuracy is around 1e-13 for the degrees of freedom seen in practice.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 10_000;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`, with `y = 1 - x` passed
/// separately so callers can supply it without cancellation.
pub fn beta_reg_complemented(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * y.ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, y) / b
    }
}

/// Regularized incomplete beta `I_x(a, b)` for `x` in `[0, 1]`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    beta_reg_complemented(a, b, x, 1.0 - x)
}

/// Two-tailed Student-t p-value `P(|T| >= |t|)` with `df` degrees of freedom.
pub fn student_t_two_tailed_p(t: f64, df: f64) -> f64 {
    if t.is_nan() || df.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let t2 = t * t;
    let denom = df + t2;
    beta_reg_complemented(0.5 * df, 0.5, df / denom, t2 / denom).clamp(0.0, 1.0)
}

/// Student-t CDF.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_tailed_p(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TTestVariant {
    /// Equal-variance Student test, df = n_a + n_b - 2.
    #[default]
    Pooled,
    /// Unequal variances, Welch-Satterthwaite df.
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NanPolicy {
    /// Any NaN in either sample makes the statistic and p-value NaN.
    Propagate,
    /// Non-finite values are dropped from each sample independently.
    #[default]
    Omit,
}

impl fmt::Display for TTestVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TTestVariant::Pooled => "pooled",
            TTestVariant::Welch => "welch",
        })
    }
}

impl fmt::Display for NanPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NanPolicy::Propagate => "propagate",
            NanPolicy::Omit => "omit",
        })
    }
}

impl std::str::FromStr for TTestVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" => Ok(TTestVariant::Pooled),
            "welch" => Ok(TTestVariant::Welch),
            _ => Err(Error::invalid(format!("unknown t-test variant {s:?} (expected pooled or welch)"))),
        }
    }
}

impl std::str::FromStr for NanPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "propagate" => Ok(NanPolicy::Propagate),
            "omit" => Ok(NanPolicy::Omit),
            _ => Err(Error::invalid(format!("unknown nan policy {s:?} (expected propagate or omit)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub variant: TTestVariant,
    pub nan_policy: NanPolicy,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Independent two-sample two-tailed t-test. Positive statistics mean the
/// first sample has the larger mean.
pub fn ttest_two_tailed(
    a: &[f64],
    b: &[f64],
    variant: TTestVariant,
    nan_policy: NanPolicy,
) -> Result<TTestResult> {
    let (a, b): (Vec<f64>, Vec<f64>) = match nan_policy {
        NanPolicy::Omit => (
            a.iter().copied().filter(|v| v.is_finite()).collect(),
            b.iter().copied().filter(|v| v.is_finite()).collect(),
        ),
        NanPolicy::Propagate => (a.to_vec(), b.to_vec()),
    };
    for (name, s) in [("first", &a), ("second", &b)] {
        if s.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{name} sample has {} usable values; at least 2 required",
                s.len()
            )));
        }
    }
    let (n_a, n_b) = (a.len(), b.len());
    if a.iter().chain(&b).any(|v| v.is_nan()) {
        return Ok(TTestResult {
            statistic: f64::NAN,
            p_value: f64::NAN,
            df: f64::NAN,
            n_a,
            n_b,
            variant,
            nan_policy,
        });
    }

    let (ma, va) = mean_var(&a);
    let (mb, vb) = mean_var(&b);
    let (na, nb) = (n_a as f64, n_b as f64);
    let diff = ma - mb;

    let (se, df) = match variant {
        TTestVariant::Pooled => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            ((pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
        TTestVariant::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let s = qa + qb;
            let df = if s > 0.0 {
                s * s / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0))
            } else {
                na + nb - 2.0
            };
            (s.sqrt(), df)
        }
    };

    if se == 0.0 {
        if diff == 0.0 {
            return Err(Error::InsufficientData(
                "both samples are constant with equal means; t statistic undefined".into(),
            ));
        }
        return Ok(TTestResult {
            statistic: diff.signum() * f64::INFINITY,
            p_value: 0.0,
            df,
            n_a,
            n_b,
            variant,
            nan_policy,
        });
    }

    let statistic = diff / se;
    Ok(TTestResult {
        statistic,
        p_value: student_t_two_tailed_p(statistic, df),
        df,
        n_a,
        n_b,
        variant,
        nan_policy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
}

impl DensityEstimate {
    /// Sum of density times bin width.
    pub fn integral(&self) -> f64 {
        self.densities
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }

    /// CSV `bin_left,bin_right,density`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_left,bin_right,density")?;
        for (d, e) in self.densities.iter().zip(self.bin_edges.windows(2)) {
            writeln!(out, "{},{},{}", e[0], e[1], d)?;
        }
        Ok(())
    }
}

/// Equal-width histogram normalized to unit area. Non-finite values are
/// ignored; a sample with a single distinct value gets a unit-wide range
/// centered on it.
pub fn density_histogram(values: &[f64], bins: usize) -> Result<DensityEstimate> {
    if bins == 0 {
        return Err(Error::invalid("bins must be at least 1"));
    }
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::InsufficientData("no finite values to histogram".into()));
    }
    let (mut lo, mut hi) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut bin_edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    bin_edges.push(hi);

    let mut counts = vec![0usize; bins];
    for &v in &finite {
        let idx = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let n = finite.len() as f64;
    let densities = counts
        .iter()
        .zip(bin_edges.windows(2))
        .map(|(&c, e)| c as f64 / (n * (e[1] - e[0])))
        .collect();
    Ok(DensityEstimate {
        bin_edges,
        densities,
    })
}
