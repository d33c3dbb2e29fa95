//! Fold summaries and their JSON rendering.

use crate::error::{Error, Result};

/// `%g`-style rendering with 6 significant digits.
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return "null".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn json_array(items: impl IntoIterator<Item = String>) -> String {
    format!("[{}]", items.into_iter().collect::<Vec<_>>().join(", "))
}

pub fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Per-fold values of one metric with their mean and sample standard
/// deviation (0 for a single value).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub folds: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl MetricSummary {
    pub fn new(folds: Vec<f64>) -> Result<Self> {
        if folds.is_empty() {
            return Err(Error::Evaluation("no fold values to summarize".into()));
        }
        let n = folds.len() as f64;
        let mean = folds.iter().sum::<f64>() / n;
        let std = if folds.len() > 1 {
            (folds.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        // keep the mean inside the fold range despite rounding
        let lo = folds.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = folds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(MetricSummary {
            mean: mean.clamp(lo, hi),
            std,
            folds,
        })
    }

    pub fn min(&self) -> f64 {
        self.folds.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.folds.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn to_json(&self) -> String {
        format!(
            "{{\"folds\": {}, \"mean\": {}, \"std\": {}}}",
            json_array(self.folds.iter().map(|&v| fmt_g6(v))),
            fmt_g6(self.mean),
            fmt_g6(self.std)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    CrossValidation { folds: usize },
    Holdout,
}

/// Classification metrics over folds (or one held-out half).
#[derive(Debug, Clone, PartialEq)]
pub struct AucReport {
    pub mode: EvalMode,
    pub seed: u64,
    pub trees: usize,
    pub n_eyes: usize,
    pub n_subjects: usize,
    /// Test-set size per fold.
    pub fold_sizes: Vec<usize>,
    pub auc_odd: MetricSummary,
    pub auc_papilledema: MetricSummary,
    pub auc_healthy: MetricSummary,
    pub accuracy: MetricSummary,
}

impl AucReport {
    pub fn aucs(&self) -> [&MetricSummary; 3] {
        [&self.auc_odd, &self.auc_papilledema, &self.auc_healthy]
    }

    pub fn to_json(&self) -> String {
        let (mode, k) = match self.mode {
            EvalMode::CrossValidation { folds } => ("cv", folds),
            EvalMode::Holdout => ("holdout", 1),
        };
        format!(
            "{{\n  \"mode\": {},\n  \"folds\": {k},\n  \"seed\": {},\n  \"trees\": {},\n  \"n_eyes\": {},\n  \"n_subjects\": {},\n  \"fold_sizes\": {},\n  \"auc_odd\": {},\n  \"auc_papilledema\": {},\n  \"auc_healthy\": {},\n  \"accuracy\": {}\n}}\n",
            json_string(mode),
            self.seed,
            self.trees,
            self.n_eyes,
            self.n_subjects,
            json_array(self.fold_sizes.iter().map(|n| n.to_string())),
            self.auc_odd.to_json(),
            self.auc_papilledema.to_json(),
            self.auc_healthy.to_json(),
            self.accuracy.to_json(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_g6(1.0), "1");
        assert_eq!(fmt_g6(0.5), "0.5");
        assert_eq!(fmt_g6(2.0 / 3.0), "0.666667");
        assert_eq!(fmt_g6(0.987654321), "0.987654");
        assert_eq!(fmt_g6(123456.7), "123457");
        assert_eq!(fmt_g6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_g6(1.5e-7), "1.5e-07");
        assert_eq!(fmt_g6(-0.25), "-0.25");
        assert_eq!(fmt_g6(0.0001), "0.0001");
        assert_eq!(fmt_g6(0.9999996), "1");
    }

    #[test]
    fn summary_statistics() {
        let s = MetricSummary::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        let one = MetricSummary::new(vec![0.7]).unwrap();
        assert_eq!(one.std, 0.0);
        assert!(MetricSummary::new(vec![]).is_err());
        let flat = MetricSummary::new(vec![0.1; 5]).unwrap();
        assert!(flat.mean >= flat.min() && flat.mean <= flat.max());
    }

    #[test]
    fn strings_escaped() {
        assert_eq!(json_string("a\"b\\c\n"), "\"a\\\"b\\\\c\\u000a\"");
    }
}
