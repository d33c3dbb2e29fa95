//! Three-cluster score simulation: draws a 70 / 30 / 50 cohort of
//! (drusen, swelling) pairs from zero-truncated Gaussians and evaluates the
//! default forest on it.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::evaluation::{cross_validate, holdout, json_string, AucReport};
use crate::features::{Diagnosis, EyeFeatures};
use crate::forest::ForestParams;
use crate::seed;

/// Mean and standard deviation of one score in one class (mm³).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassCluster {
    pub class: Diagnosis,
    pub eyes: usize,
    pub drusen: Gaussian,
    pub swelling: Gaussian,
}

/// Reference cohort: ODD, papilledema and healthy clusters.
pub const CLUSTERS: [ClassCluster; 3] = [
    ClassCluster {
        class: Diagnosis::Odd,
        eyes: 70,
        drusen: Gaussian {
            mean: 0.66,
            sd: 0.55,
        },
        swelling: Gaussian {
            mean: 1.98,
            sd: 0.63,
        },
    },
    ClassCluster {
        class: Diagnosis::Papilledema,
        eyes: 30,
        drusen: Gaussian {
            mean: 0.004,
            sd: 0.015,
        },
        swelling: Gaussian {
            mean: 3.43,
            sd: 1.49,
        },
    },
    ClassCluster {
        class: Diagnosis::Healthy,
        eyes: 50,
        drusen: Gaussian {
            mean: 0.002,
            sd: 0.005,
        },
        swelling: Gaussian {
            mean: 1.23,
            sd: 0.26,
        },
    },
];

/// Mean and SD of the pooled mixture, for the collapsed null cohort.
fn pooled(clusters: &[ClassCluster], pick: fn(&ClassCluster) -> Gaussian) -> Gaussian {
    let n: f64 = clusters.iter().map(|c| c.eyes as f64).sum();
    let mean = clusters
        .iter()
        .map(|c| c.eyes as f64 * pick(c).mean)
        .sum::<f64>()
        / n;
    let second = clusters
        .iter()
        .map(|c| {
            let g = pick(c);
            c.eyes as f64 * (g.sd * g.sd + g.mean * g.mean)
        })
        .sum::<f64>()
        / n;
    Gaussian {
        mean,
        sd: (second - mean * mean).sqrt(),
    }
}

/// Rejection sampling of `N(mean, sd)` restricted to `x >= 0`.
pub fn truncated_normal(g: Gaussian, rng: &mut impl Rng) -> f64 {
    if g.sd == 0.0 {
        return g.mean.max(0.0);
    }
    let dist = Normal::new(g.mean, g.sd).expect("finite positive sd");
    loop {
        let x = dist.sample(rng);
        if x >= 0.0 {
            return x;
        }
    }
}

/// One eye per subject. With `collapsed`, every class draws from the pooled
/// distribution so the labels carry no signal.
pub fn sample_cohort(seed: u64, collapsed: bool) -> Vec<EyeFeatures> {
    let pooled_d = pooled(&CLUSTERS, |c| c.drusen);
    let pooled_s = pooled(&CLUSTERS, |c| c.swelling);
    let mut out = Vec::new();
    for cluster in CLUSTERS {
        let mut rng = seed::stream(seed, "cohort", cluster.class.index() as u64);
        let (gd, gs) = if collapsed {
            (pooled_d, pooled_s)
        } else {
            (cluster.drusen, cluster.swelling)
        };
        for i in 0..cluster.eyes {
            let d = truncated_normal(gd, &mut rng);
            let s = truncated_normal(gs, &mut rng);
            let id = format!("{}-{:03}", cluster.class, i + 1);
            out.push(
                EyeFeatures::new(id.clone(), id, d, s, Some(cluster.class))
                    .expect("truncated draws are finite and nonnegative"),
            );
        }
    }
    out
}

pub const MIN_AUC: f64 = 0.95;
pub const MIN_ACCURACY: f64 = 0.88;

#[derive(Debug, Clone, PartialEq)]
pub struct ReproReport {
    pub seed: u64,
    pub collapsed: bool,
    pub cv: AucReport,
    pub holdout: AucReport,
}

impl ReproReport {
    /// Cross-validated mean AUC per class and mean accuracy against the gate.
    pub fn passed(&self) -> bool {
        self.cv.aucs().iter().all(|m| m.mean >= MIN_AUC) && self.cv.accuracy.mean >= MIN_ACCURACY
    }

    pub fn to_json(&self) -> String {
        let indent = |s: &str| s.trim_end().replace('\n', "\n  ");
        format!(
            "{{\n  \"seed\": {},\n  \"cohort\": {},\n  \"gate\": {{\"min_auc\": {}, \"min_accuracy\": {}, \"passed\": {}}},\n  \"cv\": {},\n  \"holdout\": {}\n}}\n",
            self.seed,
            json_string(if self.collapsed { "collapsed" } else { "clusters" }),
            MIN_AUC,
            MIN_ACCURACY,
            self.passed(),
            indent(&self.cv.to_json()),
            indent(&self.holdout.to_json()),
        )
    }
}

/// Sample the cohort, then run 5-fold grouped CV and a 50/50 holdout.
pub fn run_repro(seed: u64, collapsed: bool, params: &ForestParams) -> Result<ReproReport> {
    let cohort = sample_cohort(seed, collapsed);
    let params = ForestParams {
        seed,
        ..params.clone()
    };
    Ok(ReproReport {
        seed,
        collapsed,
        cv: cross_validate(&cohort, 5, &params, seed)?,
        holdout: holdout(&cohort, 0.5, &params, seed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cohort_shape() {
        let c = sample_cohort(1, false);
        assert_eq!(c.len(), 150);
        let count = |d| c.iter().filter(|f| f.true_class == Some(d)).count();
        assert_eq!(count(Diagnosis::Odd), 70);
        assert_eq!(count(Diagnosis::Papilledema), 30);
        assert_eq!(count(Diagnosis::Healthy), 50);
        assert!(c
            .iter()
            .all(|f| f.drusen_score_mm3 >= 0.0 && f.swelling_score_mm3 >= 0.0));
        assert_eq!(c, sample_cohort(1, false));
        assert_ne!(c, sample_cohort(2, false));
    }

    #[test]
    fn truncation_keeps_nonnegative_draws() {
        let mut rng = seed::stream(0, "t", 0);
        let g = Gaussian {
            mean: 0.002,
            sd: 0.005,
        };
        let draws: Vec<f64> = (0..2000).map(|_| truncated_normal(g, &mut rng)).collect();
        assert!(draws.iter().all(|&x| x >= 0.0));
        assert_eq!(
            truncated_normal(
                Gaussian {
                    mean: -1.0,
                    sd: 0.0
                },
                &mut rng
            ),
            0.0
        );
    }

    #[test]
    fn pooled_moments() {
        let g = pooled(&CLUSTERS, |c| c.swelling);
        let expect = (70.0 * 1.98 + 30.0 * 3.43 + 50.0 * 1.23) / 150.0;
        assert!((g.mean - expect).abs() < 1e-12);
        assert!(g.sd > 0.63);
    }
}
