//! Subject-grouped, class-stratified partitions.
//!
//! Eyes are never assigned individually: each subject goes to one part with
//! all of its eyes. A subject's class is the most common class among its eyes
//! (the earlier class on ties). Within each class, subjects are sorted by id and
//! shuffled by a stream derived from the seed and the class, so the result
//! does not depend on input order.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::features::{Diagnosis, EyeFeatures};
use crate::seed;

#[derive(Debug, Clone)]
struct Subject {
    eyes: Vec<usize>,
}

/// Subjects per class, each class sorted by subject id.
fn subjects_by_class(features: &[EyeFeatures]) -> Result<[Vec<Subject>; 3]> {
    let mut by_id: BTreeMap<&str, (Vec<usize>, [usize; 3])> = BTreeMap::new();
    for (i, f) in features.iter().enumerate() {
        let class = f
            .true_class
            .ok_or_else(|| Error::Evaluation(format!("eye {} has no true class", f.eye_id)))?;
        let entry = by_id.entry(f.subject_id.as_str()).or_default();
        entry.0.push(i);
        entry.1[class.index()] += 1;
    }
    let mut out: [Vec<Subject>; 3] = Default::default();
    for (eyes, counts) in by_id.into_values() {
        let mut class = 0;
        for c in 1..3 {
            if counts[c] > counts[class] {
                class = c;
            }
        }
        out[class].push(Subject { eyes });
    }
    Ok(out)
}

fn shuffled(subjects: &[Subject], root: u64, label: &str, class: usize) -> Vec<Subject> {
    let mut v = subjects.to_vec();
    v.shuffle(&mut seed::stream(root, label, class as u64));
    v
}

/// Split `n` items by `fractions` using largest remainders (earlier part on
/// ties). Every count is within one of `n * fraction`.
pub fn allocate(n: usize, fractions: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = n.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

fn check_fractions(fractions: &[f64]) -> Result<()> {
    if fractions.is_empty() || fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::InvalidParameter(
            "fractions must be nonempty, finite and nonnegative".into(),
        ));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "fractions sum to {sum}, not 1"
        )));
    }
    Ok(())
}

fn check_class_sizes(classes: &[Vec<Subject>; 3], parts: usize) -> Result<()> {
    for (c, subjects) in classes.iter().enumerate() {
        if !subjects.is_empty() && subjects.len() < parts {
            return Err(Error::Evaluation(format!(
                "class {} has {} subjects, fewer than the {parts} parts requested",
                Diagnosis::from_index(c).expect("valid class index"),
                subjects.len()
            )));
        }
    }
    Ok(())
}

fn finish(mut parts: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for p in &mut parts {
        p.sort_unstable();
    }
    parts
}

/// Partition eyes into `fractions.len()` parts. Returns sorted eye indices
/// per part.
pub fn grouped_split(
    features: &[EyeFeatures],
    fractions: &[f64],
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    check_fractions(fractions)?;
    let classes = subjects_by_class(features)?;
    check_class_sizes(&classes, fractions.len())?;
    let mut parts = vec![Vec::new(); fractions.len()];
    for (c, subjects) in classes.iter().enumerate() {
        let order = shuffled(subjects, seed, "split", c);
        let counts = allocate(order.len(), fractions);
        let mut it = order.into_iter();
        for (part, &n) in parts.iter_mut().zip(&counts) {
            for s in it.by_ref().take(n) {
                part.extend(&s.eyes);
            }
        }
    }
    Ok(finish(parts))
}

/// `k` test folds. Subjects of each class are shuffled and dealt round-robin;
/// the deal continues across classes so fold sizes stay balanced.
pub fn grouped_folds(features: &[EyeFeatures], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    let classes = subjects_by_class(features)?;
    check_class_sizes(&classes, k)?;
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (c, subjects) in classes.iter().enumerate() {
        for s in shuffled(subjects, seed, "fold", c) {
            folds[next].extend(&s.eyes);
            next = (next + 1) % k;
        }
    }
    Ok(finish(folds))
}

/// Subject id of each listed eye.
pub fn subject_of(features: &[EyeFeatures], eyes: &[usize]) -> Vec<String> {
    eyes.iter()
        .map(|&i| features[i].subject_id.clone())
        .collect()
}

/// Distinct subject ids, sorted.
pub fn subject_ids(features: &[EyeFeatures]) -> Vec<&str> {
    let mut ids: Vec<&str> = features.iter().map(|f| f.subject_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}
