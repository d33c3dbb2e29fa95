//! Drusen Score and Prelamina Swelling Score.
//!
//! Both scores are voxel counts times the physical voxel volume
//! `dz * dx * dy` of the grid the labels live on:
//!
//! * Drusen Score: every class-8 voxel.
//! * Prelamina Swelling Score: class-1 and class-8 voxels in columns whose
//!   en-face projection contains no RPE (class 4). RPE ends at Bruch's
//!   membrane opening, so the RPE-free columns are the inside of the BMO
//!   cylinder.
//!
//! Counting is integer arithmetic and order independent; the scores are
//! reproducible to the bit regardless of thread count.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::Result;
use crate::features::{Diagnosis, EyeFeatures};
use crate::volume::{LabelVolume, TissueClass};

const RPE: u8 = TissueClass::Rpe as u8;
const PRELAMINA: u8 = TissueClass::RnflPrelamina as u8;
const ODD: u8 = TissueClass::Drusen as u8;

/// `nb x na` boolean map over the B-scan / A-scan plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnfaceMask {
    nb: usize,
    na: usize,
    cells: Vec<bool>,
}

impl EnfaceMask {
    pub fn nb(&self) -> usize {
        self.nb
    }

    pub fn na(&self) -> usize {
        self.na
    }

    pub fn get(&self, b: usize, a: usize) -> bool {
        self.cells[b * self.na + a]
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

/// True where the column `(b, a)` holds no RPE voxel at any depth.
pub fn enface_rpe_mask(labels: &LabelVolume) -> EnfaceMask {
    let dims = labels.dims();
    let cells = labels
        .data()
        .par_chunks(dims.nd)
        .map(|col| !col.contains(&RPE))
        .collect();
    EnfaceMask {
        nb: dims.nb,
        na: dims.na,
        cells,
    }
}

/// Voxel count per tissue class.
pub fn class_counts(labels: &LabelVolume) -> [u64; 9] {
    let dims = labels.dims();
    labels
        .data()
        .par_chunks(dims.na * dims.nd)
        .map(|bscan| {
            let mut c = [0u64; 9];
            for &v in bscan {
                c[v as usize] += 1;
            }
            c
        })
        .reduce(
            || [0u64; 9],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Physical volume (mm³) of each class 0..=8.
pub fn class_volumes(labels: &LabelVolume) -> [f64; 9] {
    let v = labels.spacing().voxel_volume_mm3();
    class_counts(labels).map(|c| c as f64 * v)
}

/// Number of voxels counted by the swelling score.
pub fn swelling_voxel_count(labels: &LabelVolume) -> u64 {
    let dims = labels.dims();
    labels
        .data()
        .par_chunks(dims.nd)
        .map(|col| {
            if col.contains(&RPE) {
                0
            } else {
                col.iter().filter(|&&c| c == PRELAMINA || c == ODD).count() as u64
            }
        })
        .sum()
}

/// Total ODD volume in mm³.
pub fn drusen_score(labels: &LabelVolume) -> f64 {
    class_counts(labels)[ODD as usize] as f64 * labels.spacing().voxel_volume_mm3()
}

/// Prelamina (with ODD) volume inside the BMO cylinder, in mm³.
pub fn swelling_score(labels: &LabelVolume) -> f64 {
    swelling_voxel_count(labels) as f64 * labels.spacing().voxel_volume_mm3()
}

pub fn extract_features(
    labels: &LabelVolume,
    eye_id: &str,
    subject_id: &str,
    true_class: Option<Diagnosis>,
) -> Result<EyeFeatures> {
    EyeFeatures::new(
        eye_id,
        subject_id,
        drusen_score(labels),
        swelling_score(labels),
        true_class,
    )
}

/// Relabel 26-connected class-8 components smaller than `min_voxels`.
///
/// Each removed island takes the most frequent non-ODD class among the
/// voxels touching it (lowest code on ties, background if it touches
/// nothing). Returns the cleaned volume and the number of islands removed.
pub fn remove_small_islands(labels: &LabelVolume, min_voxels: usize) -> (LabelVolume, usize) {
    let dims = labels.dims();
    let mut data = labels.data().to_vec();
    if min_voxels <= 1 {
        return (labels.clone(), 0);
    }
    let mut seen = vec![false; data.len()];
    let mut removed = 0;
    let mut queue = VecDeque::new();
    let mut component = Vec::new();

    let neighbours = |i: usize| {
        let d = i % dims.nd;
        let a = (i / dims.nd) % dims.na;
        let b = i / (dims.nd * dims.na);
        let mut out = Vec::with_capacity(26);
        for db in -1i64..=1 {
            for da in -1i64..=1 {
                for dd in -1i64..=1 {
                    if db == 0 && da == 0 && dd == 0 {
                        continue;
                    }
                    let (nb, na, nd) = (b as i64 + db, a as i64 + da, d as i64 + dd);
                    if nb < 0
                        || na < 0
                        || nd < 0
                        || nb >= dims.nb as i64
                        || na >= dims.na as i64
                        || nd >= dims.nd as i64
                    {
                        continue;
                    }
                    out.push(dims.index(nb as usize, na as usize, nd as usize));
                }
            }
        }
        out
    };

    for start in 0..data.len() {
        if data[start] != ODD || seen[start] {
            continue;
        }
        component.clear();
        seen[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            component.push(i);
            for j in neighbours(i) {
                if data[j] == ODD && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if component.len() >= min_voxels {
            continue;
        }
        let mut votes = [0usize; 9];
        for &i in &component {
            for j in neighbours(i) {
                if data[j] != ODD {
                    votes[data[j] as usize] += 1;
                }
            }
        }
        let fill = (0..9u8)
            .max_by_key(|&c| (votes[c as usize], std::cmp::Reverse(c)))
            .filter(|&c| votes[c as usize] > 0)
            .unwrap_or(0);
        for &i in &component {
            data[i] = fill;
        }
        removed += 1;
    }

    let cleaned =
        LabelVolume::new(dims, labels.spacing(), data).expect("relabelling keeps codes in range");
    (cleaned, removed)
}
