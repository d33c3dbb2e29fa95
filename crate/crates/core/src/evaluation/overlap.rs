//! Segmentation overlap: Dice and Jaccard per tissue class.

use crate::error::{Error, Result};
use crate::volume::{LabelVolume, Plane};

/// Anything holding one class code per cell on a fixed grid.
pub trait LabelGrid {
    /// Grid extent, outermost axis first.
    fn shape(&self) -> Vec<usize>;
    fn labels(&self) -> &[u8];
}

impl LabelGrid for LabelVolume {
    fn shape(&self) -> Vec<usize> {
        let d = self.dims();
        vec![d.nb, d.na, d.nd]
    }

    fn labels(&self) -> &[u8] {
        self.data()
    }
}

impl LabelGrid for Plane<u8> {
    fn shape(&self) -> Vec<usize> {
        vec![self.width(), self.height()]
    }

    fn labels(&self) -> &[u8] {
        self.data()
    }
}

/// Cell counts of one class in a prediction and its reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Overlap {
    pub pred: u64,
    pub truth: u64,
    pub both: u64,
}

impl Overlap {
    pub fn union(&self) -> u64 {
        self.pred + self.truth - self.both
    }

    /// `None` when neither mask holds the class.
    pub fn dice(&self) -> Option<f64> {
        let denom = self.pred + self.truth;
        (denom > 0).then(|| (2 * self.both) as f64 / denom as f64)
    }

    pub fn jaccard(&self) -> Option<f64> {
        let u = self.union();
        (u > 0).then(|| self.both as f64 / u as f64)
    }
}

fn check_shapes<G: LabelGrid + ?Sized>(pred: &G, truth: &G) -> Result<()> {
    let (p, t) = (pred.shape(), truth.shape());
    if p != t {
        return Err(Error::ShapeMismatch(format!(
            "prediction {p:?} vs reference {t:?}"
        )));
    }
    Ok(())
}

pub fn overlap<G: LabelGrid + ?Sized>(pred: &G, truth: &G, class: u8) -> Result<Overlap> {
    check_shapes(pred, truth)?;
    let mut o = Overlap::default();
    for (&p, &t) in pred.labels().iter().zip(truth.labels()) {
        let (p, t) = (p == class, t == class);
        o.pred += p as u64;
        o.truth += t as u64;
        o.both += (p && t) as u64;
    }
    Ok(o)
}

/// Overlap for every class code `0..=8` in one pass.
pub fn overlap_all<G: LabelGrid + ?Sized>(pred: &G, truth: &G) -> Result<[Overlap; 9]> {
    check_shapes(pred, truth)?;
    let mut out = [Overlap::default(); 9];
    for (index, (&p, &t)) in pred.labels().iter().zip(truth.labels()).enumerate() {
        let (p, t) = (p as usize, t as usize);
        if p >= 9 || t >= 9 {
            return Err(Error::InvalidLabel {
                code: p.max(t) as u8,
                index,
            });
        }
        out[p].pred += 1;
        out[t].truth += 1;
        if p == t {
            out[p].both += 1;
        }
    }
    Ok(out)
}

/// `2|A∩B| / (|A|+|B|)`; `None` when the class is absent from both.
pub fn dice<G: LabelGrid + ?Sized>(pred: &G, truth: &G, class: u8) -> Result<Option<f64>> {
    Ok(overlap(pred, truth, class)?.dice())
}

/// `|A∩B| / |A∪B|`; `None` when the class is absent from both.
pub fn jaccard<G: LabelGrid + ?Sized>(pred: &G, truth: &G, class: u8) -> Result<Option<f64>> {
    Ok(overlap(pred, truth, class)?.jaccard())
}

/// Per-class overlap for tissue classes 1..=8.
///
/// Means run over the classes present in the reference; the others are
/// listed in `excluded`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiceReport {
    /// Index `i` holds class `i + 1`.
    pub dice: [Option<f64>; 8],
    pub jaccard: [Option<f64>; 8],
    pub mean_dice: Option<f64>,
    pub mean_jaccard: Option<f64>,
    pub excluded: Vec<u8>,
}

impl DiceReport {
    pub fn compute<G: LabelGrid + ?Sized>(pred: &G, truth: &G) -> Result<DiceReport> {
        let all = overlap_all(pred, truth)?;
        let mut dice = [None; 8];
        let mut jaccard = [None; 8];
        let mut excluded = Vec::new();
        let (mut sd, mut sj, mut n) = (0.0, 0.0, 0usize);
        for c in 1..9 {
            let o = all[c];
            dice[c - 1] = o.dice();
            jaccard[c - 1] = o.jaccard();
            if o.truth == 0 {
                excluded.push(c as u8);
            } else {
                sd += o.dice().expect("class present");
                sj += o.jaccard().expect("class present");
                n += 1;
            }
        }
        Ok(DiceReport {
            dice,
            jaccard,
            mean_dice: (n > 0).then(|| sd / n as f64),
            mean_jaccard: (n > 0).then(|| sj / n as f64),
            excluded,
        })
    }

    pub fn to_json(&self) -> String {
        use super::report::{fmt_g6, json_array};
        let opt = |v: Option<f64>| v.map_or_else(|| "null".to_string(), fmt_g6);
        let arr = |vals: &[Option<f64>]| json_array(vals.iter().map(|&v| opt(v)));
        format!(
            "{{\n  \"classes\": [1, 2, 3, 4, 5, 6, 7, 8],\n  \"dice\": {},\n  \"jaccard\": {},\n  \"mean_dice\": {},\n  \"mean_jaccard\": {},\n  \"excluded\": {}\n}}\n",
            arr(&self.dice),
            arr(&self.jaccard),
            opt(self.mean_dice),
            opt(self.mean_jaccard),
            json_array(self.excluded.iter().map(|c| c.to_string())),
        )
    }
}
