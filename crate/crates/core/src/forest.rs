//! Random forest of CART trees over the two-score feature vector
//! `[drusen, swelling]`.
//!
//! Each tree is grown on its own bootstrap resample with Gini impurity.
//! Trees draw randomness from the stream `(seed, "tree", index)` (see
//! [`crate::seed`]). Trees can therefore be grown in any order or in
//! parallel and the model is the same byte for byte.
//!
//! Model files are UTF-8 text:
//!
//! ```text
//! rfmodel v1 trees=2 mtry=1 seed=42 rng=chacha8-sha256 min_leaf=1 max_depth=none bootstrap=true class_weight=none
//! t=0 n=0 f=1 thr=2.5 l=1 r=2
//! t=0 n=1 leaf=0;0;1
//! t=0 n=2 leaf=0;1;0
//! t=1 n=0 leaf=0.25;0.25;0.5
//! ```
//!
//! A sample goes left when `x[f] <= thr`.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{Diagnosis, EyeFeatures};
use crate::seed;

pub const N_FEATURES: usize = 2;
pub const N_CLASSES: usize = 3;
const MODEL_MAGIC: &str = "rfmodel";
const MODEL_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassWeight {
    /// Every sample weighs 1.
    Uniform,
    /// Class `c` weighs `n / (k * n_c)` over the `k` classes present.
    Balanced,
}

impl ClassWeight {
    fn as_str(self) -> &'static str {
        match self {
            ClassWeight::Uniform => "none",
            ClassWeight::Balanced => "balanced",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split.
    pub mtry: usize,
    pub max_depth: Option<usize>,
    /// Minimum samples in each child of a split.
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
    pub class_weight: ClassWeight,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            // floor(sqrt(2))
            mtry: 1,
            max_depth: None,
            min_leaf: 1,
            bootstrap: true,
            seed: 42,
            class_weight: ClassWeight::Uniform,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
        }
        if !(1..=N_FEATURES).contains(&self.mtry) {
            return Err(Error::InvalidParameter(format!(
                "mtry must be in 1..={N_FEATURES}, got {}",
                self.mtry
            )));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidParameter(
                "min_leaf must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        proba: [f64; N_CLASSES],
    },
}

/// Node table; node 0 is the root and children always follow their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_proba(&self, x: &[f64; N_FEATURES]) -> &[f64; N_CLASSES] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { proba } => return proba,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    params: ForestParams,
    trees: Vec<Tree>,
}

/// One training sample.
#[derive(Debug, Clone, Copy)]
struct Sample {
    x: [f64; N_FEATURES],
    class: usize,
    weight: f64,
}

struct Grower<'a> {
    samples: &'a [Sample],
    params: &'a ForestParams,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn class_totals(&self, idx: &[usize]) -> [f64; N_CLASSES] {
        let mut t = [0.0; N_CLASSES];
        for &i in idx {
            let s = &self.samples[i];
            t[s.class] += s.weight;
        }
        t
    }

    fn leaf(totals: [f64; N_CLASSES]) -> Node {
        let sum: f64 = totals.iter().sum();
        Node::Leaf {
            proba: totals.map(|w| w / sum),
        }
    }

    /// Best split on one feature: `(score, threshold, left_count)`, where a
    /// higher score means lower weighted Gini impurity.
    fn best_on_feature(&self, idx: &mut [usize], feature: usize) -> Option<(f64, f64)> {
        let s = self.samples;
        idx.sort_by(|&a, &b| s[a].x[feature].total_cmp(&s[b].x[feature]));
        let total = self.class_totals(idx);
        let n = idx.len();
        let min_leaf = self.params.min_leaf;

        let mut left = [0.0; N_CLASSES];
        let mut best: Option<(f64, f64)> = None;
        for k in 0..n - 1 {
            let si = &s[idx[k]];
            left[si.class] += si.weight;
            let lo = si.x[feature];
            let hi = s[idx[k + 1]].x[feature];
            if lo == hi || k + 1 < min_leaf || n - (k + 1) < min_leaf {
                continue;
            }
            let wl: f64 = left.iter().sum();
            let right: [f64; N_CLASSES] = std::array::from_fn(|c| total[c] - left[c]);
            let wr: f64 = right.iter().sum();
            if wl <= 0.0 || wr <= 0.0 {
                continue;
            }
            let score = left.iter().map(|w| w * w).sum::<f64>() / wl
                + right.iter().map(|w| w * w).sum::<f64>() / wr;
            let mut thr = lo + (hi - lo) / 2.0;
            if thr >= hi {
                thr = lo;
            }
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, thr));
            }
        }
        best
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize, rng: &mut impl Rng) -> usize {
        let id = self.nodes.len();
        let totals = self.class_totals(idx);
        self.nodes.push(Self::leaf(totals));

        let pure = totals.iter().filter(|&&w| w > 0.0).count() <= 1;
        let depth_capped = self.params.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_capped || idx.len() < 2 * self.params.min_leaf {
            return id;
        }

        let mut order: [usize; N_FEATURES] = std::array::from_fn(|f| f);
        order.shuffle(rng);
        let (tried, rest) = order.split_at(self.params.mtry);

        let mut best: Option<(f64, usize, f64)> = None;
        for group in [tried, rest] {
            let mut group = group.to_vec();
            group.sort_unstable();
            for f in group {
                if let Some((score, thr)) = self.best_on_feature(idx, f) {
                    if best.is_none_or(|(b, _, _)| score > b) {
                        best = Some((score, f, thr));
                    }
                }
            }
            // Only look past the mtry drawn features when none of them can split.
            if best.is_some() {
                break;
            }
        }
        let Some((_, feature, threshold)) = best else {
            return id;
        };

        let s = self.samples;
        idx.sort_by(|&a, &b| s[a].x[feature].total_cmp(&s[b].x[feature]));
        let n_left = idx.partition_point(|&i| s[i].x[feature] <= threshold);
        let (l, r) = idx.split_at_mut(n_left);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

fn constant_tree(class: usize) -> Tree {
    let mut proba = [0.0; N_CLASSES];
    proba[class] = 1.0;
    Tree {
        nodes: vec![Node::Leaf { proba }],
    }
}

fn training_samples(features: &[EyeFeatures], weighting: ClassWeight) -> Result<Vec<Sample>> {
    if features.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    let mut counts = [0usize; N_CLASSES];
    for f in features {
        if !f.vector().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteFeature);
        }
        let c = f
            .true_class
            .ok_or_else(|| Error::Training(format!("eye {} has no true class", f.eye_id)))?;
        counts[c.index()] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count() as f64;
    let n = features.len() as f64;
    Ok(features
        .iter()
        .map(|f| {
            let class = f.true_class.expect("checked above").index();
            let weight = match weighting {
                ClassWeight::Uniform => 1.0,
                ClassWeight::Balanced => n / (present * counts[class] as f64),
            };
            Sample {
                x: f.vector(),
                class,
                weight,
            }
        })
        .collect())
}

/// Train a forest and report its out-of-bag accuracy.
///
/// The OOB estimate is `None` without bootstrap, or when no sample was ever
/// left out.
pub fn train_forest_oob(
    features: &[EyeFeatures],
    params: &ForestParams,
) -> Result<(ForestModel, Option<f64>)> {
    params.validate()?;
    let samples = training_samples(features, params.class_weight)?;
    let n = samples.len();

    let first = samples[0].class;
    if samples.iter().all(|s| s.class == first) {
        log::warn!(
            "training set holds only class {}; returning a constant model",
            Diagnosis::from_index(first).expect("valid class index")
        );
        let model = ForestModel {
            params: params.clone(),
            trees: vec![constant_tree(first); params.n_trees],
        };
        return Ok((model, None));
    }

    let grown: Vec<(Tree, Vec<bool>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::stream(params.seed, "tree", t as u64);
            let mut idx: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut in_bag = vec![false; n];
            for &i in &idx {
                in_bag[i] = true;
            }
            let mut g = Grower {
                samples: &samples,
                params,
                nodes: Vec::new(),
            };
            g.grow(&mut idx, 0, &mut rng);
            (Tree { nodes: g.nodes }, in_bag)
        })
        .collect();

    let oob = if params.bootstrap {
        let mut correct = 0usize;
        let mut scored = 0usize;
        for (i, s) in samples.iter().enumerate() {
            let mut acc = [0.0; N_CLASSES];
            let mut votes = 0;
            for (tree, in_bag) in &grown {
                if !in_bag[i] {
                    for (a, p) in acc.iter_mut().zip(tree.leaf_proba(&s.x)) {
                        *a += p;
                    }
                    votes += 1;
                }
            }
            if votes > 0 {
                scored += 1;
                if argmax(&acc) == s.class {
                    correct += 1;
                }
            }
        }
        (scored > 0).then(|| correct as f64 / scored as f64)
    } else {
        None
    };

    let model = ForestModel {
        params: params.clone(),
        trees: grown.into_iter().map(|(t, _)| t).collect(),
    };
    Ok((model, oob))
}

pub fn train_forest(features: &[EyeFeatures], params: &ForestParams) -> Result<ForestModel> {
    train_forest_oob(features, params).map(|(m, _)| m)
}

/// Index of the largest entry; the earliest wins ties.
fn argmax(p: &[f64; N_CLASSES]) -> usize {
    let mut best = 0;
    for c in 1..N_CLASSES {
        if p[c] > p[best] {
            best = c;
        }
    }
    best
}

impl ForestModel {
    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn classes(&self) -> [Diagnosis; N_CLASSES] {
        Diagnosis::ALL
    }

    /// Mean of the leaf class proportions reached in every tree, ordered
    /// `[odd, papilledema, healthy]`.
    pub fn predict_proba(&self, x: [f64; N_FEATURES]) -> Result<[f64; N_CLASSES]> {
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteFeature);
        }
        let mut acc = [0.0; N_CLASSES];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.leaf_proba(&x)) {
                *a += p;
            }
        }
        let t = self.trees.len() as f64;
        Ok(acc.map(|a| a / t))
    }

    /// Most probable class; ties go to the earlier of odd, papilledema, healthy.
    pub fn predict_class(&self, x: [f64; N_FEATURES]) -> Result<Diagnosis> {
        let p = self.predict_proba(x)?;
        Ok(Diagnosis::from_index(argmax(&p)).expect("valid class index"))
    }

    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut out = format!(
            "{MODEL_MAGIC} {MODEL_VERSION} trees={} mtry={} seed={} rng={} min_leaf={} max_depth={} bootstrap={} class_weight={}\n",
            self.trees.len(),
            p.mtry,
            p.seed,
            seed::RNG_ID,
            p.min_leaf,
            p.max_depth.map_or_else(|| "none".to_string(), |d| d.to_string()),
            p.bootstrap,
            p.class_weight.as_str(),
        );
        for (t, tree) in self.trees.iter().enumerate() {
            for (n, node) in tree.nodes.iter().enumerate() {
                match node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        let _ = writeln!(
                            out,
                            "t={t} n={n} f={feature} thr={threshold:?} l={left} r={right}"
                        );
                    }
                    Node::Leaf { proba } => {
                        let _ = writeln!(
                            out,
                            "t={t} n={n} leaf={:?};{:?};{:?}",
                            proba[0], proba[1], proba[2]
                        );
                    }
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<ForestModel> {
        parse_model(text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ForestModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_model(&text)
    }
}

pub fn save_model(model: &ForestModel, path: impl AsRef<Path>) -> Result<()> {
    model.save(path)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ForestModel> {
    ForestModel::load(path)
}

fn parse_model(text: &str) -> Result<ForestModel> {
    let err = |line: usize, msg: String| Error::ModelParse { line, msg };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty model file".into()))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some(MODEL_MAGIC) {
        return Err(err(1, format!("expected '{MODEL_MAGIC}' header")));
    }
    match tokens.next() {
        Some(MODEL_VERSION) => {}
        other => {
            return Err(err(
                1,
                format!("unsupported model version {}", other.unwrap_or("<missing>")),
            ))
        }
    }
    let mut kv = std::collections::BTreeMap::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| err(1, format!("bad header field {tok:?}")))?;
        kv.insert(k, v);
    }
    let req = |k: &str| {
        kv.get(k)
            .copied()
            .ok_or_else(|| err(1, format!("header missing {k}")))
    };
    let num = |k: &str| -> Result<u64> {
        req(k)?
            .parse()
            .map_err(|e| err(1, format!("header {k}: {e}")))
    };
    let n_trees = num("trees")? as usize;
    let rng = req("rng")?;
    if rng != seed::RNG_ID {
        return Err(err(1, format!("unknown rng {rng}")));
    }
    let defaults = ForestParams::default();
    let params = ForestParams {
        n_trees,
        mtry: num("mtry")? as usize,
        seed: num("seed")?,
        min_leaf: kv
            .get("min_leaf")
            .map(|v| v.parse().map_err(|e| err(1, format!("min_leaf: {e}"))))
            .transpose()?
            .unwrap_or(defaults.min_leaf),
        max_depth: match kv.get("max_depth") {
            None | Some(&"none") => None,
            Some(v) => Some(v.parse().map_err(|e| err(1, format!("max_depth: {e}")))?),
        },
        bootstrap: match kv.get("bootstrap") {
            None | Some(&"true") => true,
            Some(&"false") => false,
            Some(v) => return Err(err(1, format!("bootstrap: {v}"))),
        },
        class_weight: match kv.get("class_weight") {
            None | Some(&"none") => ClassWeight::Uniform,
            Some(&"balanced") => ClassWeight::Balanced,
            Some(v) => return Err(err(1, format!("class_weight: {v}"))),
        },
    };
    params.validate().map_err(|e| err(1, e.to_string()))?;

    let mut trees: Vec<Vec<(usize, Node)>> = vec![Vec::new(); n_trees];
    let mut last_line = 1;
    for (lineno, line) in lines {
        last_line = lineno;
        if line.is_empty() {
            continue;
        }
        let mut fields = std::collections::BTreeMap::new();
        for tok in line.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| err(lineno, format!("bad field {tok:?}")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| err(lineno, format!("missing {k}")))
        };
        let idx = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|e| err(lineno, format!("{k}: {e}")))
        };
        let real = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|e| err(lineno, format!("{s:?}: {e}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(lineno, format!("non-finite value {s}")))
            }
        };

        let t = idx("t")?;
        let n = idx("n")?;
        let nodes = trees
            .get_mut(t)
            .ok_or_else(|| err(lineno, format!("tree {t} out of range (trees={n_trees})")))?;
        if n != nodes.len() {
            return Err(err(
                lineno,
                format!("tree {t}: expected node {}, found {n}", nodes.len()),
            ));
        }
        let node = if let Some(leaf) = fields.get("leaf") {
            let parts: Vec<f64> = leaf.split(';').map(real).collect::<Result<_>>()?;
            let [p0, p1, p2] = parts[..] else {
                return Err(err(lineno, "leaf needs 3 probabilities".into()));
            };
            let proba = [p0, p1, p2];
            if proba.iter().any(|&p| p < 0.0) || (proba.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(err(lineno, "leaf probabilities must sum to 1".into()));
            }
            Node::Leaf { proba }
        } else {
            let feature = idx("f")?;
            if feature >= N_FEATURES {
                return Err(err(lineno, format!("feature {feature} out of range")));
            }
            let (left, right) = (idx("l")?, idx("r")?);
            if left <= n || right <= n || left == right {
                return Err(err(lineno, "children must follow their parent".into()));
            }
            Node::Split {
                feature,
                threshold: real(get("thr")?)?,
                left,
                right,
            }
        };
        nodes.push((lineno, node));
    }

    let mut out = Vec::with_capacity(n_trees);
    for (t, nodes) in trees.into_iter().enumerate() {
        if nodes.is_empty() {
            return Err(err(
                last_line,
                format!("tree {t} has no nodes (truncated file?)"),
            ));
        }
        let count = nodes.len();
        let mut referenced = vec![0usize; count];
        for (lineno, node) in &nodes {
            if let Node::Split { left, right, .. } = node {
                for c in [*left, *right] {
                    if c >= count {
                        return Err(err(*lineno, format!("tree {t}: child {c} does not exist")));
                    }
                    referenced[c] += 1;
                }
            }
        }
        if referenced[0] != 0 || referenced[1..].iter().any(|&r| r != 1) {
            return Err(err(
                last_line,
                format!("tree {t}: node table is not a tree"),
            ));
        }
        out.push(Tree {
            nodes: nodes.into_iter().map(|(_, n)| n).collect(),
        });
    }
    Ok(ForestModel { params, trees: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(id: usize, d: f64, s: f64, c: Diagnosis) -> EyeFeatures {
        EyeFeatures::new(format!("e{id}"), format!("s{id}"), d, s, Some(c)).unwrap()
    }

    fn single_tree() -> ForestParams {
        ForestParams {
            n_trees: 1,
            bootstrap: false,
            ..Default::default()
        }
    }

    #[test]
    fn forced_split_at_midpoint() {
        let data = vec![
            eye(0, 0.0, 1.0, Diagnosis::Odd),
            eye(1, 1.0, 1.0, Diagnosis::Papilledema),
        ];
        let m = train_forest(&data, &single_tree()).unwrap();
        match &m.trees()[0].nodes()[0] {
            Node::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 0.5);
            }
            n => panic!("expected split, got {n:?}"),
        }
        for f in &data {
            assert_eq!(m.predict_class(f.vector()).unwrap(), f.true_class.unwrap());
        }
    }

    #[test]
    fn single_class_gives_constant_model() {
        let data: Vec<_> = (0..5)
            .map(|i| eye(i, i as f64, 1.0, Diagnosis::Healthy))
            .collect();
        let m = train_forest(&data, &ForestParams::default()).unwrap();
        assert_eq!(m.trees().len(), 100);
        for x in [[0.0, 0.0], [10.0, -3.0]] {
            assert_eq!(m.predict_proba(x).unwrap(), [0.0, 0.0, 1.0]);
            assert_eq!(m.predict_class(x).unwrap(), Diagnosis::Healthy);
        }
    }

    #[test]
    fn training_errors() {
        assert!(train_forest(&[], &ForestParams::default()).is_err());
        let unlabeled = vec![EyeFeatures::new("e", "s", 0.0, 1.0, None).unwrap()];
        assert!(train_forest(&unlabeled, &ForestParams::default()).is_err());
        let bad = ForestParams {
            mtry: 3,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ForestParams {
            n_trees: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn non_finite_query_rejected() {
        let data = vec![
            eye(0, 0.0, 1.0, Diagnosis::Odd),
            eye(1, 1.0, 1.0, Diagnosis::Healthy),
        ];
        let m = train_forest(&data, &single_tree()).unwrap();
        assert!(matches!(
            m.predict_proba([f64::NAN, 0.0]),
            Err(Error::NonFiniteFeature)
        ));
    }

    #[test]
    fn equal_probabilities_resolve_to_odd_first() {
        let text = "rfmodel v1 trees=1 mtry=1 seed=0 rng=chacha8-sha256\n\
                    t=0 n=0 leaf=0.5;0.5;0\n";
        let m = ForestModel::from_text(text).unwrap();
        assert_eq!(m.predict_class([0.0, 0.0]).unwrap(), Diagnosis::Odd);
        let text = "rfmodel v1 trees=1 mtry=1 seed=0 rng=chacha8-sha256\n\
                    t=0 n=0 leaf=0;0.5;0.5\n";
        let m = ForestModel::from_text(text).unwrap();
        assert_eq!(m.predict_class([0.0, 0.0]).unwrap(), Diagnosis::Papilledema);
    }

    #[test]
    fn falls_back_to_other_feature_when_drawn_one_is_constant() {
        // feature 0 constant; only feature 1 separates the classes
        let data: Vec<_> = (0..6)
            .map(|i| {
                let c = if i < 3 {
                    Diagnosis::Healthy
                } else {
                    Diagnosis::Papilledema
                };
                eye(i, 0.0, i as f64, c)
            })
            .collect();
        for seed in 0..8 {
            let m = train_forest(
                &data,
                &ForestParams {
                    seed,
                    ..single_tree()
                },
            )
            .unwrap();
            for f in &data {
                assert_eq!(m.predict_class(f.vector()).unwrap(), f.true_class.unwrap());
            }
        }
    }

    #[test]
    fn depth_and_leaf_limits() {
        let data: Vec<_> = (0..20)
            .map(|i| {
                let c = Diagnosis::ALL[i % 3];
                eye(i, (i * 7 % 11) as f64, (i * 5 % 13) as f64, c)
            })
            .collect();
        let capped = train_forest(
            &data,
            &ForestParams {
                max_depth: Some(2),
                ..single_tree()
            },
        )
        .unwrap();
        assert!(capped.trees()[0].depth() <= 2);

        let leafy = train_forest(
            &data,
            &ForestParams {
                min_leaf: 5,
                ..single_tree()
            },
        )
        .unwrap();
        // every leaf keeps at least 5 samples: at most 4 leaves
        let leaves = leafy.trees()[0]
            .nodes()
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count();
        assert!(leaves <= 4, "{leaves}");
    }

    #[test]
    fn balanced_weights_shift_leaf_proportions() {
        // one feature value shared by 3 healthy and 1 odd eye
        let data = vec![
            eye(0, 0.0, 0.0, Diagnosis::Healthy),
            eye(1, 0.0, 0.0, Diagnosis::Healthy),
            eye(2, 0.0, 0.0, Diagnosis::Healthy),
            eye(3, 0.0, 0.0, Diagnosis::Odd),
        ];
        let plain = train_forest(&data, &single_tree()).unwrap();
        assert_eq!(plain.predict_proba([0.0, 0.0]).unwrap(), [0.25, 0.0, 0.75]);
        let balanced = train_forest(
            &data,
            &ForestParams {
                class_weight: ClassWeight::Balanced,
                ..single_tree()
            },
        )
        .unwrap();
        let p = balanced.predict_proba([0.0, 0.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hand_written_stump() {
        let text = "rfmodel v1 trees=2 mtry=1 seed=7 rng=chacha8-sha256\n\
                    t=0 n=0 f=0 thr=0.1 l=1 r=2\n\
                    t=0 n=1 f=1 thr=2.5 l=3 r=4\n\
                    t=0 n=2 leaf=1;0;0\n\
                    t=0 n=3 leaf=0;0;1\n\
                    t=0 n=4 leaf=0;1;0\n\
                    t=1 n=0 leaf=0.2;0.3;0.5\n";
        let m = ForestModel::from_text(text).unwrap();
        // (0.66, 1.98): tree 0 -> odd leaf
        let p = m.predict_proba([0.66, 1.98]).unwrap();
        assert_eq!(p, [0.6, 0.15, 0.25]);
        // (0.0, 3.43): tree 0 -> papilledema leaf
        let p = m.predict_proba([0.0, 3.43]).unwrap();
        assert_eq!(p, [0.1, 0.65, 0.25]);
        // x == thr goes left
        let p = m.predict_proba([0.1, 2.5]).unwrap();
        assert_eq!(p, [0.1, 0.15, 0.75]);
        assert_eq!(m.to_text().lines().count(), 7);
    }

    #[test]
    fn malformed_files_rejected() {
        let good = "rfmodel v1 trees=1 mtry=1 seed=7 rng=chacha8-sha256\n\
                    t=0 n=0 f=0 thr=0.1 l=1 r=2\n\
                    t=0 n=1 leaf=1;0;0\n\
                    t=0 n=2 leaf=0;0;1\n";
        assert!(ForestModel::from_text(good).is_ok());

        let cases = [
            ("rfmodel v2 trees=1 mtry=1 seed=7 rng=chacha8-sha256\n", 1),
            ("forest v1\n", 1),
            ("rfmodel v1 trees=1 mtry=1 seed=7 rng=pcg\nt=0 n=0 leaf=1;0;0\n", 1),
            // truncated: child 2 missing
            ("rfmodel v1 trees=1 mtry=1 seed=7 rng=chacha8-sha256\nt=0 n=0 f=0 thr=0.1 l=1 r=2\nt=0 n=1 leaf=1;0;0\n", 2),
            // cycle back to the root
            ("rfmodel v1 trees=1 mtry=1 seed=7 rng=chacha8-sha256\nt=0 n=0 f=0 thr=0.1 l=0 r=1\n", 2),
            ("rfmodel v1 trees=1 mtry=1 seed=7 rng=chacha8-sha256\nt=0 n=0 leaf=0.5;0.6;0\n", 2),
            ("rfmodel v1 trees=1 mtry=1 seed=7 rng=chacha8-sha256\nt=0 n=1 leaf=1;0;0\n", 2),
            ("rfmodel v1 trees=2 mtry=1 seed=7 rng=chacha8-sha256\nt=0 n=0 leaf=1;0;0\n", 2),
            ("rfmodel v1 trees=1 mtry=1 seed=7 rng=chacha8-sha256\nt=0 n=0 f=0 thr=abc l=1 r=2\n", 2),
        ];
        for (text, line) in cases {
            match ForestModel::from_text(text) {
                Err(Error::ModelParse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
