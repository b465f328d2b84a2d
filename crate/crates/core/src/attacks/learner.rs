//! Depth-limited CART trees used by ML attribute inference and the
//! real-vs-synthetic utility classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::EmbeddedMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerSpec {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        LearnerSpec {
            max_depth: 6,
            min_samples_leaf: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// Fitted tree. Classification leaves hold a class index (as `f64`),
/// regression leaves the mean label.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    root: Node,
    classifier: bool,
}

enum Labels<'a> {
    Classes { y: &'a [u32], n_classes: usize },
    Values(&'a [f64]),
}

impl Labels<'_> {
    fn leaf_value(&self, idx: &[usize]) -> f64 {
        match self {
            Labels::Classes { y, n_classes } => {
                let mut counts = vec![0usize; *n_classes];
                for &i in idx {
                    counts[y[i] as usize] += 1;
                }
                // majority class, lowest index on ties
                let mut best = 0;
                for (c, &n) in counts.iter().enumerate() {
                    if n > counts[best] {
                        best = c;
                    }
                }
                best as f64
            }
            Labels::Values(y) => idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64,
        }
    }

    fn is_pure(&self, idx: &[usize]) -> bool {
        match self {
            Labels::Classes { y, .. } => idx.iter().all(|&i| y[i] == y[idx[0]]),
            Labels::Values(y) => idx.iter().all(|&i| y[i] == y[idx[0]]),
        }
    }
}

/// Running impurity of a growing left partition against its complement.
/// Lower is better; the value is the size-weighted impurity sum.
enum Sweep {
    Gini {
        left: Vec<f64>,
        total: Vec<f64>,
    },
    Sse {
        left_sum: f64,
        left_sq: f64,
        total_sum: f64,
        total_sq: f64,
    },
}

impl Sweep {
    fn new(labels: &Labels, idx: &[usize]) -> Self {
        match labels {
            Labels::Classes { y, n_classes } => {
                let mut total = vec![0.0; *n_classes];
                for &i in idx {
                    total[y[i] as usize] += 1.0;
                }
                Sweep::Gini {
                    left: vec![0.0; *n_classes],
                    total,
                }
            }
            Labels::Values(y) => Sweep::Sse {
                left_sum: 0.0,
                left_sq: 0.0,
                total_sum: idx.iter().map(|&i| y[i]).sum(),
                total_sq: idx.iter().map(|&i| y[i] * y[i]).sum(),
            },
        }
    }

    fn push(&mut self, labels: &Labels, i: usize) {
        match (self, labels) {
            (Sweep::Gini { left, .. }, Labels::Classes { y, .. }) => left[y[i] as usize] += 1.0,
            (Sweep::Sse { left_sum, left_sq, .. }, Labels::Values(y)) => {
                *left_sum += y[i];
                *left_sq += y[i] * y[i];
            }
            _ => unreachable!("sweep and labels share a kind"),
        }
    }

    fn cost(&self, n_left: f64, n_total: f64) -> f64 {
        let n_right = n_total - n_left;
        match self {
            Sweep::Gini { left, total } => {
                let gini = |counts: &mut dyn Iterator<Item = f64>, n: f64| {
                    n - counts.map(|c| c * c).sum::<f64>() / n
                };
                gini(&mut left.iter().copied(), n_left)
                    + gini(&mut left.iter().zip(total).map(|(l, t)| t - l), n_right)
            }
            Sweep::Sse {
                left_sum,
                left_sq,
                total_sum,
                total_sq,
            } => {
                let right_sum = total_sum - left_sum;
                let right_sq = total_sq - left_sq;
                (left_sq - left_sum * left_sum / n_left) + (right_sq - right_sum * right_sum / n_right)
            }
        }
    }
}

impl Tree {
    pub fn fit_classifier(x: &EmbeddedMatrix, y: &[u32], spec: &LearnerSpec) -> Result<Tree> {
        check_shape(x, y.len())?;
        let n_classes = y.iter().copied().max().unwrap_or(0) as usize + 1;
        let labels = Labels::Classes { y, n_classes };
        Ok(Tree {
            root: grow(x, &labels, (0..y.len()).collect(), 0, spec),
            classifier: true,
        })
    }

    pub fn fit_regressor(x: &EmbeddedMatrix, y: &[f64], spec: &LearnerSpec) -> Result<Tree> {
        check_shape(x, y.len())?;
        let labels = Labels::Values(y);
        Ok(Tree {
            root: grow(x, &labels, (0..y.len()).collect(), 0, spec),
            classifier: false,
        })
    }

    pub fn is_classifier(&self) -> bool {
        self.classifier
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &EmbeddedMatrix) -> Vec<f64> {
        x.rows().map(|r| self.predict_row(r)).collect()
    }

    pub fn predict_class(&self, x: &EmbeddedMatrix) -> Vec<u32> {
        self.predict(x).into_iter().map(|v| v as u32).collect()
    }

    pub fn depth(&self) -> usize {
        fn d(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + d(left).max(d(right)),
            }
        }
        d(&self.root)
    }
}

fn check_shape(x: &EmbeddedMatrix, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("cannot fit a tree on zero rows"));
    }
    if x.n_rows() != n {
        return Err(Error::param(format!(
            "{} feature rows but {} labels",
            x.n_rows(),
            n
        )));
    }
    Ok(())
}

fn grow(x: &EmbeddedMatrix, labels: &Labels, idx: Vec<usize>, depth: usize, spec: &LearnerSpec) -> Node {
    let leaf = || Node::Leaf(labels.leaf_value(&idx));
    let min_leaf = spec.min_samples_leaf.max(1);
    if depth >= spec.max_depth || idx.len() < 2 * min_leaf || labels.is_pure(&idx) {
        return leaf();
    }
    let n = idx.len() as f64;
    let parent_cost = Sweep::new(labels, &idx).cost(n, n * 2.0).max(0.0);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = idx.clone();
    for f in 0..x.n_dims() {
        order.sort_by(|&a, &b| x.row(a)[f].total_cmp(&x.row(b)[f]).then(a.cmp(&b)));
        let mut sweep = Sweep::new(labels, &order);
        for pos in 0..order.len() - 1 {
            sweep.push(labels, order[pos]);
            let n_left = pos + 1;
            let (v, next) = (x.row(order[pos])[f], x.row(order[pos + 1])[f]);
            if v == next || n_left < min_leaf || order.len() - n_left < min_leaf {
                continue;
            }
            let cost = sweep.cost(n_left as f64, n);
            if best.is_none_or(|(c, _, _)| cost < c - 1e-12) {
                best = Some((cost, f, v + (next - v) / 2.0));
            }
        }
    }
    match best {
        Some((cost, feature, threshold)) if cost < parent_cost - 1e-12 => {
            let (l, r): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| x.row(i)[feature] <= threshold);
            Node::Split {
                feature,
                threshold,
                left: Box::new(grow(x, labels, l, depth + 1, spec)),
                right: Box::new(grow(x, labels, r, depth + 1, spec)),
            }
        }
        _ => leaf(),
    }
}
