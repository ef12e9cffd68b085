//! One-vs-one multiclass voting over binary machines.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SymmetricMatrix};

use super::svm::{svm_predict, svm_train_binary, SvmModel};

/// Binary machines for every class pair `(a, b)` with `a < b`; `a` is the
/// positive side.
#[derive(Clone, Debug)]
pub struct MulticlassModel {
    classes: Vec<i64>,
    machines: Vec<(Vec<usize>, SvmModel)>,
    n_train: usize,
}

impl MulticlassModel {
    pub fn train(gram: &SymmetricMatrix, labels: &[i64], c: f64) -> Result<MulticlassModel> {
        if labels.len() != gram.n() {
            return Err(Error::validation(format!(
                "{} labels for a {}x{} kernel",
                labels.len(),
                gram.n(),
                gram.n()
            )));
        }
        let mut classes = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::validation("at least two classes are required"));
        }
        let mut machines = Vec::new();
        for (ai, &a) in classes.iter().enumerate() {
            for &b in &classes[ai + 1..] {
                let idx: Vec<usize> = (0..labels.len())
                    .filter(|&t| labels[t] == a || labels[t] == b)
                    .collect();
                let y: Vec<i8> = idx.iter().map(|&t| if labels[t] == a { 1 } else { -1 }).collect();
                let model = svm_train_binary(&gram.select(&idx), &y, c)?.with_class_pair(a, b);
                machines.push((idx, model));
            }
        }
        Ok(MulticlassModel {
            classes,
            machines,
            n_train: labels.len(),
        })
    }

    pub fn classes(&self) -> &[i64] {
        &self.classes
    }

    pub fn machines(&self) -> impl Iterator<Item = &SvmModel> {
        self.machines.iter().map(|(_, m)| m)
    }

    /// Majority vote; ties go to the smallest class id.
    pub fn predict(&self, kernel_rows: &DenseMatrix) -> Result<Vec<i64>> {
        if kernel_rows.cols() != self.n_train {
            return Err(Error::validation(format!(
                "kernel rows have {} columns, model was trained on {} items",
                kernel_rows.cols(),
                self.n_train
            )));
        }
        let rows = kernel_rows.rows();
        let mut votes = vec![vec![0usize; self.classes.len()]; rows];
        for (idx, model) in &self.machines {
            let sub = DenseMatrix::from_fn(rows, idx.len(), |r, c| kernel_rows[(r, idx[c])]);
            let pos = self.class_index(model.class_pair.0);
            let neg = self.class_index(model.class_pair.1);
            for (r, p) in svm_predict(model, &sub)?.into_iter().enumerate() {
                votes[r][if p > 0 { pos } else { neg }] += 1;
            }
        }
        Ok(votes
            .into_iter()
            .map(|v| {
                let best = v.iter().copied().max().unwrap_or(0);
                self.classes[v.iter().position(|&x| x == best).unwrap_or(0)]
            })
            .collect())
    }

    fn class_index(&self, class: i64) -> usize {
        self.classes.binary_search(&class).expect("machine class is known")
    }
}

/// Trains on `gram` / `labels` and predicts the rows of `kernel_rows`.
pub fn multiclass_train_predict(
    gram: &SymmetricMatrix,
    labels: &[i64],
    c: f64,
    kernel_rows: &DenseMatrix,
) -> Result<Vec<i64>> {
    MulticlassModel::train(gram, labels, c)?.predict(kernel_rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rbf(points: &[f64], gamma: f64) -> SymmetricMatrix {
        SymmetricMatrix::from_upper_fn(points.len(), |i, j| {
            (-gamma * (points[i] - points[j]).powi(2)).exp()
        })
    }

    #[test]
    fn two_classes_match_binary_machine() {
        let pts = [0.0, 0.3, 1.0, 1.4, 0.7, 0.2];
        let labels = [3, 3, 7, 7, 7, 3];
        let gram = rbf(&pts, 2.0);
        let k = gram.to_dense();
        let multi = multiclass_train_predict(&gram, &labels, 1.0, &k).unwrap();
        let y: Vec<i8> = labels.iter().map(|&l| if l == 3 { 1 } else { -1 }).collect();
        let binary = svm_predict(&svm_train_binary(&gram, &y, 1.0).unwrap(), &k).unwrap();
        let mapped: Vec<i64> = binary.iter().map(|&p| if p > 0 { 3 } else { 7 }).collect();
        assert_eq!(multi, mapped);
    }

    #[test]
    fn separated_clusters_are_recovered() {
        let pts = [0.0, 0.1, 0.05, 10.0, 10.1, 10.05, 20.0, 20.1, 20.05];
        let labels = [0, 0, 0, 1, 1, 1, 2, 2, 2];
        let gram = rbf(&pts, 5.0);
        let model = MulticlassModel::train(&gram, &labels, 1.0).unwrap();
        assert_eq!(model.machines().count(), 3);
        assert_eq!(model.predict(&gram.to_dense()).unwrap(), labels.to_vec());
    }

    #[test]
    fn identical_items_follow_the_tie_break() {
        let n = 6;
        let gram = SymmetricMatrix::from_upper_fn(n, |_, _| 1.0);
        let labels = [2, 5, 9, 2, 5, 9];
        let preds = multiclass_train_predict(&gram, &labels, 1.0, &gram.to_dense()).unwrap();
        // Every pair machine is balanced with equal duplicates, so each vote
        // goes to the positive (smaller) class: 2 gets two votes.
        assert!(preds.iter().all(|&p| p == 2), "{preds:?}");
    }

    #[test]
    fn single_class_is_rejected() {
        let gram = SymmetricMatrix::identity(2);
        assert!(MulticlassModel::train(&gram, &[4, 4], 1.0).is_err());
    }
}
