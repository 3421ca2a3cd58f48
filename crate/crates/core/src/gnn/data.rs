use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::GnnError;
use crate::dense::DenseMatrix;
use crate::scalar::Scalar;
use crate::txgraph::TransactionGraph;

/// Feature columns fed to the classifier for the high-activity task. The
/// transaction-count columns define the label and are left out.
pub const PROXY_INPUT_COLUMNS: [usize; 4] = [0, 1, 4, 5];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Masks {
    pub train: Vec<bool>,
    pub test: Vec<bool>,
}

impl Masks {
    /// Uniform random split; `train_frac` of the nodes (rounded, at least one
    /// on each side when `n ≥ 2`) go to training.
    pub fn random_split(n: usize, train_frac: f64, seed: u64) -> Result<Self, GnnError> {
        if n < 2 {
            return Err(GnnError::InvalidMasks(format!("cannot split {n} node(s) into train and test")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = ((train_frac * n as f64).round() as usize).clamp(1, n - 1);
        let mut train = vec![false; n];
        let mut test = vec![false; n];
        for (rank, &i) in order.iter().enumerate() {
            if rank < n_train {
                train[i] = true;
            } else {
                test[i] = true;
            }
        }
        Ok(Self { train, test })
    }

    pub fn validate(&self, n: usize) -> Result<(), GnnError> {
        if self.train.len() != n || self.test.len() != n {
            return Err(GnnError::InvalidMasks(format!(
                "mask lengths {}/{} for {n} nodes",
                self.train.len(),
                self.test.len()
            )));
        }
        if self.train.iter().zip(&self.test).any(|(&a, &b)| a && b) {
            return Err(GnnError::InvalidMasks("train and test masks overlap".into()));
        }
        if !self.train.iter().any(|&m| m) || !self.test.iter().any(|&m| m) {
            return Err(GnnError::InvalidMasks("train and test masks must both be non-empty".into()));
        }
        Ok(())
    }
}

/// Label 1 for nodes whose activity is at least the activity of the
/// `ceil(n/4)`-th most active node, 0 otherwise.
pub fn high_activity_labels(tx_counts: &[f64]) -> Vec<usize> {
    if tx_counts.is_empty() {
        return Vec::new();
    }
    let mut sorted = tx_counts.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[tx_counts.len().div_ceil(4) - 1];
    tx_counts.iter().map(|&c| usize::from(c >= threshold)).collect()
}

/// Inputs and labels for the high-activity node classification task.
pub fn proxy_task<T: Scalar>(graph: &TransactionGraph<T>) -> (DenseMatrix<T>, Vec<usize>) {
    let counts: Vec<f64> = graph.tx_counts().into_iter().map(|c| c.to_f64_lossy()).collect();
    (graph.features.select_columns(&PROXY_INPUT_COLUMNS), high_activity_labels(&counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_disjoint_and_covering() {
        let m = Masks::random_split(10, 0.7, 3).unwrap();
        m.validate(10).unwrap();
        assert_eq!(m.train.iter().filter(|&&x| x).count(), 7);
        assert!(m.train.iter().zip(&m.test).all(|(&a, &b)| a ^ b));
        assert_eq!(m, Masks::random_split(10, 0.7, 3).unwrap());
    }

    #[test]
    fn overlap_rejected() {
        let m = Masks { train: vec![true, true], test: vec![false, true] };
        assert!(m.validate(2).is_err());
        assert!(Masks::random_split(1, 0.7, 0).is_err());
    }

    #[test]
    fn top_quartile_labels() {
        let labels = high_activity_labels(&[1.0, 9.0, 3.0, 4.0, 2.0, 8.0, 5.0, 6.0]);
        assert_eq!(labels, vec![0, 1, 0, 0, 0, 1, 0, 0]);
        let ties = high_activity_labels(&[2.0, 2.0, 2.0, 1.0]);
        assert_eq!(ties, vec![1, 1, 1, 0]);
    }
}
