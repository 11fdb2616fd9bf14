use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed::{self, Stream};

use super::Dataset;

/// Stratified train/test index split.
///
/// Each class with at least two samples sends `round(fraction·count)` of
/// them (at most `count − 1`) to the test side; singleton classes stay in
/// train. Both index lists come back sorted, so relative row order is kept.
pub fn split_indices(
    labels: &[usize],
    num_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    if labels.len() < 2 {
        return Err(Error::Degenerate("need at least 2 samples to split".into()));
    }
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class
            .get_mut(l)
            .ok_or_else(|| Error::Config(format!("label {l} out of range")))?
            .push(i);
    }
    let mut train = Vec::with_capacity(labels.len());
    let mut test = Vec::new();
    for (class, mut idx) in by_class.into_iter().enumerate() {
        if idx.len() < 2 {
            train.extend(idx);
            continue;
        }
        let mut rng = seed::rng(seed, Stream::Split, &[class as u64]);
        idx.shuffle(&mut rng);
        let n_test = ((idx.len() as f64 * test_fraction).round() as usize).min(idx.len() - 1);
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split_train_test(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(&data.labels, data.num_classes, test_fraction, seed)?;
    if test.is_empty() {
        return Err(Error::Degenerate(
            "split produced an empty test set; use more data or a larger fraction".into(),
        ));
    }
    Ok((data.select(&train)?, data.select(&test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn data(labels: Vec<usize>, c: usize) -> Dataset {
        let n = labels.len();
        let m = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        Dataset::new(m, labels, c).unwrap()
    }

    #[test]
    fn balanced_split_is_exact() {
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let (tr, te) = split_train_test(&data(labels, 2), 0.2, 3).unwrap();
        assert_eq!(tr.len(), 80);
        assert_eq!(te.len(), 20);
        assert_eq!(tr.class_counts(), vec![40, 40]);
        assert_eq!(te.class_counts(), vec![10, 10]);
    }

    #[test]
    fn singleton_class_goes_to_train() {
        let mut labels = vec![0; 10];
        labels.push(1);
        let d = data(labels, 2);
        let (tr, te) = split_train_test(&d, 0.3, 1).unwrap();
        assert_eq!(tr.class_counts()[1], 1);
        assert_eq!(te.class_counts()[1], 0);
    }

    #[test]
    fn deterministic_under_seed() {
        let labels: Vec<usize> = (0..57).map(|i| i % 3).collect();
        let d = data(labels, 3);
        let a = split_train_test(&d, 0.25, 9).unwrap();
        let b = split_train_test(&d, 0.25, 9).unwrap();
        assert_eq!(a, b);
        let c = split_train_test(&d, 0.25, 10).unwrap();
        assert_ne!(a.1.features, c.1.features);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(split_indices(&[0], 2, 0.2, 0).is_err());
        assert!(split_indices(&[0, 1], 2, 0.0, 0).is_err());
        assert!(split_indices(&[0, 1], 2, 1.0, 0).is_err());
    }

    #[test]
    fn partitions_rows() {
        let labels: Vec<usize> = (0..31).map(|i| (i * 7) % 4).collect();
        let (mut tr, te) = split_indices(&labels, 4, 0.3, 5).unwrap();
        tr.extend(te);
        tr.sort_unstable();
        assert_eq!(tr, (0..31).collect::<Vec<_>>());
    }
}
