use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Shuffles with `seed` and cuts at `floor(fraction · N)`: `(train, test)`.
pub fn split_train_test<T: Clone>(items: &[T], fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction must be in (0, 1), got {fraction}")));
    }
    if items.is_empty() {
        return Err(Error::Data("cannot split an empty corpus".into()));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (fraction * items.len() as f64).floor() as usize;
    let pick = |idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect();
    Ok((pick(&order[..cut]), pick(&order[cut..])))
}

/// Per-class record counts.
pub fn class_histogram(labels: impl IntoIterator<Item = usize>, classes: usize) -> Vec<usize> {
    let mut h = vec![0; classes];
    for l in labels {
        if l < classes {
            h[l] += 1;
        }
    }
    h
}

/// Downsamples every class without replacement to the minority count, then
/// shuffles the result. Every class must be present.
pub fn random_undersample<T: Clone>(
    items: &[T],
    label: impl Fn(&T) -> usize,
    classes: usize,
    seed: u64,
) -> Result<Vec<T>> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, item) in items.iter().enumerate() {
        let l = label(item);
        if l >= classes {
            return Err(Error::Data(format!("record {i} has label {l} outside {classes} classes")));
        }
        by_class[l].push(i);
    }
    if let Some(empty) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::Data(format!("class {empty} has no records to balance against")));
    }
    let target = by_class.iter().map(Vec::len).min().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::with_capacity(target * classes);
    for idx in &mut by_class {
        idx.shuffle(&mut rng);
        keep.extend_from_slice(&idx[..target]);
    }
    keep.shuffle(&mut rng);
    Ok(keep.into_iter().map(|i| items[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let items: Vec<u32> = (0..10).collect();
        let (tr, te) = split_train_test(&items, 0.8, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert_eq!(split_train_test(&items, 0.8, 7).unwrap(), (tr, te));
        assert!(split_train_test::<u32>(&[], 0.8, 0).is_err());
        assert!(split_train_test(&items, 1.0, 0).is_err());
    }

    #[test]
    fn undersample_counts() {
        let items: Vec<usize> = [vec![0; 100], vec![1; 40], vec![2; 60]].concat();
        let out = random_undersample(&items, |&l| l, 3, 1).unwrap();
        assert_eq!(class_histogram(out.iter().copied(), 3), [40, 40, 40]);
    }

    #[test]
    fn missing_class_is_an_error() {
        assert!(random_undersample(&[0usize, 0, 1], |&l| l, 3, 0).is_err());
    }
}
