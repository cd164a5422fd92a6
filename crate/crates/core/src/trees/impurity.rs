//! Class-distribution impurity measures.

use crate::error::{Error, Result};

/// Shannon entropy in bits of a class-count vector. `0 log 0` is taken as 0.
pub fn entropy(class_counts: &[usize]) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("entropy of an empty count vector".into()));
    }
    Ok(entropy_unchecked(class_counts, total))
}

pub(crate) fn entropy_unchecked(counts: &[usize], total: usize) -> f64 {
    let n = total as f64;
    counts
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| {
            let p = k as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Gini impurity `1 - sum p_k^2`.
pub fn gini(class_counts: &[usize]) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("gini of an empty count vector".into()));
    }
    Ok(gini_unchecked(class_counts, total))
}

pub(crate) fn gini_unchecked(counts: &[usize], total: usize) -> f64 {
    let n = total as f64;
    1.0 - counts.iter().map(|&k| (k as f64 / n).powi(2)).sum::<f64>()
}

/// Size-weighted mean entropy of the parts of a partition. Empty parts
/// contribute nothing.
pub fn conditional_entropy(partition: &[Vec<usize>]) -> Result<f64> {
    let total: usize = partition.iter().flatten().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("partition has no samples".into()));
    }
    let n = total as f64;
    Ok(partition
        .iter()
        .map(|part| {
            let size: usize = part.iter().sum();
            if size == 0 {
                0.0
            } else {
                size as f64 / n * entropy_unchecked(part, size)
            }
        })
        .sum())
}

/// Entropy reduction obtained by splitting `parent` into `partition`. The
/// parts must add up to the parent class by class.
pub fn information_gain(parent: &[usize], partition: &[Vec<usize>]) -> Result<f64> {
    let c = parent.len();
    if partition.iter().any(|p| p.len() != c) {
        return Err(Error::InvalidParameter("partition parts have a different class count".into()));
    }
    for k in 0..c {
        let sum: usize = partition.iter().map(|p| p[k]).sum();
        if sum != parent[k] {
            return Err(Error::InvalidParameter(format!(
                "class {k}: parts sum to {sum}, parent has {}",
                parent[k]
            )));
        }
    }
    Ok(entropy(parent)? - conditional_entropy(partition)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&[10, 0]).unwrap(), 0.0);
        assert_eq!(entropy(&[5, 5]).unwrap(), 1.0);
        // -(9/14) log2(9/14) - (5/14) log2(5/14)
        assert!((entropy(&[9, 5]).unwrap() - 0.940_285_958_670_631).abs() < 1e-12);
        assert!(entropy(&[0, 0]).is_err());
    }

    #[test]
    fn entropy_upper_bound() {
        let e = entropy(&[3, 3, 3, 3]).unwrap();
        assert!((e - 2.0).abs() < 1e-15);
    }

    #[test]
    fn conditional_entropy_cases() {
        assert_eq!(conditional_entropy(&[vec![9, 5]]).unwrap(), entropy(&[9, 5]).unwrap());
        assert_eq!(conditional_entropy(&[vec![5, 0], vec![0, 5]]).unwrap(), 0.0);
        let hand = 9.0 / 14.0 * 0.0 + 5.0 / 14.0 * 0.0;
        assert!((conditional_entropy(&[vec![9, 0], vec![0, 5]]).unwrap() - hand).abs() < 1e-12);
        let mixed = conditional_entropy(&[vec![6, 2], vec![3, 3]]).unwrap();
        let hand = 8.0 / 14.0 * entropy(&[6, 2]).unwrap() + 6.0 / 14.0 * 1.0;
        assert!((mixed - hand).abs() < 1e-12);
        assert!(conditional_entropy(&[vec![0, 0], vec![0, 0]]).is_err());
    }

    #[test]
    fn gain_cases() {
        assert_eq!(information_gain(&[5, 5], &[vec![5, 0], vec![0, 5]]).unwrap(), 1.0);
        let g = information_gain(&[4, 6], &[vec![2, 3], vec![2, 3]]).unwrap();
        assert!(g.abs() < 1e-15);
        assert!(information_gain(&[5, 5], &[vec![5, 0], vec![0, 4]]).is_err());
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[4, 0]).unwrap(), 0.0);
        assert_eq!(gini(&[2, 2]).unwrap(), 0.5);
    }
}
