use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::truncation::{SupportSet, NUMERICAL_SUPPORT_TOL};

/// Largest component count for the exhaustive permutation search.
pub const MATCH_MAX_M: usize = 8;

/// Numerical support of each column of `q`.
pub fn column_supports(q: &Matrix) -> Vec<SupportSet> {
    q.columns()
        .map(|c| SupportSet::of_significant(c, NUMERICAL_SUPPORT_TOL))
        .collect()
}

/// Jaccard overlap of each truth support with the estimate assigned to it,
/// under the one-to-one assignment maximizing the total overlap. Ties go to
/// the lexicographically first permutation.
pub fn matched_jaccard(estimates: &[SupportSet], truth: &[SupportSet]) -> Result<Vec<f64>> {
    let m = truth.len();
    if estimates.len() != m {
        return Err(Error::mismatch("estimated supports", m, estimates.len()));
    }
    if m > MATCH_MAX_M {
        return Err(Error::InvalidArgument(format!(
            "support matching enumerates permutations; m = {m} exceeds {MATCH_MAX_M}"
        )));
    }
    let table: Vec<Vec<f64>> = truth
        .iter()
        .map(|t| estimates.iter().map(|e| e.jaccard(t)).collect())
        .collect();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = (f64::NEG_INFINITY, perm.clone());
    permute(&mut perm, 0, &table, &mut best);
    Ok(best.1.iter().enumerate().map(|(i, &j)| table[i][j]).collect())
}

fn permute(perm: &mut [usize], at: usize, table: &[Vec<f64>], best: &mut (f64, Vec<usize>)) {
    if at == perm.len() {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| table[i][j]).sum();
        if total > best.0 {
            *best = (total, perm.to_vec());
        }
        return;
    }
    for i in at..perm.len() {
        perm.swap(at, i);
        permute(perm, at + 1, table, best);
        perm.swap(at, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permuted_estimates_match_perfectly() {
        let truth = vec![
            SupportSet::range(0, 3),
            SupportSet::range(3, 6),
            SupportSet::range(6, 9),
        ];
        let est = vec![truth[2].clone(), truth[0].clone(), truth[1].clone()];
        assert_eq!(matched_jaccard(&est, &truth).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn assignment_is_one_to_one() {
        // Both estimates resemble the first truth set; only one may claim it.
        let truth = vec![SupportSet::range(0, 4), SupportSet::range(4, 8)];
        let est = vec![SupportSet::range(0, 4), SupportSet::range(0, 3)];
        assert_eq!(matched_jaccard(&est, &truth).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn roundoff_fill_is_not_support() {
        let mut q = Matrix::zeros(4, 1);
        q[(0, 0)] = 1.0;
        q[(3, 0)] = 1e-17;
        assert_eq!(column_supports(&q)[0].indices(), &[0]);
    }

    #[test]
    fn rejects_bad_sizes() {
        let one = vec![SupportSet::range(0, 1)];
        assert!(matched_jaccard(&one, &[]).is_err());
        let many = vec![SupportSet::range(0, 1); MATCH_MAX_M + 1];
        assert!(matched_jaccard(&many, &many).is_err());
    }
}
