use super::ModelError;
use crate::tensor::Tensor2;

/// Mean negative log-softmax over the selected rows (all rows when `mask` is
/// `None`), with gradient `(softmax - onehot) / |mask|` on those rows.
pub fn cross_entropy(
    scores: &Tensor2,
    labels: &[usize],
    mask: Option<&[usize]>,
) -> Result<(f64, Tensor2), ModelError> {
    if labels.len() != scores.rows() {
        return Err(ModelError::Shape(format!(
            "{} labels for {} score rows",
            labels.len(),
            scores.rows()
        )));
    }
    let all: Vec<usize>;
    let rows = match mask {
        Some(m) => m,
        None => {
            all = (0..scores.rows()).collect();
            &all
        }
    };
    if rows.is_empty() {
        return Err(ModelError::EmptyMask);
    }
    let k = scores.cols();
    let inv = 1.0 / rows.len() as f64;
    let mut grad = Tensor2::zeros(scores.rows(), k);
    let mut loss = 0.0;
    for &r in rows {
        let y = labels[r];
        if y >= k {
            return Err(ModelError::LabelOutOfRange { label: y, classes: k });
        }
        let s = scores.row(r);
        let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = s.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - s[y];
        for (j, g) in grad.row_mut(r).iter_mut().enumerate() {
            let p = (s[j] - log_z).exp();
            *g += (p - if j == y { 1.0 } else { 0.0 }) * inv;
        }
    }
    Ok((loss * inv, grad))
}

/// Index of the largest score per row (first wins on ties).
pub fn argmax_rows(scores: &Tensor2) -> Vec<usize> {
    (0..scores.rows())
        .map(|r| {
            let row = scores.row(r);
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_scores_give_ln_k() {
        let s = Tensor2::zeros(1, 2);
        let (l, _) = cross_entropy(&s, &[1], None).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn confident_correct_score_has_vanishing_loss() {
        let s = Tensor2::from_vec(1, 3, vec![1e3, 0.0, -5.0]);
        let (l, g) = cross_entropy(&s, &[0], None).unwrap();
        assert!(l < 1e-12);
        assert!(g.is_finite());
    }

    #[test]
    fn gradient_rows_sum_to_zero() {
        let s = Tensor2::from_vec(3, 4, (0..12).map(|i| (i as f64 * 1.3).cos() * 3.0).collect());
        let (_, g) = cross_entropy(&s, &[0, 3, 2], Some(&[0, 2])).unwrap();
        for r in 0..3 {
            assert!(g.row(r).iter().sum::<f64>().abs() < 1e-15);
        }
        assert!(g.row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = Tensor2::from_vec(2, 3, vec![0.3, -1.0, 2.0, 0.1, 0.2, -0.4]);
        let labels = [2, 0];
        let (_, g) = cross_entropy(&s, &labels, None).unwrap();
        let h = 1e-6;
        for i in 0..6 {
            let mut p = s.clone();
            p.data_mut()[i] += h;
            let mut m = s.clone();
            m.data_mut()[i] -= h;
            let fd = (cross_entropy(&p, &labels, None).unwrap().0 - cross_entropy(&m, &labels, None).unwrap().0) / (2.0 * h);
            assert!((fd - g.data()[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn errors() {
        let s = Tensor2::zeros(2, 2);
        assert!(matches!(cross_entropy(&s, &[0, 1], Some(&[])), Err(ModelError::EmptyMask)));
        assert!(matches!(
            cross_entropy(&s, &[0, 2], None),
            Err(ModelError::LabelOutOfRange { label: 2, classes: 2 })
        ));
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        let s = Tensor2::from_vec(2, 2, vec![1.0, 1.0, 0.0, 2.0]);
        assert_eq!(argmax_rows(&s), vec![0, 1]);
    }
}
