//! Token losses and their gradients with respect to pre-softmax logits.

use ndarray::{Array2, ArrayView1, ArrayViewMut1};

use crate::error::{Error, Result};
use crate::model::PredictionBatch;
use crate::scalar::Scalar;

/// Per-token binary loss weights, one row per sentence.
pub type SampleWeights = Vec<Vec<bool>>;

pub fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("q must lie in (0, 1], got {q}")))
    }
}

fn check_shapes<T>(preds: &[Array2<T>], labels: &[Vec<usize>], weights: &[Vec<bool>]) -> Result<()> {
    if preds.len() != labels.len() || preds.len() != weights.len() {
        return Err(Error::validation("predictions, labels and weights differ in sentence count"));
    }
    for (i, ((p, y), w)) in preds.iter().zip(labels).zip(weights).enumerate() {
        if p.nrows() != y.len() || y.len() != w.len() {
            return Err(Error::Misaligned {
                index: i,
                reason: "token counts differ between predictions, labels and weights".into(),
            });
        }
        if let Some(&bad) = y.iter().find(|&&l| l >= p.ncols()) {
            return Err(Error::validation(format!("label {bad} out of range in sentence {i}")));
        }
    }
    Ok(())
}

/// Generalized cross entropy `sum_i w_i (1 - f_{i,y_i}^q) / q`.
pub fn gce_loss<T: Scalar>(
    preds: &PredictionBatch<T>,
    labels: &[Vec<usize>],
    weights: &SampleWeights,
    q: f64,
) -> Result<f64> {
    check_q(q)?;
    check_shapes(preds, labels, weights)?;
    let mut total = 0.0;
    for ((p, y), w) in preds.iter().zip(labels).zip(weights) {
        for (t, (&label, &keep)) in y.iter().zip(w).enumerate() {
            if keep {
                total += (1.0 - p[[t, label]].as_f64().powf(q)) / q;
            }
        }
    }
    Ok(total)
}

/// Writes `dL/dz` of one weighted GCE token into `out`:
/// `-w p_y^q (delta_{jy} - p_j)`.
pub fn gce_logit_grad<T: Scalar>(probs: ArrayView1<'_, T>, label: usize, weight: T, q: T, mut out: ArrayViewMut1<'_, T>) {
    let scale = -weight * probs[label].powf(q);
    for (j, (o, &p)) in out.iter_mut().zip(probs).enumerate() {
        let delta = if j == label { T::one() } else { T::zero() };
        *o = scale * (delta - p);
    }
}

/// `w_i = 1` iff the model gives the label at least probability `tau`.
pub fn compute_label_weights<T: Scalar>(preds: &PredictionBatch<T>, labels: &[Vec<usize>], tau: f64) -> SampleWeights {
    preds
        .iter()
        .zip(labels)
        .map(|(p, y)| {
            y.iter()
                .enumerate()
                .map(|(t, &label)| p[[t, label]].as_f64() >= tau)
                .collect()
        })
        .collect()
}

/// `KL(t || s) = sum_j t_j ln(t_j / s_j)`, with `0 ln 0 = 0`.
pub fn kl_divergence<T: Scalar>(teacher: ArrayView1<'_, T>, student: ArrayView1<'_, T>) -> f64 {
    teacher
        .iter()
        .zip(student)
        .map(|(&t, &s)| {
            let t = t.as_f64();
            if t > 0.0 {
                t * (t / s.as_f64().max(f64::MIN_POSITIVE)).ln()
            } else {
                0.0
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    fn one(p: &[f64]) -> PredictionBatch<f64> {
        vec![Array2::from_shape_vec((1, p.len()), p.to_vec()).unwrap()]
    }

    #[test]
    fn worked_values() {
        let l = gce_loss(&one(&[0.5, 0.5]), &[vec![0]], &vec![vec![true]], 1.0).unwrap();
        assert!((l - 0.5).abs() < 1e-12);
        let l = gce_loss(&one(&[0.81, 0.19]), &[vec![0]], &vec![vec![true]], 0.5).unwrap();
        assert!((l - 0.2).abs() < 1e-12);
        let l = gce_loss(&one(&[0.3, 0.7]), &[vec![1]], &vec![vec![false]], 0.7).unwrap();
        assert_eq!(l, 0.0);
        let l = gce_loss(&one(&[0.0, 1.0]), &[vec![0]], &vec![vec![true]], 0.5).unwrap();
        assert_eq!(l, 2.0);
    }

    #[test]
    fn q_range_enforced() {
        for q in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(gce_loss(&one(&[1.0]), &[vec![0]], &vec![vec![true]], q).is_err());
        }
    }

    #[test]
    fn weights_follow_threshold() {
        let p = vec![array![[0.9, 0.1], [0.5, 0.5], [0.3, 0.7]]];
        let y = vec![vec![0, 0, 1]];
        assert_eq!(compute_label_weights(&p, &y, 0.7), vec![vec![true, false, true]]);
        assert_eq!(compute_label_weights(&p, &y, 0.0), vec![vec![true; 3]]);
    }

    #[test]
    fn zero_weight_has_zero_gradient() {
        let p = array![0.2, 0.5, 0.3];
        let mut g = Array1::from_elem(3, 9.0);
        gce_logit_grad(p.view(), 1, 0.0, 0.7, g.view_mut());
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn kl_basics() {
        let p = array![0.2, 0.8];
        assert_eq!(kl_divergence(p.view(), p.view()), 0.0);
        assert!(kl_divergence(array![1.0, 0.0].view(), p.view()) > 0.0);
    }
}
