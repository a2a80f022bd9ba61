//! Small numeric helpers shared by the models.

use alloc::vec::Vec;

pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + libm::log(xs.iter().map(|&x| libm::exp(x - m)).sum::<f64>())
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|&x| libm::exp(x - m)).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Softmax cross-entropy `-log softmax(logits)[label]`.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    log_sum_exp(logits) - logits[label]
}

/// Index of the largest value; ties go to the lowest index. NaN never wins.
pub fn argmax(xs: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in xs.iter().enumerate() {
        match best {
            None if !x.is_nan() => best = Some(i),
            Some(b) if x > xs[b] => best = Some(i),
            _ => {}
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_classes() {
        assert!((cross_entropy(&[0.3, 0.3, 0.3], 1) - libm::log(3.0)).abs() < 1e-12);
    }

    #[test]
    fn confident_logit_drives_loss_to_zero() {
        assert!(cross_entropy(&[50.0, 0.0, 0.0], 0) < 1e-20);
        assert!(cross_entropy(&[1e6, 0.0, 0.0], 0) >= 0.0);
    }

    #[test]
    fn log_sum_exp_matches_naive_in_safe_range() {
        let xs = [0.1, -1.2, 2.5, 0.0];
        let naive = libm::log(xs.iter().map(|&x| libm::exp(x)).sum::<f64>());
        assert!((log_sum_exp(&xs) - naive).abs() < 1e-12);
        // stays finite where the naive form overflows
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + libm::log(2.0))).abs() < 1e-9);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[2.0, 1.0, 1.0]), Some(0));
        assert_eq!(argmax(&[1.0, 1.0, 1.0]), Some(0));
        assert_eq!(argmax(&[0.0, 3.0, 3.0]), Some(1));
        assert_eq!(argmax(&[]), None);
        assert_eq!(argmax(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), Some(0));
    }

    #[test]
    fn softmax_normalizes() {
        let p = softmax(&[1.0, 2.0, -3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
    }
}
