//! Central finite differences, the independent oracle for [`super::backward`].

use super::params::{Gradients, Network};

/// Central-difference gradient of `f` at `x`.
pub fn finite_diff_grad(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + step;
            let up = f(&probe);
            probe[i] = orig - step;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Central-difference gradient of a loss over all network parameters.
pub fn finite_diff_network(
    loss: impl Fn(&Network<f64>) -> f64,
    net: &Network<f64>,
    step: f64,
) -> Gradients<f64> {
    let mut scratch = net.clone();
    let flat = finite_diff_grad(
        |x| {
            scratch.load_flat(x).expect("same layout");
            loss(&scratch)
        },
        &net.to_flat(),
        step,
    );
    let mut grads = net.zeros_like();
    grads.load_flat(&flat).expect("same layout");
    grads
}

/// Largest `|a − b| / max(|a|, |b|, floor)` over all parameters.
///
/// `floor` keeps components that are zero up to rounding from dominating.
pub fn max_relative_error(a: &Gradients<f64>, b: &Gradients<f64>, floor: f64) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let g = finite_diff_grad(|x| x[0] * x[0], &[3.0], 1e-5);
        assert!((g[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn linear_is_exact_to_rounding() {
        let g = finite_diff_grad(|x| 2.0 * x[0] - 0.5 * x[1] + 1.0, &[0.25, -4.0], 1e-3);
        assert!((g[0] - 2.0).abs() < 1e-12);
        assert!((g[1] + 0.5).abs() < 1e-12);
    }
}
