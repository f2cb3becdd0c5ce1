//! Variation-of-constants sweeps for scalar modes `y' + mu y = phi` on a
//! uniform grid.
//!
//! Every sweep accumulates `Y(t) = ∫ e^{kappa |t - s|} phi(s) ds` from a
//! starting node toward the other end of the grid, with `Re kappa <= 0` so
//! the recurrence `Y_new = e^{kappa h} Y_old + local` never amplifies.
//! The local integral uses cubic interpolation of `phi` on four nodes and
//! exact exponential moments.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// From node 0 toward node m-1.
    Forward,
    /// From node m-1 toward node 0.
    Backward,
}

/// `J_j(z) = ∫_0^1 e^{z x} x^j dx` for `j = 0..4`.
pub fn moments(z: Complex64) -> [Complex64; 4] {
    let mut out = [Complex64::new(0.0, 0.0); 4];
    if z.norm() < 0.5 {
        for (j, slot) in out.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0); // z^n / n!
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..40 {
                acc += term / (n + j + 1) as f64;
                term = term * z / (n + 1) as f64;
                if term.norm() < 1e-18 {
                    break;
                }
            }
            *slot = acc;
        }
    } else {
        let ez = z.exp();
        out[0] = (ez - 1.0) / z;
        for j in 1..4 {
            out[j] = (ez - out[j - 1] * j as f64) / z;
        }
    }
    out
}

/// Weights `w_k` with `∫_0^1 e^{z x} p(x) dx = Σ w_k p(x_k)` for the cubic
/// `p` interpolating at the four abscissae `xs`.
fn interpolation_weights(z: Complex64, xs: [f64; 4]) -> [Complex64; 4] {
    let j = moments(z);
    let mut w = [Complex64::new(0.0, 0.0); 4];
    for k in 0..4 {
        // Expand prod_{i != k} (x - x_i) into monomial coefficients.
        let mut coeffs = [1.0, 0.0, 0.0, 0.0];
        let mut degree = 0;
        let mut denom = 1.0;
        for i in 0..4 {
            if i == k {
                continue;
            }
            let mut next = [0.0; 4];
            for d in 0..=degree {
                next[d + 1] += coeffs[d];
                next[d] -= xs[i] * coeffs[d];
            }
            coeffs = next;
            degree += 1;
            denom *= xs[k] - xs[i];
        }
        w[k] = (0..4).map(|d| j[d] * coeffs[d]).sum::<Complex64>() / denom;
    }
    w
}

/// Accumulates `Y` at every node. `Y[start] = 0`, where `start` is node 0 for
/// a forward sweep and node m-1 for a backward one.
pub fn sweep(phi: &[Complex64], h: f64, kappa: Complex64, direction: Direction) -> Vec<Complex64> {
    let m = phi.len();
    assert!(m >= 4, "sweep needs at least 4 nodes");
    let z = kappa * h;
    let decay = z.exp();
    // Cached weights per stencil offset (first interval, interior, last).
    let mut cache: [Option<[Complex64; 4]>; 3] = [None, None, None];
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    let steps: Box<dyn Iterator<Item = (usize, usize)>> = match direction {
        Direction::Forward => Box::new((0..m - 1).map(|k| (k, k + 1))),
        Direction::Backward => Box::new((1..m).rev().map(|k| (k, k - 1))),
    };
    for (old, new) in steps {
        let lo = old.min(new);
        let j0 = lo.saturating_sub(1).min(m - 4);
        let slot = match lo as isize - j0 as isize {
            0 => 0,
            1 => 1,
            _ => 2,
        };
        let w = *cache[slot].get_or_insert_with(|| {
            let sign = if old > new { 1.0 } else { -1.0 };
            let xs = std::array::from_fn(|i| sign * ((j0 + i) as f64 - new as f64));
            interpolation_weights(z, xs)
        });
        let local: Complex64 = (0..4).map(|i| w[i] * phi[j0 + i]).sum::<Complex64>() * h;
        y[new] = decay * y[old] + local;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn moment_by_simpson(z: Complex64, j: i32) -> Complex64 {
        let n = 20000;
        let h = 1.0 / n as f64;
        (0..=n)
            .map(|k| {
                let x = k as f64 * h;
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                (z * x).exp() * x.powi(j) * (w * h / 3.0)
            })
            .sum()
    }

    #[test]
    fn moments_match_quadrature() {
        for z in [c(0.0, 0.0), c(0.3, -0.2), c(-0.49, 0.0), c(-0.51, 0.0), c(-3.0, 2.0), c(0.0, 7.0), c(-40.0, 0.0)] {
            let m = moments(z);
            for (j, mj) in m.iter().enumerate() {
                let exact = moment_by_simpson(z, j as i32);
                assert!((mj - exact).norm() < 1e-11, "z={z} j={j}: {mj} vs {exact}");
            }
        }
    }

    #[test]
    fn weights_integrate_cubics_exactly() {
        let z = c(-0.7, 0.4);
        let xs = [-1.0, 0.0, 1.0, 2.0];
        let w = interpolation_weights(z, xs);
        let m = moments(z);
        for (d, md) in m.iter().enumerate() {
            let approx: Complex64 = (0..4).map(|k| w[k] * xs[k].powi(d as i32)).sum();
            assert!((approx - md).norm() < 1e-13);
        }
    }

    #[test]
    fn forward_sweep_matches_closed_form() {
        // Y(t) = ∫_0^t e^{-(t-s)} cos(s) ds = (cos t + sin t - e^{-t}) / 2
        let m = 2001;
        let h = 10.0 / (m - 1) as f64;
        let phi: Vec<Complex64> = (0..m).map(|k| c((k as f64 * h).cos(), 0.0)).collect();
        let y = sweep(&phi, h, c(-1.0, 0.0), Direction::Forward);
        for k in (0..m).step_by(97) {
            let t = k as f64 * h;
            let exact = (t.cos() + t.sin() - (-t).exp()) / 2.0;
            assert!((y[k].re - exact).abs() < 1e-11, "t={t}");
        }
    }

    #[test]
    fn backward_sweep_with_oscillating_kernel() {
        // Y(t) = ∫_t^T e^{(i-2)(s-t)} ds = (e^{(i-2)(T-t)} - 1) / (i - 2)
        let m = 1001;
        let len = 5.0;
        let h = len / (m - 1) as f64;
        let kappa = c(-2.0, 1.0);
        let phi = vec![c(1.0, 0.0); m];
        let y = sweep(&phi, h, kappa, Direction::Backward);
        for k in (0..m).step_by(50) {
            let t = k as f64 * h;
            let exact = ((kappa * (len - t)).exp() - 1.0) / kappa;
            assert!((y[k] - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn stiff_decay_stays_bounded() {
        let m = 401;
        let h = 0.01;
        let phi = vec![c(1.0, 0.0); m];
        let y = sweep(&phi, h, c(-500.0, 0.0), Direction::Forward);
        let last = y[m - 1].re;
        assert!((last - 1.0 / 500.0).abs() < 1e-12, "{last}");
    }
}
