//! Fourier-integral evaluation of `G(y; Z^3)`, used as an independent
//! check of the Bessel-integral route.

use std::f64::consts::PI;

use crate::numeric::{gauss_legendre_on, NeumaierSum};

/// Simple-walk `G(y; Z^3) = pi^{-3} int_{[0,pi]^3} prod_j cos(y_j t_j) / (1 - phi(t)) dt`.
///
/// The cube is split into the six simplices `t_a >= t_b >= t_c`, each
/// mapped by `t_a = r, t_b = r u, t_c = r u v` (Jacobian `r^2 u`), which
/// removes the pole at the origin; a tensor Gauss-Legendre rule then
/// converges geometrically.
pub fn fourier_green_3d(y: [i64; 3], nodes: usize) -> f64 {
    let (rs, wr) = gauss_legendre_on(nodes, 0.0, PI);
    let (us, wu) = gauss_legendre_on(nodes, 0.0, 1.0);
    const ORDERS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut s = NeumaierSum::new();
    for (&r, &w1) in rs.iter().zip(&wr) {
        for (&u, &w2) in us.iter().zip(&wu) {
            for (&v, &w3) in us.iter().zip(&wu) {
                let t = [r, r * u, r * u * v];
                // 1 - phi = (2/3) sum sin^2(t/2), free of cancellation
                let denom = (2.0 / 3.0) * t.iter().map(|a| (a / 2.0).sin().powi(2)).sum::<f64>();
                let jac = r * r * u / denom;
                let mut num = 0.0;
                for order in ORDERS {
                    num += (0..3).map(|j| (y[order[j]] as f64 * t[j]).cos()).product::<f64>();
                }
                s.add(w1 * w2 * w3 * jac * num);
            }
        }
    }
    s.value() / PI.powi(3)
}
