//! Exponentially scaled modified Bessel functions of integer order.

/// `e^{-x} I_k(x)` for `k = 0..=kmax`, by Miller's backward recurrence
/// normalized with `I_0 + 2 sum_{k>=1} I_k = e^x`.
pub fn scaled_bessel_i(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    assert!(x > 0.0 && x.is_finite(), "argument must be positive and finite");
    let start = kmax + (140.0 * x).sqrt() as usize + 30;
    let (mut above, mut here) = (0.0f64, 1e-280f64);
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let below = above + 2.0 * k as f64 / x * here;
        norm += 2.0 * here;
        if k <= kmax {
            out[k] = here;
        }
        above = here;
        here = below;
        if here > 1e250 {
            let s = 1e-250;
            here *= s;
            above *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    out[0] = here;
    norm += here;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Coefficients `b_m(k)` of `e^{-x} I_k(x) ~ (2 pi x)^{-1/2} sum_m b_m x^{-m}`.
pub fn asymptotic_coefficients(k: u64, terms: usize) -> Vec<f64> {
    let mu = 4.0 * (k as f64).powi(2);
    let mut b = Vec::with_capacity(terms);
    let mut c = 1.0;
    b.push(1.0);
    for m in 1..terms {
        let odd = (2 * m - 1) as f64;
        c *= -(mu - odd * odd) / (m as f64 * 8.0);
        b.push(c);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // e^{-1} I_0(1), e^{-1} I_1(1), e^{-10} I_0(10), e^{-10} I_5(10)
        let v = scaled_bessel_i(1.0, 3);
        assert!((v[0] - 0.465_759_607_593_640_6).abs() < 1e-15);
        assert!((v[1] - 0.207_910_415_349_708_4).abs() < 1e-15);
        let v = scaled_bessel_i(10.0, 5);
        assert!((v[0] - 0.127_833_337_163_428_6).abs() < 1e-15);
        assert!((v[5] - 0.035_284_293_614_933_96).abs() < 1e-14);
    }

    #[test]
    fn power_series_agreement_small_argument() {
        let x: f64 = 0.01;
        let v = scaled_bessel_i(x, 6);
        for (k, &got) in v.iter().enumerate() {
            // I_k(x) = sum_j (x/2)^{2j+k} / (j! (j+k)!)
            let mut term = (x / 2.0).powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>();
            let mut s = 0.0;
            for j in 0..20 {
                s += term;
                term *= (x / 2.0).powi(2) / ((j + 1) * (j + 1 + k)) as f64;
            }
            let want = (-x).exp() * s;
            assert!((got - want).abs() <= 1e-14 * want, "k={k} {got} {want}");
        }
    }

    #[test]
    fn asymptotic_agreement_large_argument() {
        for x in [2e3, 5e4, 1e6] {
            let v = scaled_bessel_i(x, 20);
            for k in [0u64, 3, 20] {
                let b = asymptotic_coefficients(k, 8);
                let s: f64 = b.iter().enumerate().map(|(m, c)| c / x.powi(m as i32)).sum();
                let want = s / (2.0 * std::f64::consts::PI * x).sqrt();
                assert!((v[k as usize] - want).abs() < 1e-12 * want, "x={x} k={k}");
            }
        }
    }

    #[test]
    fn normalization_holds() {
        for x in [0.3, 7.0, 150.0] {
            let v = scaled_bessel_i(x, 400);
            let s = v[0] + 2.0 * v[1..].iter().sum::<f64>();
            assert!((s - 1.0).abs() < 1e-13);
        }
    }
}
