//! Gauss–Legendre quadrature on `[0, 1]`.

use crate::scalar::Real;

/// Nodes and weights of the `n`-point Gauss–Legendre rule mapped to `[0, 1]`.
///
/// Exact for polynomials of degree `≤ 2n − 1`. Nodes come from Newton's
/// method on `P_n` started at the Chebyshev-like estimate.
pub fn gauss_legendre_unit<T: Real>(n: usize) -> Vec<(T, T)> {
    assert!(n >= 1, "at least one node");
    let mut rule = Vec::with_capacity(n);
    let half = T::lit(0.5);
    for i in 0..n.div_ceil(2) {
        let mut z = T::lit((std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos());
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z = z - dz;
            if dz.abs() <= T::epsilon() * T::lit(4.0) {
                let (_, d) = legendre(n, z);
                dp = d;
                break;
            }
        }
        let w = T::lit(2.0) / ((T::one() - z * z) * dp * dp);
        // map [-1, 1] → [0, 1]
        rule.push((half * (T::one() - z), half * w));
        if 2 * i + 1 != n {
            rule.push((half * (T::one() + z), half * w));
        }
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));
    rule
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre<T: Real>(n: usize, z: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = z;
    if n == 0 {
        return (p0, T::zero());
    }
    for j in 2..=n {
        let jf = T::lit(j as f64);
        let p2 = ((jf + jf - T::one()) * z * p1 - (jf - T::one()) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::lit(n as f64);
    let dp = nf * (z * p1 - p0) / (z * z - T::one());
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one_and_nodes_in_range() {
        for n in [1, 2, 5, 32] {
            let rule = gauss_legendre_unit::<f64>(n);
            assert_eq!(rule.len(), n);
            let total: f64 = rule.iter().map(|r| r.1).sum();
            assert!((total - 1.0).abs() < 1e-14);
            assert!(rule.iter().all(|(t, _)| *t > 0.0 && *t < 1.0));
        }
    }

    #[test]
    fn exact_for_monomials_up_to_degree_63() {
        let rule = gauss_legendre_unit::<f64>(32);
        for deg in 0..=63 {
            let approx: f64 = rule.iter().map(|(t, w)| w * t.powi(deg)).sum();
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((approx - exact).abs() < 1e-14, "degree {deg}: {approx} vs {exact}");
        }
    }

    #[test]
    fn smooth_integrand() {
        let rule = gauss_legendre_unit::<f64>(32);
        let approx: f64 = rule.iter().map(|(t, w)| w * t.exp()).sum();
        assert!((approx - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }
}
