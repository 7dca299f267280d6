//! Gauss-Legendre quadrature on `[0, 1]`.

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[0, 1]`,
/// nodes ascending. Exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "quadrature rule needs at least one node");
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Standard initial guess for the i-th root of P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1, 1] -> [0, 1]; x descends in i, so 0.5*(1 - x) ascends.
        rule.push((0.5 * (1.0 - x), 0.5 * w));
    }
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for &n in &[1usize, 2, 5, 16, 64] {
            let rule = gauss_legendre(n);
            let total: f64 = rule.iter().map(|&(_, w)| w).sum();
            assert!((total - 1.0).abs() <= 1e-13, "n={n}: sum {total}");
        }
    }

    #[test]
    fn exact_for_low_degree_monomials() {
        let rule = gauss_legendre(5);
        for k in 0..=9usize {
            let integral: f64 = rule.iter().map(|&(s, w)| w * s.powi(k as i32)).sum();
            let expected = 1.0 / (k as f64 + 1.0);
            assert!(
                (integral - expected).abs() <= 1e-13,
                "k={k}: {integral} vs {expected}"
            );
        }
    }

    #[test]
    fn nodes_ascending_and_symmetric() {
        let rule = gauss_legendre(8);
        for w in rule.windows(2) {
            assert!(w[0].0 < w[1].0);
        }
        for i in 0..rule.len() {
            let mirror = rule[rule.len() - 1 - i].0;
            assert!((rule[i].0 + mirror - 1.0).abs() <= 1e-13);
        }
    }
}
