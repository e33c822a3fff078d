use super::QuadError;

const MAX_NEWTON: usize = 100;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
///
/// Roots of `P_n` are found by Newton iteration started from the
/// Tricomi-style asymptotic guess; the two halves are mirrored so the rule is
/// exactly symmetric.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>), QuadError> {
    if n < 1 {
        return Err(QuadError::InvalidOrder(n));
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut converged = false;
        let mut dp = 0.0;
        for _ in 0..MAX_NEWTON {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                let (_, d) = legendre_and_derivative(n, z);
                dp = d;
                break;
            }
        }
        if !converged {
            return Err(QuadError::NoConvergence { order: n, index: i });
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        // z is the i-th largest root.
        x[n - 1 - i] = z;
        x[i] = -z;
        w[n - 1 - i] = wi;
        w[i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

/// `(P_n(z), P_n'(z))` via the three-term recurrence.
fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Nodes and weights of `gauss_legendre(n)` mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>), QuadError> {
    let (x, w) = gauss_legendre(n)?;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok((
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|wi| half * wi).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules_match_closed_forms() {
        let (x, w) = gauss_legendre(2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(3).unwrap();
        assert_eq!(x[1], 0.0);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((x[2] - 0.6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn nodes_ascending_and_interior() {
        for n in [1, 2, 7, 15, 101, 501] {
            let (x, w) = gauss_legendre(n).unwrap();
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            assert!(x[0] > -1.0 && x[n - 1] < 1.0);
            assert!(w.iter().all(|&v| v > 0.0));
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }
}
