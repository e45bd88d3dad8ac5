//! Special functions used by the overlap formulas.

pub use statrs::function::erf::erf;
pub use statrs::function::factorial::ln_factorial;

/// Poisson weights `e^{-q} q^n / n!` for `n = 0..=n_max`.
pub fn poisson_weights(q: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut term = (-q).exp();
    out.push(term);
    for n in 1..=n_max {
        term *= q / n as f64;
        out.push(term);
    }
    out
}

/// Single Poisson weight evaluated in log space (safe for large `n`).
pub fn poisson_pmf(q: f64, n: u64) -> f64 {
    if q == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * q.ln() - q - ln_factorial(n)).exp()
}

/// Spherical Bessel function of the first kind `j_n(x)`.
pub fn spherical_bessel_j(n: usize, x: f64) -> f64 {
    let ax = x.abs();
    let sign = if x < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
    if ax < 1e-3 * (n as f64 + 1.0) {
        return sign * small_argument_series(n, ax);
    }
    let j0 = ax.sin() / ax;
    if n == 0 {
        return j0;
    }
    let val = if ax > n as f64 {
        let mut jm = j0;
        let mut j = ax.sin() / (ax * ax) - ax.cos() / ax;
        for l in 1..n {
            let next = (2 * l + 1) as f64 / ax * j - jm;
            jm = j;
            j = next;
        }
        j
    } else {
        // Miller's downward recurrence normalized by j_0.
        let start = n + 20 + ax as usize;
        let mut jp = 0.0;
        let mut j = 1e-300;
        let mut target = 0.0;
        for l in (1..=start).rev() {
            let prev = (2 * l + 1) as f64 / ax * j - jp;
            jp = j;
            j = prev;
            if l - 1 == n {
                target = j;
            }
            if j.abs() > 1e250 {
                j *= 1e-250;
                jp *= 1e-250;
                target *= 1e-250;
            }
        }
        target * j0 / j
    };
    sign * val
}

fn small_argument_series(n: usize, x: f64) -> f64 {
    let mut dfact = 1.0;
    for k in 0..=n {
        dfact *= (2 * k + 1) as f64;
    }
    let lead = x.powi(n as i32) / dfact;
    let x2 = x * x;
    let a = (2 * n + 3) as f64;
    let b = (2 * n + 5) as f64;
    lead * (1.0 - x2 / (2.0 * a) + x2 * x2 / (8.0 * a * b))
}

/// Legendre polynomial `P_n(t)` by three-term recurrence.
pub fn legendre(n: usize, t: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut pm = 1.0;
    let mut p = t;
    for l in 1..n {
        let next = ((2 * l + 1) as f64 * t * p - l as f64 * pm) / (l + 1) as f64;
        pm = p;
        p = next;
    }
    p
}

/// Normalized Hermite functions `φ_0(u)..φ_n(u)` (unit L² norm in `u`).
pub fn hermite_functions(n_max: usize, u: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let phi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * u * u).exp();
    out.push(phi0);
    if n_max == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * u * phi0);
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * u * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// `s·expm1(r) − expm1(s·r)`, accurate for small `r`.
pub(crate) fn tilted_gap(s: f64, r: f64) -> f64 {
    if r.abs() < 1e-2 {
        // Σ_k (s − s^k) r^k / k!
        let mut sum = 0.0;
        let mut rk = r;
        let mut sk = s;
        let mut fact = 1.0;
        for k in 2..=8 {
            rk *= r;
            sk *= s;
            fact *= k as f64;
            sum += (s - sk) * rk / fact;
        }
        sum
    } else {
        s * r.exp_m1() - (s * r).exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_weights_sum_to_one() {
        let w = poisson_weights(2.5, 60);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((poisson_pmf(2.5, 3) - w[3]).abs() < 1e-15);
    }

    #[test]
    fn spherical_bessel_closed_forms() {
        assert!((spherical_bessel_j(2, 1e-4) / (1e-8 / 15.0) - 1.0).abs() < 1e-8);
        for &x in &[0.3, 1.7, 5.0, 12.0, 40.0] {
            let (s, c) = (f64::sin(x), f64::cos(x));
            let j1 = s / (x * x) - c / x;
            let j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
            assert!((spherical_bessel_j(1, x) - j1).abs() < 1e-10, "j1({x})");
            assert!((spherical_bessel_j(2, x) - j2).abs() < 1e-10, "j2({x})");
            assert!((spherical_bessel_j(1, -x) + j1).abs() < 1e-10);
        }
    }

    #[test]
    fn spherical_bessel_sum_rule() {
        // Σ (2n+1) j_n(x)² = 1
        for &x in &[0.05, 1.0, 3.3, 8.0] {
            let s: f64 = (0..60).map(|n| (2 * n + 1) as f64 * spherical_bessel_j(n, x).powi(2)).sum();
            assert!((s - 1.0).abs() < 1e-12, "x={x} sum={s}");
        }
    }

    #[test]
    fn legendre_values() {
        assert!((legendre(2, 0.5) - (-0.125)).abs() < 1e-15);
        assert!((legendre(3, 0.3) - 0.5 * (5.0 * 0.027 - 0.9)).abs() < 1e-15);
    }

    #[test]
    fn tilted_gap_branches_agree() {
        for &s in &[0.1f64, 0.5, 0.9] {
            let r: f64 = 0.0099;
            let direct = s * r.exp_m1() - (s * r).exp_m1();
            assert!((tilted_gap(s, r) - direct).abs() < 1e-15);
        }
    }
}
