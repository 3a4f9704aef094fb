//! Gauss quadrature for the zonal measure `(1-x²)^{(n-2)/2} dx` on `[-1, 1]`.
//!
//! Zonal functions on the round `Sⁿ` are functions of `x = cos θ`, and the
//! Riemannian measure reduces to `ω_{n-1} (1-x²)^{(n-2)/2} dx`. The orthogonal
//! polynomials for this weight are the Gegenbauer polynomials `C_k^λ` with
//! `λ = (n-1)/2`; they are the zonal spherical harmonics of degree `k`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use super::coeffs::gamma_half;

/// Orthonormal Gegenbauer family for the weight `(1-x²)^{λ-1/2}` with `λ = (n-1)/2`.
#[derive(Clone, Debug)]
pub struct GegenbauerFamily {
    pub lambda: f64,
    /// `∫ (1-x²)^{λ-1/2} dx`
    pub mu0: f64,
}

impl GegenbauerFamily {
    pub fn for_dimension(n: usize) -> Self {
        GegenbauerFamily {
            lambda: (n as f64 - 1.0) / 2.0,
            mu0: PI.sqrt() * gamma_half(n) / gamma_half(n + 1),
        }
    }

    /// Off-diagonal entry `b_k` of the Jacobi matrix, `k >= 1`.
    fn recurrence(&self, k: usize) -> f64 {
        let k = k as f64;
        let l = self.lambda;
        (k * (k + 2.0 * l - 1.0) / (4.0 * (k + l) * (k + l - 1.0))).sqrt()
    }

    /// Orthonormal polynomials `p_0 .. p_{count-1}` at `x`.
    pub fn eval(&self, count: usize, x: f64) -> Vec<f64> {
        let mut p = Vec::with_capacity(count);
        if count == 0 {
            return p;
        }
        p.push(1.0 / self.mu0.sqrt());
        if count == 1 {
            return p;
        }
        p.push(x * p[0] / self.recurrence(1));
        for k in 1..count - 1 {
            let next = (x * p[k] - self.recurrence(k) * p[k - 1]) / self.recurrence(k + 1);
            p.push(next);
        }
        p
    }

    /// Values, first and second derivatives of `p_0 .. p_{count-1}` at `x`.
    pub fn eval_with_derivatives(&self, count: usize, x: f64) -> [Vec<f64>; 3] {
        let mut p = vec![0.0; count];
        let mut dp = vec![0.0; count];
        let mut ddp = vec![0.0; count];
        if count == 0 {
            return [p, dp, ddp];
        }
        p[0] = 1.0 / self.mu0.sqrt();
        for k in 0..count - 1 {
            let b_next = self.recurrence(k + 1);
            let (pm, dpm, ddpm) = if k == 0 {
                (0.0, 0.0, 0.0)
            } else {
                let b = self.recurrence(k);
                (b * p[k - 1], b * dp[k - 1], b * ddp[k - 1])
            };
            p[k + 1] = (x * p[k] - pm) / b_next;
            dp[k + 1] = (p[k] + x * dp[k] - dpm) / b_next;
            ddp[k + 1] = (2.0 * dp[k] + x * ddp[k] - ddpm) / b_next;
        }
        [p, dp, ddp]
    }

    /// `p_count(x)` and its derivative, used for Newton refinement of the nodes.
    fn top_with_derivative(&self, count: usize, x: f64) -> (f64, f64) {
        let mut p_prev = 0.0;
        let mut dp_prev = 0.0;
        let mut p = 1.0 / self.mu0.sqrt();
        let mut dp = 0.0;
        for k in 0..count {
            let b_next = self.recurrence(k + 1);
            let b = if k == 0 { 0.0 } else { self.recurrence(k) };
            let p_next = (x * p - b * p_prev) / b_next;
            let dp_next = (p + x * dp - b * dp_prev) / b_next;
            p_prev = p;
            dp_prev = dp;
            p = p_next;
            dp = dp_next;
        }
        (p, dp)
    }
}

/// Nodes (descending in `x`, so ascending in `θ`) and weights of the
/// `count`-point Gauss rule for the family's weight. Exact for polynomials
/// of degree `<= 2*count - 1`.
pub fn gauss_nodes(family: &GegenbauerFamily, count: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(count >= 1);
    // Golub–Welsch for starting values, then Newton on the orthonormal recurrence.
    let jacobi = DMatrix::from_fn(count, count, |i, j| {
        if i + 1 == j {
            family.recurrence(j)
        } else if j + 1 == i {
            family.recurrence(i)
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    nodes.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));

    for x in nodes.iter_mut() {
        for _ in 0..4 {
            let (p, dp) = family.top_with_derivative(count, *x);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            *x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
    }

    let weights = nodes
        .iter()
        .map(|&x| 1.0 / family.eval(count, x).iter().map(|p| p * p).sum::<f64>())
        .collect();
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `∫ x^{2j} (1-x²)^{λ-1/2} dx = Γ(j+1/2) Γ(λ+1/2) / Γ(j+λ+1)` with `λ = (n-1)/2`.
    fn even_moment(n: usize, j: usize) -> f64 {
        gamma_half(2 * j + 1) * gamma_half(n) / gamma_half(2 * j + n + 1)
    }

    #[test]
    fn weights_sum_to_mu0() {
        for n in [5, 6, 9] {
            let fam = GegenbauerFamily::for_dimension(n);
            let (_, w) = gauss_nodes(&fam, 40);
            let s: f64 = w.iter().sum();
            assert!((s - fam.mu0).abs() < 1e-13 * fam.mu0, "n={n}");
        }
    }

    #[test]
    fn exact_for_design_degree() {
        let n = 5;
        let fam = GegenbauerFamily::for_dimension(n);
        let k = 16;
        let (x, w) = gauss_nodes(&fam, k);
        for j in 0..k {
            let q: f64 = x
                .iter()
                .zip(&w)
                .map(|(x, w)| w * x.powi(2 * j as i32))
                .sum();
            let exact = even_moment(n, j);
            assert!(
                (q - exact).abs() < 1e-13 * exact.max(1e-3),
                "j={j}: {q} vs {exact}"
            );
            let odd: f64 = x
                .iter()
                .zip(&w)
                .map(|(x, w)| w * x.powi(2 * j as i32 + 1))
                .sum();
            assert!(odd.abs() < 1e-14);
        }
    }

    #[test]
    fn orthonormal_on_nodes() {
        let fam = GegenbauerFamily::for_dimension(5);
        let k = 32;
        let (x, w) = gauss_nodes(&fam, k);
        let p: Vec<Vec<f64>> = x.iter().map(|&x| fam.eval(k, x)).collect();
        for a in 0..k {
            for b in 0..k {
                let g: f64 = (0..k).map(|i| w[i] * p[i][a] * p[i][b]).sum();
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((g - e).abs() < 1e-12, "({a},{b}) = {g}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let fam = GegenbauerFamily::for_dimension(6);
        let h = 1e-5;
        let x = 0.37;
        let [p, dp, ddp] = fam.eval_with_derivatives(8, x);
        let pp = fam.eval(8, x + h);
        let pm = fam.eval(8, x - h);
        for k in 0..8 {
            assert!((p[k] - fam.eval(8, x)[k]).abs() < 1e-14);
            let fd1 = (pp[k] - pm[k]) / (2.0 * h);
            let fd2 = (pp[k] - 2.0 * p[k] + pm[k]) / (h * h);
            assert!((dp[k] - fd1).abs() < 1e-6 * (1.0 + dp[k].abs()));
            assert!((ddp[k] - fd2).abs() < 1e-3 * (1.0 + ddp[k].abs()));
        }
    }

    #[test]
    fn large_rule_is_sane() {
        let fam = GegenbauerFamily::for_dimension(5);
        let (x, w) = gauss_nodes(&fam, 256);
        assert!(x.windows(2).all(|p| p[0] > p[1]));
        assert!(x[0] < 1.0 && x[255] > -1.0);
        assert!(w.iter().all(|&w| w > 0.0));
        let s: f64 = w.iter().sum();
        assert!((s - fam.mu0).abs() < 1e-12 * fam.mu0);
    }
}
