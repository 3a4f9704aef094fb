//! Library values against independent closed forms and brute-force quadrature.

use std::f64::consts::PI;

use qflow::bubble::{green_mass, standard_bubble, BubbleParams, GreenOptions};
use qflow::paneitz::quotient;
use qflow::{CirclePreset, DiscreteManifold, ScalarField};

/// Composite Simpson rule on `[a, b]` with `m` (even) panels.
fn simpson(a: f64, b: f64, m: usize, g: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = g(a) + g(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(a + i as f64 * h);
    }
    s * h / 3.0
}

fn unit_sphere_volume(m: usize) -> f64 {
    // |S^m| by the recursion |S^m| = 2π/(m-1) |S^{m-2}|
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 1.0) * unit_sphere_volume(m - 2),
    }
}

/// Paneitz energy of the zonal polynomial `h(cos θ)` on the round `Sⁿ`:
/// `∫ (Δh)² + (a R + b Ric)|∇h|² + (n-4)/2 Q h²`.
fn sphere_energy_oracle(n: usize, p: &[f64]) -> f64 {
    let nf = n as f64;
    let a = ((nf - 2.0).powi(2) + 4.0) / (2.0 * (nf - 1.0) * (nf - 2.0));
    let b = -4.0 / (nf - 2.0);
    let r = nf * (nf - 1.0);
    let q = nf * (nf * nf - 4.0) / 8.0;
    let eval = |x: f64| {
        let (mut h, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for (k, c) in p.iter().enumerate() {
            let kf = k as f64;
            h += c * x.powi(k as i32);
            if k >= 1 {
                d1 += c * kf * x.powi(k as i32 - 1);
            }
            if k >= 2 {
                d2 += c * kf * (kf - 1.0) * x.powi(k as i32 - 2);
            }
        }
        (h, d1, d2)
    };
    let integrand = |t: f64| {
        let x = t.cos();
        let (h, d1, d2) = eval(x);
        let lap = (1.0 - x * x) * d2 - nf * x * d1;
        let grad2 = (1.0 - x * x) * d1 * d1;
        (lap * lap + (a * r + b * (nf - 1.0)) * grad2 + (nf - 4.0) / 2.0 * q * h * h)
            * t.sin().powi(n as i32 - 1)
    };
    unit_sphere_volume(n - 1) * simpson(0.0, PI, 20_000, integrand)
}

#[test]
fn sphere_quadratic_form_matches_direct_energy() {
    let poly = [1.0, 0.3, 0.2, -0.1, 0.05];
    for n in [5, 6, 7, 9] {
        let man = DiscreteManifold::sphere_axisym(n, 32).unwrap();
        let h = ScalarField::from_fn(&man.node_coordinates(), |t| {
            poly.iter()
                .enumerate()
                .map(|(k, c)| c * t.cos().powi(k as i32))
                .sum()
        });
        let e = man.quadratic_form(&h).unwrap();
        let oracle = sphere_energy_oracle(n, &poly);
        assert!(
            (e - oracle).abs() <= 1e-10 * oracle,
            "n = {n}: {e} vs {oracle}"
        );
    }
}

#[test]
fn sphere_volume_and_constant_quotient() {
    let man = DiscreteManifold::sphere_axisym(5, 32).unwrap();
    assert!((man.volume() - PI.powi(3)).abs() < 1e-12 * PI.powi(3));
    let q = quotient(&man, &ScalarField::constant(32, 1.0)).unwrap();
    let exact = 105.0 / 16.0 * PI.powf(12.0 / 5.0);
    assert!((q - exact).abs() < 1e-12 * exact);
    assert!((man.coeffs().c_n - 1.0 / (16.0 * PI * PI)).abs() < 1e-15);
    assert_eq!(man.coeffs().big_b, 105.0);
}

/// `E[h] = |S⁴| ∫₀ᴸ (h'')² + A (h')² + c h² ds` on S⁴×S¹ with `A = (13/24)·12`
/// and `c = (1/2) Q`, where `Q = (89/1152) R² - (2/9)|Ric|²` with `R = 12`, `|Ric|² = 36`.
#[test]
fn circle_quadratic_form_matches_direct_energy() {
    let q_curv: f64 = 89.0 / 1152.0 * 144.0 - 2.0 / 9.0 * 36.0;
    assert!((q_curv - 3.125).abs() < 1e-14);
    let big_a = 13.0 / 24.0 * 12.0;
    for length in [2.0 * PI, PI, 3.7] {
        let man =
            DiscreteManifold::einstein_circle_product(CirclePreset::S4xS1, length, 32).unwrap();
        let k = 2.0 * PI / length;
        let h = |s: f64| 1.0 + 0.2 * (k * s).cos() + 0.1 * (3.0 * k * s).sin();
        let d1 = |s: f64| -0.2 * k * (k * s).sin() + 0.3 * k * (3.0 * k * s).cos();
        let d2 = |s: f64| -0.2 * k * k * (k * s).cos() - 0.9 * k * k * (3.0 * k * s).sin();
        let oracle = unit_sphere_volume(4)
            * simpson(0.0, length, 20_000, |s| {
                d2(s).powi(2) + big_a * d1(s).powi(2) + 0.5 * q_curv * h(s).powi(2)
            });
        let e = man
            .quadratic_form(&ScalarField::from_fn(&man.node_coordinates(), h))
            .unwrap();
        assert!(
            (e - oracle).abs() <= 1e-10 * oracle,
            "L = {length}: {e} vs {oracle}"
        );
    }
}

#[test]
fn bubble_power_integral_matches_quadrature() {
    let man = DiscreteManifold::sphere_axisym(5, 256).unwrap();
    let (eps, delta) = (0.1, 0.4);
    let u = standard_bubble(&man, &BubbleParams::new(0.0, eps, delta).unwrap()).unwrap();
    let discrete = man.integrate(&u.map(|v| v.powi(10))).unwrap();
    let chi = |r: f64| {
        if r <= delta {
            1.0
        } else if r >= 2.0 * delta {
            0.0
        } else {
            let t = (r - delta) / delta;
            1.0 - (6.0 * t.powi(5) - 15.0 * t.powi(4) + 10.0 * t.powi(3))
        }
    };
    let oracle = unit_sphere_volume(4)
        * simpson(0.0, 2.0 * delta, 40_000, |r| {
            (chi(r) / (eps * eps + r * r).sqrt()).powi(10) * r.sin().powi(4)
        });
    assert!(
        (discrete - oracle).abs() < 1e-6 * oracle,
        "{discrete} vs {oracle}"
    );
}

/// On the round sphere `G(x₀, ·) = c_n (2 sin(θ/2))^{4-n}`.
#[test]
fn green_function_matches_closed_form() {
    let man = DiscreteManifold::sphere_axisym(5, 256).unwrap();
    let c5 = 1.0 / (16.0 * PI * PI);
    let g = green_mass(&man, 0.0, &GreenOptions::default()).unwrap();
    let theta = man.node_coordinates();
    for (t, v) in theta.iter().zip(&g.green) {
        if *t > 0.5 {
            let exact = c5 / (2.0 * (t / 2.0).sin());
            assert!((v - exact).abs() < 1e-3 * exact, "θ = {t}: {v} vs {exact}");
        }
    }
    assert!((g.singular_coeff - c5).abs() < 0.1 * c5);
    assert!(g.fit_residual < g.threshold);
    assert!(g.min_green > 0.0);

    // antipodal value of the closed form: 1/2 - 1/π
    let antipode = 0.5 - 1.0 / PI;
    assert!(
        (g.antipode_beta - antipode).abs() < 0.05 * antipode,
        "{}",
        g.antipode_beta
    );

    // constant term of the same least-squares fit applied to the closed form
    let (lo, hi) = g.window;
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in theta.iter().filter(|t| **t >= lo && **t <= hi) {
        let y = 1.0 / (2.0 * (t / 2.0).sin());
        let x = 1.0 / t;
        s11 += x * x;
        s12 += x;
        s22 += 1.0;
        b1 += x * y;
        b2 += y;
    }
    let beta = (s11 * b2 - s12 * b1) / (s11 * s22 - s12 * s12);
    assert!(
        (g.mass_beta - beta).abs() < 0.05 * beta.abs(),
        "{} vs {beta}",
        g.mass_beta
    );
}

#[test]
fn green_function_is_linear_and_fit_is_stable() {
    let man = DiscreteManifold::sphere_axisym(5, 256).unwrap();
    let delta = man.smoothed_point_mass(0.0).unwrap();
    let g1 = man.solve_p(&delta).unwrap();
    let g2 = man.solve_p(&delta.scaled(2.0)).unwrap();
    assert!(g2.axpy(-2.0, &g1).sup_norm() < 1e-12 * g2.sup_norm());

    let base = green_mass(&man, 0.0, &GreenOptions::default()).unwrap();
    for shift in [-0.1, 0.1] {
        let opts = GreenOptions {
            r_min: 0.25 * (1.0 + shift),
            r_max: 0.75 * (1.0 + shift),
            ..GreenOptions::default()
        };
        let g = green_mass(&man, 0.0, &opts).unwrap();
        assert!((g.singular_coeff - base.singular_coeff).abs() < 0.1 * base.singular_coeff);
    }
    let south = green_mass(&man, PI, &GreenOptions::default()).unwrap();
    assert!((south.singular_coeff - base.singular_coeff).abs() < 1e-8 * base.singular_coeff);
}
