//! Independent oracles shared by the integration suites: a Monte-Carlo ball
//! integrator for the competitor energy density and a two-sided shooting
//! solver for the radial vortex profile. These deliberately avoid the library
//! quadrature and relaxation code paths they are used to check.

use gl_saddle::boundary::BoundaryDatum;
use gl_saddle::geometry::dist_to_cross;
use gl_saddle::numerics::KahanSum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pointwise Ginzburg-Landau energy density of v_m at x:
/// ½|∇v_m|² + (1−|v_m|²)²/4 with
/// |∇v_m|² = m²·1_ramp + min(m·d_X, 1)²·|∇⊤g|²(x/|x|)/|x|².
pub fn v_m_energy_density(datum: &BoundaryDatum, m: f64, x: [f64; 3]) -> f64 {
    let d = dist_to_cross(x);
    let rho2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    if rho2 == 0.0 {
        return 0.25;
    }
    let rho = rho2.sqrt();
    let theta = [x[0] / rho, x[1] / rho, x[2] / rho];
    let ramp = m * d;
    let modulus = ramp.min(1.0);
    let g2 = match datum.surface_gradient_sq(theta) {
        Ok(v) => v,
        Err(_) => return 0.5 * m * m, // measure-zero vortex directions
    };
    let grad_sq = if ramp < 1.0 { m * m } else { 0.0 }
        + modulus * modulus * g2 / rho2;
    let pot = {
        let w = 1.0 - modulus * modulus;
        w * w / 4.0
    };
    0.5 * grad_sq + pot
}

/// Monte-Carlo integral of the v_m energy density over the ball B_r.
pub fn mc_ball_energy(
    datum: &BoundaryDatum,
    m: f64,
    r: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = KahanSum::new();
    let mut n = 0usize;
    while n < samples {
        // Uniform in the ball: radius r·U^{1/3}, direction from Gaussians.
        let dir = loop {
            let g = [
                standard_normal(&mut rng),
                standard_normal(&mut rng),
                standard_normal(&mut rng),
            ];
            let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            if norm > 1e-6 {
                break [g[0] / norm, g[1] / norm, g[2] / norm];
            }
        };
        let radius = r * rng.gen_range(0.0..1.0_f64).powf(1.0 / 3.0);
        let x = [radius * dir[0], radius * dir[1], radius * dir[2]];
        acc.add(v_m_energy_density(datum, m, x));
        n += 1;
    }
    let volume = 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
    volume * acc.value() / samples as f64
}

/// Monte-Carlo tube fraction of the v_m energy in B_r: mass in {d_X ≤ δ}
/// over the total.
pub fn mc_tube_fraction(
    datum: &BoundaryDatum,
    m: f64,
    r: f64,
    delta: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tube = KahanSum::new();
    let mut total = KahanSum::new();
    for _ in 0..samples {
        let dir = loop {
            let g = [
                standard_normal(&mut rng),
                standard_normal(&mut rng),
                standard_normal(&mut rng),
            ];
            let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            if norm > 1e-6 {
                break [g[0] / norm, g[1] / norm, g[2] / norm];
            }
        };
        let radius = r * rng.gen_range(0.0..1.0_f64).powf(1.0 / 3.0);
        let x = [radius * dir[0], radius * dir[1], radius * dir[2]];
        let e = v_m_energy_density(datum, m, x);
        total.add(e);
        if dist_to_cross(x) <= delta {
            tube.add(e);
        }
    }
    tube.value() / total.value()
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Two-sided shooting solution of the radial vortex equation
/// ρ'' + ρ'/r − d²ρ/r² + ρ(1−ρ²) = 0, ρ(0)=0, ρ(r_max)=1−d²/(2r_max²):
/// RK4 forward from a series start ρ ≈ a·r^d near 0 and backward from the
/// far-field boundary value with free slope c, matched at r_max/2 with a
/// 2×2 finite-difference Newton iteration on (a, c).
pub fn shooting_profile(degree: u32, r_max: f64, n_points: usize) -> Vec<f64> {
    let n = n_points - 1;
    let h = r_max / n as f64;
    let d = degree as f64;
    let d2 = d * d;
    let far = 1.0 - d2 / (2.0 * r_max * r_max);
    let i_match = n / 2;

    let rhs = |r: f64, y: [f64; 2]| -> [f64; 2] {
        [
            y[1],
            -y[1] / r + d2 * y[0] / (r * r) - y[0] * (1.0 - y[0] * y[0]),
        ]
    };
    let rk4_step = |r: f64, y: [f64; 2], dt: f64| -> [f64; 2] {
        let k1 = rhs(r, y);
        let k2 = rhs(r + dt / 2.0, [y[0] + dt / 2.0 * k1[0], y[1] + dt / 2.0 * k1[1]]);
        let k3 = rhs(r + dt / 2.0, [y[0] + dt / 2.0 * k2[0], y[1] + dt / 2.0 * k2[1]]);
        let k4 = rhs(r + dt, [y[0] + dt * k3[0], y[1] + dt * k3[1]]);
        [
            y[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    };

    // Forward sweep from the series start at the first grid point.
    let forward = |a: f64| -> Vec<[f64; 2]> {
        let mut values = vec![[0.0, 0.0]; i_match + 1];
        let r1 = h;
        // ρ = a(r^d − r^{d+2}/(4(d+1))) + O(r^{d+4}) near the origin.
        let corr = 1.0 / (4.0 * (d + 1.0));
        values[1] = [
            a * (r1.powf(d) - corr * r1.powf(d + 2.0)),
            a * (d * r1.powf(d - 1.0) - corr * (d + 2.0) * r1.powf(d + 1.0)),
        ];
        for i in 1..i_match {
            values[i + 1] = rk4_step(i as f64 * h, values[i], h);
        }
        values
    };
    // Backward sweep from r_max with slope parameter c.
    let backward = |c: f64| -> Vec<[f64; 2]> {
        let mut values = vec![[0.0, 0.0]; n + 1 - i_match];
        values[n - i_match] = [far, c];
        for i in (i_match..n).rev() {
            values[i - i_match] = rk4_step((i + 1) as f64 * h, values[i + 1 - i_match], -h);
        }
        values
    };
    let mismatch = |a: f64, c: f64| -> [f64; 2] {
        let f = forward(a);
        let b = backward(c);
        [
            f[i_match][0] - b[0][0],
            f[i_match][1] - b[0][1],
        ]
    };

    // Newton on (a, c) with finite-difference Jacobian.
    let mut a = 0.6_f64;
    let mut c = d2 / (r_max * r_max * r_max);
    for _ in 0..60 {
        let f0 = mismatch(a, c);
        if f0[0].abs().max(f0[1].abs()) < 1e-14 {
            break;
        }
        let da = 1e-8 * a.abs().max(1e-3);
        let dc = 1e-8 * c.abs().max(1e-6);
        let fa = mismatch(a + da, c);
        let fc = mismatch(a, c + dc);
        let j = [
            [(fa[0] - f0[0]) / da, (fc[0] - f0[0]) / dc],
            [(fa[1] - f0[1]) / da, (fc[1] - f0[1]) / dc],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 {
            break;
        }
        let step_a = (j[1][1] * f0[0] - j[0][1] * f0[1]) / det;
        let step_c = (j[0][0] * f0[1] - j[1][0] * f0[0]) / det;
        a -= step_a;
        c -= step_c;
    }

    let f = forward(a);
    let b = backward(c);
    let mut out = Vec::with_capacity(n + 1);
    for item in f.iter().take(i_match + 1) {
        out.push(item[0]);
    }
    for item in b.iter().skip(1) {
        out.push(item[0]);
    }
    out
}
