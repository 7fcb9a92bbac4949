//! Analytic reference maps and oracles: the competitor
//! v_m(x) = min{m·d_X(x), 1}·g(x/|x|), its energy quadrature with the
//! 4π(r₂−r₁)log r₂ + C(m)·r₂ annulus bound, the boundary-slope law
//! dE/dr ≈ 4π log r, and the planar degree-d radial vortex profile ρ_d used
//! as a cross-section oracle.
//!
//! Quadrature strategy: by homogeneity d_X(ρθ) = ρ·d_X(θ), the energy of v_m
//! over an annulus is a radial integral of per-shell surface integrals whose
//! ρ-dependence is piecewise polynomial for each direction θ (the ramp
//! min{mρ·d_X(θ), 1} saturates at ρ = 1/(m·d_X(θ))). The ρ-integral is done
//! in closed form; the surface integral splits into the four vortex caps,
//! where the integrand is exactly axisymmetric (|∇⊤g| = 1/sin t in geodesic
//! polar coordinates) and is integrated as a 1D panel quadrature, plus the
//! smooth remainder integrated per mesh triangle. The 1/t² singularity never
//! meets the mesh.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::boundary::{eval_g, pl_gradient_sq, BoundaryDatum};
use crate::geometry::{dist_to_cross, ComplexField};
use crate::numerics::{self, KahanSum};
use crate::sphere_mesh::normalize;
use crate::{Error, Result};

/// The competitor map v_m with core sharpness m.
#[derive(Debug, Clone)]
pub struct CompetitorMap {
    pub m: f64,
    pub datum: Arc<BoundaryDatum>,
}

impl CompetitorMap {
    pub fn new(m: f64, datum: Arc<BoundaryDatum>) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "competitor sharpness must be positive, got {m}"
            )));
        }
        Ok(Self { m, datum })
    }
}

/// v_m(x) = min{m·d_X(x), 1}·g(x/|x|); zero on X (and at the origin).
pub fn eval_v_m(map: &CompetitorMap, x: [f64; 3]) -> Complex64 {
    let d = dist_to_cross(x);
    if d == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let theta = normalize(x);
    match eval_g(&map.datum, theta) {
        Ok(g) => (map.m * d).min(1.0) * g,
        Err(_) => Complex64::new(0.0, 0.0), // below 1e-9 of a vortex direction
    }
}

/// Energy split of the quadrature.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnergyParts {
    /// Modulus gradient (radial + tangential ramp slope).
    pub modulus: f64,
    /// Phase gradient (the |∇⊤g|² terms).
    pub phase: f64,
    /// Potential (1−|v|²)²/4.
    pub potential: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.modulus + self.phase + self.potential
    }

    fn scaled_add(&mut self, other: EnergyParts, scale: f64) {
        self.modulus += scale * other.modulus;
        self.phase += scale * other.phase;
        self.potential += scale * other.potential;
    }
}

/// One surface patch of the non-cap octant mesh region: spherical area,
/// d_X at the barycenter, and the PL phase-gradient square.
#[derive(Debug, Clone, Copy)]
struct TriPatch {
    area: f64,
    d: f64,
    g2: f64,
}

/// Precomputed surface quadrature for one (datum, m, mesh level) triple.
pub struct CompetitorQuadrature {
    m: f64,
    cap_radius: f64,
    patches: Vec<TriPatch>,
    /// Panels per smooth segment of the cap 1D integrals.
    panels: usize,
}

const GAUSS8_NODES: [f64; 8] = [
    -0.9602898564975363,
    -0.7966664774136267,
    -0.5255324099163290,
    -0.1834346424956498,
    0.1834346424956498,
    0.5255324099163290,
    0.7966664774136267,
    0.9602898564975363,
];
const GAUSS8_WEIGHTS: [f64; 8] = [
    0.1012285362903763,
    0.2223810344533745,
    0.3137066458778873,
    0.3626837833783620,
    0.3626837833783620,
    0.3137066458778873,
    0.2223810344533745,
    0.1012285362903763,
];

impl CompetitorQuadrature {
    pub fn build(map: &CompetitorMap, mesh_level: u32, panels: usize) -> Result<Self> {
        let phase = map.datum.phase_field();
        if phase.mesh().level() != mesh_level {
            // The quadrature reads the datum's own phase mesh; rebuilding the
            // datum at the requested level keeps the two consistent.
            let datum = crate::boundary::build_boundary_datum(
                map.datum.cap_radius(),
                mesh_level,
            )?;
            return Self::build(
                &CompetitorMap {
                    m: map.m,
                    datum: Arc::new(datum),
                },
                mesh_level,
                panels,
            );
        }
        let mesh = phase.mesh();
        let cap_radius = map.datum.cap_radius();
        let spacing = std::f64::consts::FRAC_PI_2 / mesh.lattice_n() as f64;
        if spacing >= 0.5 * cap_radius {
            return Err(Error::UnderResolved(format!(
                "mesh spacing {spacing:.4} does not resolve the vortex caps \
                 (cap radius {cap_radius:.4})"
            )));
        }
        let cos_cap = cap_radius.cos();
        let in_cap = |v: [f64; 3]| v[0] >= cos_cap || v[1] >= cos_cap;

        let mut patches = Vec::new();
        for tri in mesh.triangles() {
            let p = [
                mesh.vertices()[tri[0]],
                mesh.vertices()[tri[1]],
                mesh.vertices()[tri[2]],
            ];
            let f = [
                phase.phi()[tri[0]],
                phase.phi()[tri[1]],
                phase.phi()[tri[2]],
            ];
            let bary = mesh.barycenter(tri);
            let flags = [in_cap(p[0]), in_cap(p[1]), in_cap(p[2]), in_cap(bary)];
            let any = flags.iter().any(|&b| b);
            let all = flags.iter().all(|&b| b);
            if all {
                continue; // covered by the analytic cap integral
            }
            let g2 = pl_gradient_sq(p, f);
            if !any {
                patches.push(TriPatch {
                    area: mesh.spherical_area(tri),
                    d: dist_to_cross(bary),
                    g2,
                });
                continue;
            }
            // Seam triangle: subdivide 4× against the exact cap circle so the
            // mesh region tiles the complement of the caps to O(mesh²).
            let area = mesh.spherical_area(tri);
            let mut sub = vec![p];
            for _ in 0..2 {
                let mut next = Vec::with_capacity(sub.len() * 4);
                for t in &sub {
                    let m01 = normalize(mid(t[0], t[1]));
                    let m12 = normalize(mid(t[1], t[2]));
                    let m02 = normalize(mid(t[0], t[2]));
                    next.push([t[0], m01, m02]);
                    next.push([m01, t[1], m12]);
                    next.push([m02, m12, t[2]]);
                    next.push([m01, m12, m02]);
                }
                sub = next;
            }
            let sub_area = area / sub.len() as f64;
            for t in &sub {
                let b = normalize(mid3(t[0], t[1], t[2]));
                if !in_cap(b) {
                    patches.push(TriPatch {
                        area: sub_area,
                        d: dist_to_cross(b),
                        g2,
                    });
                }
            }
        }
        Ok(Self {
            m: map.m,
            cap_radius,
            patches,
            panels: panels.max(32),
        })
    }

    /// Closed-form ρ-antiderivative of the shell integrand for one direction
    /// with ramp slope d and phase gradient square g2, over [a, b] ⊂ ramp.
    fn ramp_piece(&self, a: f64, b: f64, d: f64, g2: f64) -> EnergyParts {
        let m2 = self.m * self.m;
        let cubes = (b * b * b - a * a * a) / 3.0;
        let five = (b.powi(5) - a.powi(5)) / 5.0;
        let seven = (b.powi(7) - a.powi(7)) / 7.0;
        let md2 = m2 * d * d;
        EnergyParts {
            modulus: 0.5 * m2 * cubes,
            phase: 0.5 * md2 * g2 * cubes,
            potential: 0.25 * (cubes - 2.0 * md2 * five + md2 * md2 * seven),
        }
    }

    fn sat_piece(&self, a: f64, b: f64, g2: f64) -> EnergyParts {
        EnergyParts {
            modulus: 0.0,
            phase: 0.5 * g2 * (b - a),
            potential: 0.0,
        }
    }

    /// ∫_{r1}^{r2} of the shell integrand for one direction (d, g2).
    fn radial_integral(&self, r1: f64, r2: f64, d: f64, g2: f64) -> EnergyParts {
        let mut out = EnergyParts::default();
        if d <= 0.0 {
            return self.ramp_piece(r1, r2, 0.0, g2);
        }
        let break_at = 1.0 / (self.m * d);
        if r2 <= break_at {
            out.scaled_add(self.ramp_piece(r1, r2, d, g2), 1.0);
        } else if r1 >= break_at {
            out.scaled_add(self.sat_piece(r1, r2, g2), 1.0);
        } else {
            out.scaled_add(self.ramp_piece(r1, break_at, d, g2), 1.0);
            out.scaled_add(self.sat_piece(break_at, r2, g2), 1.0);
        }
        out
    }

    /// Cap contribution to the annulus energy: four identical axisymmetric
    /// caps, |∇⊤g| = 1/sin t exactly, integrated in geodesic polar
    /// coordinates with panel splits where the ramp saturation radius
    /// crosses [r1, r2].
    fn cap_annulus(&self, r1: f64, r2: f64) -> EnergyParts {
        let mut splits = vec![0.0, self.cap_radius];
        for r in [r1, r2] {
            if r > 0.0 {
                let s = 1.0 / (self.m * r);
                if s < self.cap_radius.sin() {
                    splits.push(s.asin());
                }
            }
        }
        splits.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut total = EnergyParts::default();
        for seg in splits.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            if hi - lo <= 0.0 {
                continue;
            }
            let dt = (hi - lo) / self.panels as f64;
            for p in 0..self.panels {
                let a = lo + p as f64 * dt;
                for (node, weight) in GAUSS8_NODES.iter().zip(&GAUSS8_WEIGHTS) {
                    let t = a + 0.5 * dt * (node + 1.0);
                    let s = t.sin();
                    let parts = self.radial_integral(r1, r2, s, 1.0 / (s * s));
                    // measure 2π sin t dt per cap, four caps
                    total.scaled_add(parts, 4.0 * 2.0 * PI * s * weight * 0.5 * dt);
                }
            }
        }
        total
    }

    /// E(v_m, B_{r2} ∖ B_{r1}) split into modulus/phase/potential parts.
    pub fn annulus_energy_parts(&self, r1: f64, r2: f64) -> Result<EnergyParts> {
        if !(r1 >= 0.0 && r2 >= r1) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= r1 <= r2, got [{r1}, {r2}]"
            )));
        }
        if r1 == r2 {
            return Ok(EnergyParts::default());
        }
        let mut total = self.cap_annulus(r1, r2);
        let mesh_sum = |pick: fn(&EnergyParts) -> f64, this: &Self| -> f64 {
            numerics::block_sum(this.patches.len(), 1, |i| {
                let p = this.patches[i];
                pick(&this.radial_integral(r1, r2, p.d, p.g2)) * p.area
            })
        };
        // Eight reflected copies of the octant mesh region.
        total.modulus += 8.0 * mesh_sum(|p| p.modulus, self);
        total.phase += 8.0 * mesh_sum(|p| p.phase, self);
        total.potential += 8.0 * mesh_sum(|p| p.potential, self);
        Ok(total)
    }

    pub fn annulus_energy(&self, r1: f64, r2: f64) -> Result<f64> {
        Ok(self.annulus_energy_parts(r1, r2)?.total())
    }

    /// Per-radius tangential surface energy ½∫_{S²}|∇⊤v_m|²(rθ) r² dθ.
    pub fn shell_tangential(&self, rho: f64) -> f64 {
        let m2 = self.m * self.m;
        // Caps: ½[m²ρ²cos²t·1 + min(mρ sin t, 1)²/sin²t]·2π sin t, four caps.
        let mut splits = vec![0.0, self.cap_radius];
        let s_break = 1.0 / (self.m * rho);
        if s_break < self.cap_radius.sin() {
            splits.push(s_break.asin());
        }
        splits.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut cap = KahanSum::new();
        for seg in splits.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            if hi - lo <= 0.0 {
                continue;
            }
            let dt = (hi - lo) / self.panels as f64;
            for p in 0..self.panels {
                let a = lo + p as f64 * dt;
                for (node, weight) in GAUSS8_NODES.iter().zip(&GAUSS8_WEIGHTS) {
                    let t = a + 0.5 * dt * (node + 1.0);
                    let s = t.sin();
                    let c = t.cos();
                    let integrand = if self.m * rho * s < 1.0 {
                        0.5 * m2 * rho * rho * c * c + 0.5 * m2 * rho * rho
                    } else {
                        0.5 / (s * s)
                    };
                    cap.add(integrand * 2.0 * PI * s * weight * 0.5 * dt);
                }
            }
        }
        let mesh = numerics::block_sum(self.patches.len(), 1, |i| {
            let p = self.patches[i];
            let ramp = self.m * rho * p.d;
            let integrand = if ramp < 1.0 {
                0.5 * m2 * rho * rho * (1.0 - p.d * p.d) + 0.5 * ramp * ramp * p.g2
            } else {
                0.5 * p.g2
            };
            integrand * p.area
        });
        4.0 * cap.value() + 8.0 * mesh
    }
}

fn mid(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        0.5 * (a[0] + b[0]),
        0.5 * (a[1] + b[1]),
        0.5 * (a[2] + b[2]),
    ]
}

fn mid3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> [f64; 3] {
    [
        (a[0] + b[0] + c[0]) / 3.0,
        (a[1] + b[1] + c[1]) / 3.0,
        (a[2] + b[2] + c[2]) / 3.0,
    ]
}

/// E(v_m, B_{r2} ∖ B_{r1}) by the split cap/mesh quadrature. `steps` controls
/// the panel count of the cap integrals.
pub fn annulus_energy_quadrature(
    map: &CompetitorMap,
    r1: f64,
    r2: f64,
    mesh_level: u32,
    steps: usize,
) -> Result<f64> {
    CompetitorQuadrature::build(map, mesh_level, steps)?.annulus_energy(r1, r2)
}

/// Least-squares fit of the per-radius tangential surface energy to
/// dE/dr = α·log r + β over geometrically spaced radii.
pub fn slope_fit(
    map: &CompetitorMap,
    radii: &[f64],
    mesh_level: u32,
) -> Result<(f64, f64)> {
    if radii.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "slope fit needs at least 8 radii, got {}",
            radii.len()
        )));
    }
    if radii[0] < 10.0 {
        return Err(Error::InvalidArgument(format!(
            "slope fit needs r_lo >= 10, got {}",
            radii[0]
        )));
    }
    for w in radii.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument("radii must be increasing".into()));
        }
    }
    let quad = CompetitorQuadrature::build(map, mesh_level, 64)?;
    let values: Vec<f64> = radii.iter().map(|&r| quad.shell_tangential(r)).collect();
    numerics::fit_two_basis(radii, &values, |r| r.ln(), |_| 1.0)
}

/// Radial profile ρ_d of the planar degree-d vortex v_d(r, θ) = ρ_d(r)e^{idθ},
/// solving ρ'' + ρ'/r − d²ρ/r² + ρ(1−ρ²) = 0 with ρ(0) = 0 and the far-field
/// value ρ(r_max) = 1 − d²/(2 r_max²).
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub degree: u32,
    pub r_max: f64,
    pub step: f64,
    pub rhos: Vec<f64>,
}

impl RadialProfile {
    pub fn radius(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    /// Linear interpolation; clamps beyond r_max.
    pub fn value(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let t = r / self.step;
        let i = (t.floor() as usize).min(self.rhos.len() - 2);
        let frac = (t - i as f64).min(1.0);
        self.rhos[i] * (1.0 - frac) + self.rhos[i + 1] * frac
    }
}

/// Damped-Newton relaxation on the tridiagonal finite-difference system.
pub fn radial_profile(degree: u32, r_max: f64, n_points: usize) -> Result<RadialProfile> {
    if degree < 1 {
        return Err(Error::InvalidArgument("vortex degree must be >= 1".into()));
    }
    if r_max < 20.0 {
        return Err(Error::InvalidArgument(format!(
            "r_max must be >= 20, got {r_max}"
        )));
    }
    if n_points < 200 {
        return Err(Error::InvalidArgument(format!(
            "n_points must be >= 200, got {n_points}"
        )));
    }
    let n = n_points - 1; // cells
    let step = r_max / n as f64;
    let d2 = (degree * degree) as f64;
    let far = 1.0 - d2 / (2.0 * r_max * r_max);

    let mut rho: Vec<f64> = (0..=n)
        .map(|i| {
            let r = i as f64 * step;
            r / (r * r + d2).sqrt()
        })
        .collect();
    rho[0] = 0.0;
    rho[n] = far;

    let residual = |rho: &[f64], i: usize| -> f64 {
        let r = i as f64 * step;
        (rho[i + 1] - 2.0 * rho[i] + rho[i - 1]) / (step * step)
            + (rho[i + 1] - rho[i - 1]) / (2.0 * step * r)
            - d2 * rho[i] / (r * r)
            + rho[i] * (1.0 - rho[i] * rho[i])
    };
    let sup_residual = |rho: &[f64]| -> f64 {
        (1..n)
            .map(|i| residual(rho, i).abs())
            .fold(0.0, f64::max)
    };

    // Rounding floor of the residual scales like eps/h²; converge to that.
    let tol = 1e-12_f64.max(1e-14 / (step * step));
    let mut res = sup_residual(&rho);
    for _sweep in 0..200 {
        if res < tol {
            let profile = RadialProfile {
                degree,
                r_max,
                step,
                rhos: rho,
            };
            return Ok(profile);
        }
        let unknowns = n - 1;
        let mut lower = vec![0.0; unknowns];
        let mut diag = vec![0.0; unknowns];
        let mut upper = vec![0.0; unknowns];
        let mut rhs = vec![0.0; unknowns];
        for i in 1..n {
            let r = i as f64 * step;
            let row = i - 1;
            lower[row] = 1.0 / (step * step) - 1.0 / (2.0 * step * r);
            upper[row] = 1.0 / (step * step) + 1.0 / (2.0 * step * r);
            diag[row] = -2.0 / (step * step) - d2 / (r * r) + 1.0 - 3.0 * rho[i] * rho[i];
            rhs[row] = -residual(&rho, i);
        }
        let delta = numerics::solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        let mut lambda = 1.0;
        loop {
            let mut trial = rho.clone();
            for i in 1..n {
                trial[i] += lambda * delta[i - 1];
            }
            let trial_res = sup_residual(&trial);
            if trial_res < res || lambda < 1e-6 {
                rho = trial;
                res = trial_res;
                break;
            }
            lambda *= 0.5;
        }
    }
    Err(Error::Numerical(format!(
        "radial profile relaxation did not converge (residual {res:.2e} after 200 sweeps)"
    )))
}

/// Sup over t ∈ [0, 2] of | |u(x0 + t·n)| − ρ₁(t) | with trilinear sampling
/// of the octant field along a transversal segment at x0 on the x-axis.
pub fn cross_section_compare(
    field: &ComplexField,
    x0: [f64; 3],
    transversal: [f64; 3],
    profile: &RadialProfile,
) -> Result<f64> {
    let geom = field.geometry();
    let r = geom.radius();
    if x0[1] != 0.0 || x0[2] != 0.0 || x0[0] < r / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "cross-section base point {x0:?} must lie on the x-axis with |x0| >= R/2"
        )));
    }
    let n = normalize(transversal);
    if n[0].abs() > 1e-12 {
        return Err(Error::InvalidArgument(
            "transversal direction must be orthogonal to the x-axis".into(),
        ));
    }
    let t_max = 2.0;
    let samples = 200usize;
    let mut sup: f64 = 0.0;
    for s in 0..=samples {
        let t = t_max * s as f64 / samples as f64;
        let p = [x0[0] + t * n[0], x0[1] + t * n[1], x0[2] + t * n[2]];
        let value = sample_octant(field, p)?;
        let err = (value.norm() - profile.value(t)).abs();
        if err > sup {
            sup = err;
        }
    }
    Ok(sup)
}

/// Trilinear interpolation on the octant grid; rejects points whose
/// interpolation cell touches exterior nodes.
pub fn sample_octant(field: &ComplexField, p: [f64; 3]) -> Result<Complex64> {
    let geom = field.geometry();
    let h = geom.spacing();
    let n = geom.cells_per_axis();
    let mut idx = [0usize; 3];
    let mut frac = [0.0_f64; 3];
    for a in 0..3 {
        if p[a] < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "octant sample point {p:?} has negative coordinate"
            )));
        }
        let t = p[a] / h;
        if t > n as f64 {
            return Err(Error::InvalidArgument(format!(
                "sample point {p:?} exits the grid"
            )));
        }
        let base = t.floor().min((n - 1) as f64);
        idx[a] = base as usize;
        frac[a] = t - base;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for di in 0..2 {
        for dj in 0..2 {
            for dk in 0..2 {
                let w = (if di == 0 { 1.0 - frac[0] } else { frac[0] })
                    * (if dj == 0 { 1.0 - frac[1] } else { frac[1] })
                    * (if dk == 0 { 1.0 - frac[2] } else { frac[2] });
                if w == 0.0 {
                    continue;
                }
                let (i, j, k) = (idx[0] + di, idx[1] + dj, idx[2] + dk);
                if geom.class(i, j, k).is_exterior() {
                    return Err(Error::InvalidArgument(format!(
                        "sample point {p:?} reads an exterior node"
                    )));
                }
                acc += w * field.get(i, j, k);
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{build_boundary_datum, DEFAULT_CAP_RADIUS};
    use std::sync::OnceLock;

    fn map() -> &'static CompetitorMap {
        static CELL: OnceLock<CompetitorMap> = OnceLock::new();
        CELL.get_or_init(|| {
            let datum = build_boundary_datum(DEFAULT_CAP_RADIUS, 6).unwrap();
            CompetitorMap::new(1.0, Arc::new(datum)).unwrap()
        })
    }

    #[test]
    fn v_m_values() {
        let m = map();
        assert_eq!(eval_v_m(m, [3.0, 0.0, 0.0]), Complex64::new(0.0, 0.0));
        assert_eq!(eval_v_m(m, [0.0, 0.0, 0.0]), Complex64::new(0.0, 0.0));
        let pole = eval_v_m(m, [0.0, 0.0, 5.0]);
        assert_eq!(pole.re, 0.0);
        assert_eq!(pole.im, 1.0);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let x = [
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            ];
            let v = eval_v_m(m, x);
            assert!(v.norm() <= 1.0 + 1e-14);
            // Symmetry identities inherited from g.
            let vx = eval_v_m(m, [-x[0], x[1], x[2]]);
            assert!((vx + v.conj()).norm() < 1e-12);
            let vz = eval_v_m(m, [x[0], x[1], -x[2]]);
            assert!((vz - v.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn annulus_quadrature_additivity_and_empty_annulus() {
        let quad = CompetitorQuadrature::build(map(), 6, 64).unwrap();
        assert_eq!(quad.annulus_energy(3.0, 3.0).unwrap(), 0.0);
        let a = quad.annulus_energy(0.0, 7.0).unwrap();
        let b = quad.annulus_energy(7.0, 31.0).unwrap();
        let c = quad.annulus_energy(0.0, 31.0).unwrap();
        assert!(
            ((a + b) - c).abs() <= 1e-10 * c.abs(),
            "additivity violated: {a} + {b} vs {c}"
        );
        assert!(quad.annulus_energy(5.0, 2.0).is_err());
    }

    #[test]
    fn annulus_bound_constant_transfers_from_small_to_large_radius() {
        let quad = CompetitorQuadrature::build(map(), 6, 64).unwrap();
        let e10 = quad.annulus_energy(0.0, 10.0).unwrap();
        let c = (e10 - 4.0 * PI * 10.0 * 10.0_f64.ln()) / 10.0;
        let e100 = quad.annulus_energy(0.0, 100.0).unwrap();
        let bound = 4.0 * PI * 100.0 * 100.0_f64.ln() + c * 100.0;
        assert!(
            e100 <= bound * 1.02,
            "E(100) = {e100} vs transferred bound {bound}"
        );
    }

    #[test]
    fn slope_fit_recovers_exact_synthetic_model() {
        // Synthetic per-radius data 4π·log r fits back exactly.
        let radii: Vec<f64> = (0..10).map(|i| 20.0 * 1.5_f64.powi(i)).collect();
        let values: Vec<f64> = radii.iter().map(|&r| 4.0 * PI * r.ln()).collect();
        let (a, b) = numerics::fit_two_basis(&radii, &values, |r| r.ln(), |_| 1.0).unwrap();
        assert!((a - 4.0 * PI).abs() < 1e-9);
        assert!(b.abs() < 1e-9);
    }

    #[test]
    fn slope_fit_validates_inputs() {
        let radii_short: Vec<f64> = (0..5).map(|i| 20.0 + i as f64).collect();
        assert!(slope_fit(map(), &radii_short, 5).is_err());
        let radii_low: Vec<f64> = (0..10).map(|i| 5.0 + i as f64).collect();
        assert!(slope_fit(map(), &radii_low, 5).is_err());
    }

    #[test]
    fn radial_profile_satisfies_invariants() {
        let p = radial_profile(1, 20.0, 400).unwrap();
        assert_eq!(p.rhos[0], 0.0);
        assert!(p.rhos[p.rhos.len() - 1] >= 0.99);
        for w in p.rhos.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "profile must be nondecreasing");
        }
        for &v in &p.rhos {
            assert!((0.0..1.0 + 1e-12).contains(&v));
        }
        // Degree-2 core is flatter at the origin.
        let p2 = radial_profile(2, 20.0, 400).unwrap();
        assert!(p2.value(0.5) < p.value(0.5));
    }

    #[test]
    fn radial_profile_validates_inputs() {
        assert!(radial_profile(0, 20.0, 400).is_err());
        assert!(radial_profile(1, 10.0, 400).is_err());
        assert!(radial_profile(1, 20.0, 100).is_err());
    }

    #[test]
    fn cross_section_trivials() {
        use crate::geometry::build_octant_geometry;
        let geom = build_octant_geometry(8.0, 0.5).unwrap();
        let m = map();
        let field = ComplexField::from_fn(geom, |p, _| eval_v_m(m, p));
        let profile = radial_profile(1, 20.0, 400).unwrap();
        let sup = cross_section_compare(&field, [5.0, 0.0, 0.0], [0.0, 0.0, 1.0], &profile)
            .unwrap();
        // v₁ is the unit ramp, not the vortex profile: the error is the known
        // gap |min(t,1) − ρ₁(t)|, positive and below its analytic sup.
        let expected: f64 = (0..=200)
            .map(|s| {
                let t = 2.0 * s as f64 / 200.0;
                (t.min(1.0) - profile.value(t)).abs()
            })
            .fold(0.0, f64::max);
        assert!(sup > 0.05);
        assert!((sup - expected).abs() < 0.05, "sup = {sup}, gap = {expected}");
        // t = 0 contributes zero error (both vanish on the axis).
        assert_eq!(field.get(10, 0, 0).norm(), 0.0);
        // Segment exiting the grid cube is rejected.
        let tiny = build_octant_geometry(1.5, 0.25).unwrap();
        let small = ComplexField::from_fn(tiny, |p, _| eval_v_m(m, p));
        assert!(cross_section_compare(&small, [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], &profile)
            .is_err());
        // Base point off the axis is rejected.
        assert!(
            cross_section_compare(&field, [5.0, 0.5, 0.0], [0.0, 0.0, 1.0], &profile).is_err()
        );
    }
}
