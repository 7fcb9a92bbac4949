//! The boundary datum g : S² → S¹ and its ball version
//! g_R(x) = min{d_X(x), 1} · g(x/|x|).
//!
//! g is the planar vortex map in geodesic charts around the four vortex
//! points ±e₁, ±e₂ (degree +1 around ±e₁, −1 around ±e₂), written as e^{iφ}
//! on the spherical octant with φ = 0 on the {z=0} arc and φ = π/2 on the
//! {x=0} and {y=0} arcs, and extended to the rest of the octant as the
//! discrete Laplace–Beltrami harmonic interpolant of those boundary values.
//! The harmonic choice is one admissible Lipschitz extension; it is unique,
//! symmetric and obeys the discrete maximum principle, which keeps
//! 0 < φ < π/2 strictly at interior vertices. The remaining octants are
//! filled by the reflection identities g∘R_z = ḡ, g∘R_x = −ḡ, g∘R_y = −ḡ.

use num_complex::Complex64;

use crate::geometry::{dist_to_cross, dist_to_vortex_points};
use crate::numerics::SparseSym;
use crate::sphere_mesh::{cross, dot, norm, normalize, sub, OctantSphereMesh};
use crate::{Error, Result};

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};

/// Azimuthal-equidistant chart at a vortex point. `frame = (u, v)` are the
/// tangent directions mapped to the positive real and imaginary axes.
#[derive(Debug, Clone)]
pub struct GeodesicChart {
    center: [f64; 3],
    u: [f64; 3],
    v: [f64; 3],
    cap_radius: f64,
}

fn is_vortex_center(c: [f64; 3]) -> bool {
    let candidates: [[f64; 3]; 4] = [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
    ];
    candidates
        .iter()
        .any(|p| norm(sub(c, *p)) < 1e-12)
}

pub fn build_chart(
    center: [f64; 3],
    frame: ([f64; 3], [f64; 3]),
    cap_radius: f64,
) -> Result<GeodesicChart> {
    if !is_vortex_center(center) {
        return Err(Error::InvalidArgument(format!(
            "chart center {center:?} is not a vortex point"
        )));
    }
    let (u, v) = frame;
    let tol = 1e-12;
    if (norm(u) - 1.0).abs() > tol
        || (norm(v) - 1.0).abs() > tol
        || dot(u, v).abs() > tol
        || dot(u, center).abs() > tol
        || dot(v, center).abs() > tol
    {
        return Err(Error::InvalidArgument(
            "chart frame must be orthonormal and tangent at the center".into(),
        ));
    }
    Ok(GeodesicChart {
        center,
        u,
        v,
        cap_radius,
    })
}

impl GeodesicChart {
    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn frame(&self) -> ([f64; 3], [f64; 3]) {
        (self.u, self.v)
    }

    pub fn cap_radius(&self) -> f64 {
        self.cap_radius
    }

    /// Forward map: geodesic distance preserved, ψ(center) = 0.
    pub fn forward(&self, theta: [f64; 3]) -> Complex64 {
        let t = dot(theta, self.center).clamp(-1.0, 1.0).acos();
        let w = [
            theta[0] - dot(theta, self.center) * self.center[0],
            theta[1] - dot(theta, self.center) * self.center[1],
            theta[2] - dot(theta, self.center) * self.center[2],
        ];
        let wn = norm(w);
        if wn == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(t * dot(w, self.u) / wn, t * dot(w, self.v) / wn)
    }

    /// Inverse map (exponential map at the center).
    pub fn inverse(&self, z: Complex64) -> [f64; 3] {
        let t = z.norm();
        if t == 0.0 {
            return self.center;
        }
        let dir = [
            (z.re * self.u[0] + z.im * self.v[0]) / t,
            (z.re * self.u[1] + z.im * self.v[1]) / t,
            (z.re * self.u[2] + z.im * self.v[2]) / t,
        ];
        [
            t.cos() * self.center[0] + t.sin() * dir[0],
            t.cos() * self.center[1] + t.sin() * dir[1],
            t.cos() * self.center[2] + t.sin() * dir[2],
        ]
    }
}

/// Phase field φ on the triangulated closed spherical octant.
#[derive(Debug, Clone)]
pub struct PhaseField {
    mesh: OctantSphereMesh,
    phi: Vec<f64>,
    cap_radius: f64,
    pinned: Vec<bool>,
}

/// Phase of the e₁-cap vortex map at an octant direction: arg(y + iz).
fn cap1_phase(theta: [f64; 3]) -> f64 {
    if theta[1] == 0.0 && theta[2] == 0.0 {
        return std::f64::consts::FRAC_PI_4; // undefined at the vortex center
    }
    theta[2].atan2(theta[1])
}

/// Phase of the e₂-cap map −ψ̄₂/|ψ₂| at an octant direction: π − arg(−x + iz).
fn cap2_phase(theta: [f64; 3]) -> f64 {
    if theta[0] == 0.0 && theta[2] == 0.0 {
        return std::f64::consts::FRAC_PI_4;
    }
    PI - theta[2].atan2(-theta[0])
}

pub fn build_phase_field(cap_radius: f64, mesh_level: u32) -> Result<PhaseField> {
    if !(cap_radius > 0.0 && cap_radius < FRAC_PI_8) {
        return Err(Error::InvalidArgument(format!(
            "cap radius must lie in (0, π/8), got {cap_radius}"
        )));
    }
    if mesh_level < 3 {
        return Err(Error::InvalidArgument(format!(
            "mesh_level must be at least 3, got {mesh_level}"
        )));
    }
    let mesh = OctantSphereMesh::build(mesh_level);
    let nv = mesh.vertices().len();
    let cos_cap = cap_radius.cos();

    let in_cap1: Vec<bool> = mesh.vertices().iter().map(|v| v[0] >= cos_cap).collect();
    let in_cap2: Vec<bool> = mesh.vertices().iter().map(|v| v[1] >= cos_cap).collect();

    // Vertex adjacency.
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for tri in mesh.triangles() {
        for a in 0..3 {
            for b in 0..3 {
                if a != b && !neighbors[tri[a]].contains(&tri[b]) {
                    neighbors[tri[a]].push(tri[b]);
                }
            }
        }
    }

    // Cap resolution gate: vertices of the snapped cap boundary ring,
    // extrapolated from the octant quarter to the full circle.
    for (cap, flags) in [(1, &in_cap1), (2, &in_cap2)] {
        let ring = (0..nv)
            .filter(|&i| flags[i] && neighbors[i].iter().any(|&j| !flags[j]))
            .count();
        let full_circle = 4 * ring.saturating_sub(1);
        if full_circle < 8 {
            return Err(Error::MeshTooCoarse(format!(
                "cap {cap} boundary resolved by only {full_circle} vertices; \
                 need at least 8 (refine the mesh or enlarge the cap)"
            )));
        }
    }

    // Dirichlet data: cap phases inside the snapped caps, 0 on the {z=0} arc,
    // π/2 on the {x=0} and {y=0} arcs.
    let mut phi = vec![0.0_f64; nv];
    let mut pinned = vec![false; nv];
    for i in 0..nv {
        let v = mesh.vertices()[i];
        if in_cap1[i] {
            phi[i] = cap1_phase(v);
            pinned[i] = true;
        } else if in_cap2[i] {
            phi[i] = cap2_phase(v);
            pinned[i] = true;
        } else if mesh.on_edge_z0(i) {
            phi[i] = 0.0;
            pinned[i] = true;
        } else if mesh.on_edge_x0(i) || mesh.on_edge_y0(i) {
            phi[i] = FRAC_PI_2;
            pinned[i] = true;
        }
    }

    // Cotangent Laplace–Beltrami stiffness restricted to the free vertices.
    let free_ids: Vec<usize> = (0..nv).filter(|&i| !pinned[i]).collect();
    let mut free_pos = vec![usize::MAX; nv];
    for (row, &i) in free_ids.iter().enumerate() {
        free_pos[i] = row;
    }
    let nf = free_ids.len();
    let mut diag = vec![0.0_f64; nf];
    let mut offdiag: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nf];
    let mut rhs = vec![0.0_f64; nf];
    for tri in mesh.triangles() {
        let p = [
            mesh.vertices()[tri[0]],
            mesh.vertices()[tri[1]],
            mesh.vertices()[tri[2]],
        ];
        for e in 0..3 {
            let (ia, ib) = (tri[e], tri[(e + 1) % 3]);
            let (pa, pb, pc) = (p[e], p[(e + 1) % 3], p[(e + 2) % 3]);
            // Half-cotangent of the angle at pc, weighting edge (ia, ib).
            let u = sub(pa, pc);
            let v = sub(pb, pc);
            let cot = dot(u, v) / norm(cross(u, v));
            let w = 0.5 * cot;
            for (i, j) in [(ia, ib), (ib, ia)] {
                if pinned[i] {
                    continue;
                }
                let row = free_pos[i];
                diag[row] += w;
                if pinned[j] {
                    rhs[row] += w * phi[j];
                } else {
                    let col = free_pos[j];
                    if let Some(entry) =
                        offdiag[row].iter_mut().find(|(c, _)| *c == col)
                    {
                        entry.1 -= w;
                    } else {
                        offdiag[row].push((col, -w));
                    }
                }
            }
        }
    }
    if nf > 0 {
        let system = SparseSym {
            n: nf,
            diag,
            neighbors: offdiag,
        };
        let sol = system.solve_cg(&rhs, 1e-13, 20_000)?;
        for (row, &i) in free_ids.iter().enumerate() {
            phi[i] = sol[row];
        }
    }

    Ok(PhaseField {
        mesh,
        phi,
        cap_radius,
        pinned,
    })
}

impl PhaseField {
    pub fn mesh(&self) -> &OctantSphereMesh {
        &self.mesh
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn cap_radius(&self) -> f64 {
        self.cap_radius
    }

    pub fn is_pinned(&self, vertex: usize) -> bool {
        self.pinned[vertex]
    }
}

/// The full boundary datum: octant phase field plus the four vortex charts.
#[derive(Debug, Clone)]
pub struct BoundaryDatum {
    phase: PhaseField,
    charts: Vec<GeodesicChart>,
    cap_radius: f64,
}

pub const DEFAULT_CAP_RADIUS: f64 = std::f64::consts::PI / 16.0;
pub const DEFAULT_MESH_LEVEL: u32 = 6;

pub fn build_boundary_datum(cap_radius: f64, mesh_level: u32) -> Result<BoundaryDatum> {
    let phase = build_phase_field(cap_radius, mesh_level)?;
    let e1 = [1.0, 0.0, 0.0];
    let e2 = [0.0, 1.0, 0.0];
    let e3 = [0.0, 0.0, 1.0];
    let m = |a: [f64; 3]| [-a[0], -a[1], -a[2]];
    // Frames chosen so the chart images align with the arcs fixed by the
    // construction; the ∓e₂ frames are the reflected images of the e₂ frame.
    let charts = vec![
        build_chart(e1, (e2, e3), cap_radius)?,
        build_chart(m(e1), (m(e2), e3), cap_radius)?,
        build_chart(e2, (m(e1), e3), cap_radius)?,
        build_chart(m(e2), (m(e1), e3), cap_radius)?,
    ];
    Ok(BoundaryDatum {
        phase,
        charts,
        cap_radius,
    })
}

impl BoundaryDatum {
    pub fn phase_field(&self) -> &PhaseField {
        &self.phase
    }

    pub fn charts(&self) -> &[GeodesicChart] {
        &self.charts
    }

    pub fn cap_radius(&self) -> f64 {
        self.cap_radius
    }

    /// Phase φ(θ') ∈ [0, π/2] for a direction in the closed octant.
    pub fn octant_phase(&self, theta: [f64; 3]) -> f64 {
        let cos_cap = self.cap_radius.cos();
        if theta[0] >= cos_cap {
            return cap1_phase(theta);
        }
        if theta[1] >= cos_cap {
            return cap2_phase(theta);
        }
        let (tri, w) = self.phase.mesh.locate(theta);
        let t = self.phase.mesh.triangles()[tri];
        w[0] * self.phase.phi[t[0]] + w[1] * self.phase.phi[t[1]] + w[2] * self.phase.phi[t[2]]
    }

    /// |∇⊤g|²(θ) for a unit direction anywhere on the sphere: the exact
    /// 1/sin²(d_V) inside the caps, the PL phase gradient of the located mesh
    /// triangle elsewhere (reflection-invariant).
    pub fn surface_gradient_sq(&self, theta: [f64; 3]) -> Result<f64> {
        let folded = normalize([theta[0].abs(), theta[1].abs(), theta[2].abs()]);
        let dv = dist_to_vortex_points(folded)?;
        if dv <= 1e-12 {
            return Err(Error::VortexPoint(format!(
                "|∇⊤g| is singular at {theta:?}"
            )));
        }
        let cos_cap = self.cap_radius.cos();
        if folded[0] >= cos_cap || folded[1] >= cos_cap {
            let s = dv.sin();
            return Ok(1.0 / (s * s));
        }
        let mesh = self.phase.mesh();
        let (tri, _) = mesh.locate(folded);
        let t = mesh.triangles()[tri];
        Ok(pl_gradient_sq(
            [
                mesh.vertices()[t[0]],
                mesh.vertices()[t[1]],
                mesh.vertices()[t[2]],
            ],
            [
                self.phase.phi[t[0]],
                self.phase.phi[t[1]],
                self.phase.phi[t[2]],
            ],
        ))
    }
}

/// Evaluates g at a unit direction. Inside the caps this is the exact vortex
/// formula; on the rest of the octant e^{iφ} with φ interpolated on the mesh;
/// on the other octants the reflected values. |g| = 1 exactly.
pub fn eval_g(datum: &BoundaryDatum, theta: [f64; 3]) -> Result<Complex64> {
    let dv = dist_to_vortex_points(normalize(theta))?;
    if dv <= 1e-9 {
        return Err(Error::VortexPoint(format!(
            "g is singular at {theta:?} (distance to V = {dv:.2e})"
        )));
    }
    let folded = [theta[0].abs(), theta[1].abs(), theta[2].abs()];
    let folded = normalize(folded);
    let sx = if theta[0] < 0.0 { -1.0 } else { 1.0 };
    let sy = if theta[1] < 0.0 { -1.0 } else { 1.0 };
    let sz = if theta[2] < 0.0 { -1.0 } else { 1.0 };

    let cos_cap = datum.cap_radius.cos();
    // On the symmetry planes the datum is exact: 1 on {z=0}, i on
    // {x=0}∪{y=0}; shortcut so face values carry exact zero components.
    let g = if folded[2] == 0.0 {
        Complex64::new(1.0, 0.0)
    } else if folded[0] == 0.0 || folded[1] == 0.0 {
        Complex64::new(0.0, 1.0)
    } else if folded[0] >= cos_cap {
        // ψ₁/|ψ₁| with frame (e₂, e₃): (y + iz)/|y + iz|.
        let n = (folded[1] * folded[1] + folded[2] * folded[2]).sqrt();
        Complex64::new(folded[1] / n, folded[2] / n)
    } else if folded[1] >= cos_cap {
        // −ψ̄₂/|ψ₂| with frame (−e₁, e₃): (x + iz)/|x + iz|.
        let n = (folded[0] * folded[0] + folded[2] * folded[2]).sqrt();
        Complex64::new(folded[0] / n, folded[2] / n)
    } else {
        let phi = datum.octant_phase(folded);
        if phi == FRAC_PI_2 {
            Complex64::new(0.0, 1.0)
        } else {
            Complex64::new(phi.cos(), phi.sin())
        }
    };
    Ok(Complex64::new(sx * sy * g.re, sz * g.im))
}

/// g_R(x) = min{d_X(x), 1} · g(x/|x|); exactly 0 on the cross X. Defined for
/// every x off X; intended for sphere-boundary nodes with |x| ≈ R.
pub fn eval_g_r(datum: &BoundaryDatum, x: [f64; 3], _r: f64) -> Complex64 {
    let d = dist_to_cross(x);
    if d == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let theta = normalize(x);
    match eval_g(datum, theta) {
        Ok(g) => d.min(1.0) * g,
        // Within 1e-9 of a vortex direction the modulus is below d ≈ |x|·1e-9;
        // the phase is immaterial at that scale.
        Err(_) => Complex64::new(0.0, 0.0),
    }
}

/// |∇φ|² of the linear interpolant on a flat triangle.
pub fn pl_gradient_sq(p: [[f64; 3]; 3], f: [f64; 3]) -> f64 {
    let e1 = sub(p[1], p[0]);
    let e2 = sub(p[2], p[0]);
    let g11 = dot(e1, e1);
    let g12 = dot(e1, e2);
    let g22 = dot(e2, e2);
    let det = g11 * g22 - g12 * g12;
    let d1 = f[1] - f[0];
    let d2 = f[2] - f[0];
    // ∇φ = a e1 + b e2 with Gram solve; |∇φ|² = (a, b) G (a, b)ᵀ = d · G⁻¹ d.
    (g22 * d1 * d1 - 2.0 * g12 * d1 * d2 + g11 * d2 * d2) / det
}

/// Measured constant C in |∇⊤g|² ≤ 1/d_V² + C: the max over mesh triangle
/// barycenters (with d_V above one mesh spacing) of |∇⊤g|² − 1/d_V².
pub fn surface_gradient_bound(datum: &BoundaryDatum, mesh_level: u32) -> Result<f64> {
    let field = if mesh_level == datum.phase.mesh.level() {
        datum.phase.clone()
    } else {
        build_phase_field(datum.cap_radius, mesh_level)?
    };
    let mesh = field.mesh();
    let h_mesh = std::f64::consts::FRAC_PI_2 / mesh.lattice_n() as f64;
    let rings = datum.cap_radius / h_mesh;
    if rings < 3.0 {
        return Err(Error::MeshTooCoarse(format!(
            "caps span only {rings:.1} triangle rings; need at least 3"
        )));
    }
    let cos_cap = datum.cap_radius.cos();
    let mut sup = f64::NEG_INFINITY;
    for tri in mesh.triangles() {
        let bary = mesh.barycenter(tri);
        let dv = dist_to_vortex_points(bary)?;
        if dv <= h_mesh {
            continue;
        }
        let grad_sq = if bary[0] >= cos_cap || bary[1] >= cos_cap {
            // Exact vortex-map gradient in geodesic polar coordinates.
            1.0 / dv.sin().powi(2)
        } else {
            let p = [
                mesh.vertices()[tri[0]],
                mesh.vertices()[tri[1]],
                mesh.vertices()[tri[2]],
            ];
            let f = [
                field.phi()[tri[0]],
                field.phi()[tri[1]],
                field.phi()[tri[2]],
            ];
            pl_gradient_sq(p, f)
        };
        let excess = grad_sq - 1.0 / (dv * dv);
        if excess > sup {
            sup = excess;
        }
    }
    Ok(sup)
}

/// Right-handed orthonormal tangent frame at a unit vector: a × b = c.
pub fn tangent_frame(c: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let pick = if c[0].abs() <= c[1].abs() && c[0].abs() <= c[2].abs() {
        [1.0, 0.0, 0.0]
    } else if c[1].abs() <= c[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let a = normalize(cross(c, pick));
    let b = cross(c, a);
    (a, b)
}

/// Winding of g along the positively-oriented boundary circle of a cap.
pub fn degree_on_sphere_cap(
    datum: &BoundaryDatum,
    center: [f64; 3],
    cap_radius: f64,
) -> Result<i64> {
    if !(cap_radius > 0.0 && cap_radius < std::f64::consts::FRAC_PI_4) {
        return Err(Error::InvalidArgument(format!(
            "cap radius {cap_radius} outside (0, π/4)"
        )));
    }
    let center = normalize(center);
    let (a, b) = tangent_frame(center);
    let samples = 720usize;
    let mut values = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = 2.0 * PI * k as f64 / samples as f64;
        let dir = [
            t.cos() * a[0] + t.sin() * b[0],
            t.cos() * a[1] + t.sin() * b[1],
            t.cos() * a[2] + t.sin() * b[2],
        ];
        let theta = [
            cap_radius.cos() * center[0] + cap_radius.sin() * dir[0],
            cap_radius.cos() * center[1] + cap_radius.sin() * dir[1],
            cap_radius.cos() * center[2] + cap_radius.sin() * dir[2],
        ];
        if dist_to_vortex_points(normalize(theta))? < 0.5 * cap_radius {
            return Err(Error::InvalidArgument(
                "cap boundary circle passes too close to a vortex point".into(),
            ));
        }
        values.push(eval_g(datum, theta)?);
    }
    let mut total = 0.0;
    for k in 0..samples {
        let prev = values[k];
        let next = values[(k + 1) % samples];
        total += (next * prev.conj()).arg();
    }
    let turns = total / (2.0 * PI);
    let winding = turns.round();
    let residual = (turns - winding).abs();
    if residual >= 0.1 {
        return Err(Error::UnderResolved(format!(
            "cap degree residual {residual:.3} at center {center:?}"
        )));
    }
    Ok(winding as i64)
}

/// Sampled Lipschitz constant of g_R across the vortex directions.
pub fn g_r_lipschitz_estimate(datum: &BoundaryDatum, r: f64, pairs: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut sup: f64 = 0.0;
    for _ in 0..pairs {
        // Points on the sphere of radius r near a vortex direction.
        let base = match rng.gen_range(0..4) {
            0 => [1.0, 0.0, 0.0],
            1 => [-1.0, 0.0, 0.0],
            2 => [0.0, 1.0, 0.0],
            _ => [0.0, -1.0, 0.0],
        };
        let mut sample = || {
            let p = [
                base[0] + rng.gen_range(-0.5..0.5) / r,
                base[1] + rng.gen_range(-0.5..0.5) / r,
                base[2] + rng.gen_range(-0.5..0.5) / r,
            ];
            let p = normalize(p);
            [p[0] * r, p[1] * r, p[2] * r]
        };
        let x = sample();
        let y = sample();
        let dist = norm(sub(x, y));
        if dist < 1e-9 {
            continue;
        }
        let gx = eval_g_r(datum, x, r);
        let gy = eval_g_r(datum, y, r);
        let ratio = (gx - gy).norm() / dist;
        if ratio > sup {
            sup = ratio;
        }
    }
    sup
}
