//! Discrete domain: the octant Q_R = {x,y,z > 0} ∩ B_R on a uniform grid,
//! distance functions to the cross X = {xy=0, z=0} and to the vortex points
//! V = S² ∩ X, and the symmetry extension/restriction operators
//! u∘R_x = −ū, u∘R_y = −ū, u∘R_z = ū, under which a field on the octant
//! determines a field on the full ball.
//!
//! Nodes sit at (i·h, j·h, k·h). Cells are indexed by their lower corner and
//! carry a fractional weight = fraction of the cell volume inside B_R,
//! measured by 4³ midpoint subsampling. A node is *exterior* when no incident
//! cell intersects the open ball; exterior values are pinned to zero and are
//! never read by any energy or gradient stencil.

use std::sync::Arc;

use num_complex::Complex64;

use crate::numerics;
use crate::{Error, Result};

/// Per-node classification. Edge and corner nodes carry a set of face labels;
/// the Dirichlet sphere label takes precedence over Neumann faces downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NodeClass(u8);

impl NodeClass {
    pub const FACE_X0: u8 = 1;
    pub const FACE_Y0: u8 = 2;
    pub const FACE_Z0: u8 = 4;
    pub const SPHERE: u8 = 8;
    pub const EXTERIOR: u8 = 16;

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn is_interior(self) -> bool {
        self.0 == 0
    }

    pub fn is_exterior(self) -> bool {
        self.0 & Self::EXTERIOR != 0
    }

    pub fn is_sphere(self) -> bool {
        self.0 & Self::SPHERE != 0
    }

    pub fn on_face_x0(self) -> bool {
        self.0 & Self::FACE_X0 != 0
    }

    pub fn on_face_y0(self) -> bool {
        self.0 & Self::FACE_Y0 != 0
    }

    pub fn on_face_z0(self) -> bool {
        self.0 & Self::FACE_Z0 != 0
    }

    /// On the cross X: the x-axis is {y=0, z=0}, the y-axis is {x=0, z=0}.
    pub fn on_cross(self) -> bool {
        let (x0, y0, z0) = (self.on_face_x0(), self.on_face_y0(), self.on_face_z0());
        (y0 && z0) || (x0 && z0)
    }
}

/// Maximum grid cells per axis.
pub const MAX_CELLS_PER_AXIS: usize = 2048;

/// Uniform grid over the octant with node classification and fractional
/// cell weights for spherical quadrature.
#[derive(Debug)]
pub struct OctantGeometry {
    r: f64,
    h: f64,
    /// Cells per axis; nodes per axis is `n + 1`.
    n: usize,
    dims: [usize; 3],
    node_class: Vec<NodeClass>,
    cell_weights: Vec<f64>,
}

/// Subsamples per axis when measuring cell weights.
const SUBSAMPLES: usize = 4;

pub fn build_octant_geometry(r: f64, h: f64) -> Result<Arc<OctantGeometry>> {
    OctantGeometry::build(r, h).map(Arc::new)
}

impl OctantGeometry {
    pub fn build(r: f64, h: f64) -> Result<Self> {
        if !(r.is_finite() && h.is_finite() && r > 0.0 && h > 0.0 && r >= h) {
            return Err(Error::Geometry(format!(
                "radius and spacing must be positive with R >= h, got R={r}, h={h}"
            )));
        }
        let n = (r / h - 1e-12).ceil() as usize;
        if n > MAX_CELLS_PER_AXIS {
            return Err(Error::Geometry(format!(
                "grid exceeds {MAX_CELLS_PER_AXIS} cells per axis (R/h = {})",
                r / h
            )));
        }
        let dims = [n + 1, n + 1, n + 1];
        let r2 = r * r;

        let mut cell_weights = vec![0.0_f64; n * n * n];
        let inner = r - 3.0_f64.sqrt() * h;
        for ci in 0..n {
            for cj in 0..n {
                for ck in 0..n {
                    let lo = [ci as f64 * h, cj as f64 * h, ck as f64 * h];
                    let lo_norm2 = lo[0] * lo[0] + lo[1] * lo[1] + lo[2] * lo[2];
                    let idx = (ci * n + cj) * n + ck;
                    if lo_norm2 >= r2 {
                        continue; // closest point of the cell is its lower corner
                    }
                    if inner > 0.0 && lo_norm2 <= inner * inner {
                        cell_weights[idx] = 1.0;
                        continue;
                    }
                    let hi = [lo[0] + h, lo[1] + h, lo[2] + h];
                    if hi[0] * hi[0] + hi[1] * hi[1] + hi[2] * hi[2] <= r2 {
                        cell_weights[idx] = 1.0;
                        continue;
                    }
                    let mut count = 0u32;
                    for sx in 0..SUBSAMPLES {
                        for sy in 0..SUBSAMPLES {
                            for sz in 0..SUBSAMPLES {
                                let p = [
                                    lo[0] + (sx as f64 + 0.5) / SUBSAMPLES as f64 * h,
                                    lo[1] + (sy as f64 + 0.5) / SUBSAMPLES as f64 * h,
                                    lo[2] + (sz as f64 + 0.5) / SUBSAMPLES as f64 * h,
                                ];
                                if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= r2 {
                                    count += 1;
                                }
                            }
                        }
                    }
                    cell_weights[idx] =
                        count as f64 / (SUBSAMPLES * SUBSAMPLES * SUBSAMPLES) as f64;
                }
            }
        }

        let nn = n + 1;
        let mut node_class = vec![NodeClass::default(); nn * nn * nn];
        for i in 0..nn {
            for j in 0..nn {
                for k in 0..nn {
                    let mut bits = 0u8;
                    // A node is live when some incident cell touches the open
                    // ball; the lower corner is the cell's closest point.
                    let mut active = false;
                    for &di in &[-1_isize, 0] {
                        for &dj in &[-1_isize, 0] {
                            for &dk in &[-1_isize, 0] {
                                let (ci, cj, ck) = (
                                    i as isize + di,
                                    j as isize + dj,
                                    k as isize + dk,
                                );
                                if ci < 0
                                    || cj < 0
                                    || ck < 0
                                    || ci >= n as isize
                                    || cj >= n as isize
                                    || ck >= n as isize
                                {
                                    continue;
                                }
                                let lo = [ci as f64 * h, cj as f64 * h, ck as f64 * h];
                                if lo[0] * lo[0] + lo[1] * lo[1] + lo[2] * lo[2] < r2 {
                                    active = true;
                                }
                            }
                        }
                    }
                    if !active {
                        bits |= NodeClass::EXTERIOR;
                    } else {
                        if i == 0 {
                            bits |= NodeClass::FACE_X0;
                        }
                        if j == 0 {
                            bits |= NodeClass::FACE_Y0;
                        }
                        if k == 0 {
                            bits |= NodeClass::FACE_Z0;
                        }
                        let p = [i as f64 * h, j as f64 * h, k as f64 * h];
                        if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] >= r2 {
                            bits |= NodeClass::SPHERE;
                        }
                    }
                    node_class[(i * nn + j) * nn + k] = NodeClass(bits);
                }
            }
        }

        Ok(Self {
            r,
            h,
            n,
            dims,
            node_class,
            cell_weights,
        })
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Cells per axis.
    pub fn cells_per_axis(&self) -> usize {
        self.n
    }

    /// Node counts per axis.
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn node_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn cell_count(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn node_point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [i as f64 * self.h, j as f64 * self.h, k as f64 * self.h]
    }

    #[inline]
    pub fn class(&self, i: usize, j: usize, k: usize) -> NodeClass {
        self.node_class[self.node_index(i, j, k)]
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.node_class
    }

    #[inline]
    pub fn cell_weight(&self, i: usize, j: usize, k: usize) -> f64 {
        self.cell_weights[self.cell_index(i, j, k)]
    }

    pub fn cell_weights(&self) -> &[f64] {
        &self.cell_weights
    }

    /// Counts 4³ midpoint subsamples of a cell satisfying `pred`; used for
    /// region clipping in the energy quadrature. Counting the same fixed
    /// sample set makes nested regions exactly additive and monotone.
    pub fn cell_pred_count(
        &self,
        ci: usize,
        cj: usize,
        ck: usize,
        pred: &dyn Fn([f64; 3]) -> bool,
    ) -> u32 {
        let h = self.h;
        let lo = [ci as f64 * h, cj as f64 * h, ck as f64 * h];
        let mut count = 0u32;
        for sx in 0..SUBSAMPLES {
            for sy in 0..SUBSAMPLES {
                for sz in 0..SUBSAMPLES {
                    let p = [
                        lo[0] + (sx as f64 + 0.5) / SUBSAMPLES as f64 * h,
                        lo[1] + (sy as f64 + 0.5) / SUBSAMPLES as f64 * h,
                        lo[2] + (sz as f64 + 0.5) / SUBSAMPLES as f64 * h,
                    ];
                    if pred(p) {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    pub const SUBSAMPLE_TOTAL: u32 = (SUBSAMPLES * SUBSAMPLES * SUBSAMPLES) as u32;

    /// Σ w_c h³ — approximates |Q_R| = πR³/6 to O(h).
    pub fn weighted_octant_volume(&self) -> f64 {
        let h3 = self.h * self.h * self.h;
        numerics::block_sum(self.cell_weights.len(), 1, |c| self.cell_weights[c] * h3)
    }
}

/// Distance from a point to the cross X = x-axis ∪ y-axis.
pub fn dist_to_cross(p: [f64; 3]) -> f64 {
    let to_x_axis = (p[1] * p[1] + p[2] * p[2]).sqrt();
    let to_y_axis = (p[0] * p[0] + p[2] * p[2]).sqrt();
    to_x_axis.min(to_y_axis)
}

/// Geodesic distance from a unit vector to V = {±e₁, ±e₂}; lies in [0, π/2].
pub fn dist_to_vortex_points(theta: [f64; 3]) -> Result<f64> {
    let norm2 = theta[0] * theta[0] + theta[1] * theta[1] + theta[2] * theta[2];
    if (norm2.sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "dist_to_vortex_points needs a unit vector, |θ| = {}",
            norm2.sqrt()
        )));
    }
    let m = theta[0].abs().max(theta[1].abs()).min(1.0);
    Ok(m.acos())
}

/// Complex field sampled on the octant grid. Exterior node values are zero.
#[derive(Debug, Clone)]
pub struct ComplexField {
    geom: Arc<OctantGeometry>,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(geom: Arc<OctantGeometry>) -> Self {
        let n = geom.node_count();
        Self {
            geom,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Builds a field from a per-node function; exterior nodes are forced to 0.
    pub fn from_fn(
        geom: Arc<OctantGeometry>,
        mut f: impl FnMut([f64; 3], NodeClass) -> Complex64,
    ) -> Self {
        let [nx, ny, nz] = geom.dims();
        let mut values = vec![Complex64::new(0.0, 0.0); geom.node_count()];
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let class = geom.class(i, j, k);
                    if class.is_exterior() {
                        continue;
                    }
                    values[geom.node_index(i, j, k)] = f(geom.node_point(i, j, k), class);
                }
            }
        }
        Self { geom, values }
    }

    pub fn geometry(&self) -> &Arc<OctantGeometry> {
        &self.geom
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.values[self.geom.node_index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: Complex64) {
        let idx = self.geom.node_index(i, j, k);
        self.values[idx] = v;
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Checks finiteness at non-exterior nodes and zeros at exterior ones.
    pub fn validate(&self) -> Result<()> {
        for (idx, v) in self.values.iter().enumerate() {
            let class = self.geom.classes()[idx];
            if class.is_exterior() {
                if v.re != 0.0 || v.im != 0.0 {
                    return Err(Error::Geometry(format!(
                        "exterior node {idx} carries nonzero value {v}"
                    )));
                }
            } else if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Geometry(format!(
                    "non-finite value {v} at node {idx}"
                )));
            }
        }
        Ok(())
    }

    pub fn max_modulus(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Field on the full symmetric grid over B_R; node (ii,jj,kk) sits at
/// ((ii-n)h, (jj-n)h, (kk-n)h) for ii,jj,kk in 0..=2n.
#[derive(Debug, Clone)]
pub struct FullField {
    geom: Arc<OctantGeometry>,
    values: Vec<Complex64>,
}

/// Extends an octant field to the full ball by the reflection identities.
/// u₁ flips sign once per x- or y-reflection, u₂ once per z-reflection.
pub fn extend_octant_field(field: &ComplexField) -> FullField {
    let geom = field.geometry().clone();
    let n = geom.cells_per_axis();
    let m = 2 * n + 1;
    let mut values = vec![Complex64::new(0.0, 0.0); m * m * m];
    for ii in 0..m {
        let (i, sx) = fold_index(ii, n);
        for jj in 0..m {
            let (j, sy) = fold_index(jj, n);
            for kk in 0..m {
                let (k, sz) = fold_index(kk, n);
                let v = field.get(i, j, k);
                values[(ii * m + jj) * m + kk] =
                    Complex64::new(sx * sy * v.re, sz * v.im);
            }
        }
    }
    FullField { geom, values }
}

#[inline]
fn fold_index(ii: usize, n: usize) -> (usize, f64) {
    if ii >= n {
        (ii - n, 1.0)
    } else {
        (n - ii, -1.0)
    }
}

impl FullField {
    pub fn geometry(&self) -> &Arc<OctantGeometry> {
        &self.geom
    }

    pub fn nodes_per_axis(&self) -> usize {
        2 * self.geom.cells_per_axis() + 1
    }

    #[inline]
    pub fn get(&self, ii: usize, jj: usize, kk: usize) -> Complex64 {
        let m = self.nodes_per_axis();
        self.values[(ii * m + jj) * m + kk]
    }

    pub fn node_point(&self, ii: usize, jj: usize, kk: usize) -> [f64; 3] {
        let n = self.geom.cells_per_axis() as f64;
        let h = self.geom.spacing();
        [
            (ii as f64 - n) * h,
            (jj as f64 - n) * h,
            (kk as f64 - n) * h,
        ]
    }

    /// Restriction back to the octant grid (the identity on octant data).
    pub fn restrict_to_octant(&self) -> ComplexField {
        let geom = self.geom.clone();
        let n = geom.cells_per_axis();
        let mut out = ComplexField::zeros(geom.clone());
        let [nx, ny, nz] = geom.dims();
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    out.set(i, j, k, self.get(i + n, j + n, k + n));
                }
            }
        }
        out
    }

    /// Trilinear interpolation at an arbitrary point of the full grid cube.
    pub fn sample(&self, p: [f64; 3]) -> Result<Complex64> {
        let n = self.geom.cells_per_axis() as f64;
        let h = self.geom.spacing();
        let m = self.nodes_per_axis();
        let mut idx = [0usize; 3];
        let mut frac = [0f64; 3];
        for a in 0..3 {
            let t = p[a] / h + n;
            if t < 0.0 || t > (m - 1) as f64 {
                return Err(Error::InvalidArgument(format!(
                    "sample point {p:?} outside the grid"
                )));
            }
            let base = t.floor().min((m - 2) as f64);
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
                    if w != 0.0 {
                        acc += w * self.get(idx[0] + di, idx[1] + dj, idx[2] + dk);
                    }
                }
            }
        }
        Ok(acc)
    }
}

/// Measured supremum of d_X(θ)/d_V(θ) over a subdivision-mesh sample of the
/// sphere octant (the constant is never fixed analytically; it is reported).
pub fn cross_vortex_ratio_sup(level: u32) -> f64 {
    let mesh = crate::sphere_mesh::OctantSphereMesh::build(level);
    let mut sup: f64 = 0.0;
    let mut consider = |theta: [f64; 3]| {
        let dv = dist_to_vortex_points(theta).expect("mesh vertices are unit vectors");
        if dv > 1e-9 {
            let ratio = dist_to_cross(theta) / dv;
            if ratio > sup {
                sup = ratio;
            }
        }
    };
    for &v in mesh.vertices() {
        consider(v);
    }
    for t in mesh.triangles() {
        consider(mesh.barycenter(t));
    }
    sup
}
