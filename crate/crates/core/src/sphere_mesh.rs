//! Triangulated mesh of the closed spherical octant with vertices e₁, e₂, e₃:
//! recursive midpoint subdivision of the flat triangle (equivalently the
//! barycentric lattice at resolution n = 2^level) projected to the sphere.
//!
//! Because vertices are central projections of a flat lattice, the gnomonic
//! map onto the plane {x+y+z=1} sends every mesh triangle to a straight
//! lattice triangle, so point location and piecewise-linear interpolation
//! weights are exact closed-form lattice arithmetic.

/// Octant sphere mesh. Lattice coordinates (i, j): i steps toward e₂,
/// j steps toward e₃; vertex direction ∝ (n-i-j, i, j).
#[derive(Debug, Clone)]
pub struct OctantSphereMesh {
    level: u32,
    n: usize,
    vertices: Vec<[f64; 3]>,
    lattice: Vec<(usize, usize)>,
    triangles: Vec<[usize; 3]>,
}

impl OctantSphereMesh {
    pub fn build(level: u32) -> Self {
        let n = 1usize << level;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 2) / 2);
        let mut lattice = Vec::with_capacity(vertices.capacity());
        for i in 0..=n {
            for j in 0..=(n - i) {
                let a = (n - i - j) as f64;
                let b = i as f64;
                let c = j as f64;
                let norm = (a * a + b * b + c * c).sqrt();
                vertices.push([a / norm, b / norm, c / norm]);
                lattice.push((i, j));
            }
        }
        let mut triangles = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..(n - i) {
                let v00 = Self::index_of(n, i, j);
                let v10 = Self::index_of(n, i + 1, j);
                let v01 = Self::index_of(n, i, j + 1);
                triangles.push([v00, v10, v01]);
                if i + j <= n - 2 {
                    let v11 = Self::index_of(n, i + 1, j + 1);
                    triangles.push([v10, v11, v01]);
                }
            }
        }
        Self {
            level,
            n,
            vertices,
            lattice,
            triangles,
        }
    }

    fn index_of(n: usize, i: usize, j: usize) -> usize {
        // Row i holds n+1-i vertices; rows 0..i hold Σ (n+1-i') entries.
        i * (n + 1) - i * i.saturating_sub(1) / 2 + j
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Lattice resolution n = 2^level.
    pub fn lattice_n(&self) -> usize {
        self.n
    }

    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        Self::index_of(self.n, i, j)
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn lattice_coords(&self, id: usize) -> (usize, usize) {
        self.lattice[id]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// On the arc {z=0} between e₁ and e₂.
    pub fn on_edge_z0(&self, id: usize) -> bool {
        self.lattice[id].1 == 0
    }

    /// On the arc {y=0} between e₁ and e₃.
    pub fn on_edge_y0(&self, id: usize) -> bool {
        self.lattice[id].0 == 0
    }

    /// On the arc {x=0} between e₂ and e₃.
    pub fn on_edge_x0(&self, id: usize) -> bool {
        let (i, j) = self.lattice[id];
        i + j == self.n
    }

    pub fn barycenter(&self, tri: &[usize; 3]) -> [f64; 3] {
        let mut p = [0.0; 3];
        for &v in tri {
            for a in 0..3 {
                p[a] += self.vertices[v][a];
            }
        }
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        [p[0] / norm, p[1] / norm, p[2] / norm]
    }

    /// Locates the mesh triangle containing a direction in the closed octant
    /// and returns (triangle index, PL interpolation weights of its vertices).
    /// Weights are the gnomonic barycentric coordinates; points exactly on a
    /// boundary arc receive exact zero weight for the opposite vertex.
    pub fn locate(&self, theta: [f64; 3]) -> (usize, [f64; 3]) {
        let n = self.n;
        let sum = theta[0] + theta[1] + theta[2];
        debug_assert!(sum > 0.0, "locate needs a direction in the closed octant");
        // Scaled gnomonic barycentric coordinates (a toward e₁, u toward e₂,
        // v toward e₃); each is exactly zero on its opposite boundary arc.
        let a = (n as f64 * theta[0] / sum).clamp(0.0, n as f64);
        let u = (n as f64 * theta[1] / sum).clamp(0.0, n as f64);
        let v = (n as f64 * theta[2] / sum).clamp(0.0, n as f64);
        let mut i0 = (u.floor() as usize).min(n - 1);
        let mut j0 = (v.floor() as usize).min(n - 1);
        if i0 + j0 > n - 1 {
            // Floating-point spill past the hypotenuse row.
            let over = i0 + j0 - (n - 1);
            let take = over.min(j0);
            j0 -= take;
            i0 -= over - take;
        }
        let fu = u - i0 as f64;
        let fv = v - j0 as f64;
        let up_index = |i: usize, j: usize| -> usize {
            // Triangles are emitted row-major: row i contributes
            // 2(n-i)-1 triangles; within a row, column j contributes the up
            // triangle at position 2j (down at 2j+1).
            let mut base = 0usize;
            for r in 0..i {
                base += 2 * (n - r) - 1;
            }
            base + 2 * j
        };
        if fu + fv <= 1.0 {
            let t = up_index(i0, j0);
            // The e₁-side weight from the a-coordinate directly: exact zero
            // for points on the hypotenuse arc {x=0}.
            let w0 = a - (n - 1 - i0 - j0) as f64;
            (t, clamp_weights([w0, fu, fv]))
        } else if i0 + j0 <= n - 2 {
            let t = up_index(i0, j0) + 1;
            (t, clamp_weights([1.0 - fv, fu + fv - 1.0, 1.0 - fu]))
        } else {
            // fp spill just outside the hypotenuse: project onto it.
            let t = up_index(i0, j0);
            let s = fu + fv;
            (t, clamp_weights([0.0, fu / s, fv / s]))
        }
    }

    /// Area of a mesh triangle as a spherical (geodesic) triangle.
    pub fn spherical_area(&self, tri: &[usize; 3]) -> f64 {
        let a = angle(self.vertices[tri[1]], self.vertices[tri[2]]);
        let b = angle(self.vertices[tri[0]], self.vertices[tri[2]]);
        let c = angle(self.vertices[tri[0]], self.vertices[tri[1]]);
        let s = 0.5 * (a + b + c);
        let t = ((0.5 * s).tan()
            * (0.5 * (s - a)).tan()
            * (0.5 * (s - b)).tan()
            * (0.5 * (s - c)).tan())
        .max(0.0);
        4.0 * t.sqrt().atan()
    }

    /// Flat (embedded chord) area of a mesh triangle.
    pub fn flat_area(&self, tri: &[usize; 3]) -> f64 {
        let p0 = self.vertices[tri[0]];
        let p1 = self.vertices[tri[1]];
        let p2 = self.vertices[tri[2]];
        let e1 = sub(p1, p0);
        let e2 = sub(p2, p0);
        0.5 * norm(cross(e1, e2))
    }
}

fn clamp_weights(mut w: [f64; 3]) -> [f64; 3] {
    let mut total = 0.0;
    for wi in &mut w {
        if *wi < 0.0 {
            *wi = 0.0;
        }
        total += *wi;
    }
    for wi in &mut w {
        *wi /= total;
    }
    w
}

fn angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_subdivision_arithmetic() {
        for level in 1..=5 {
            let mesh = OctantSphereMesh::build(level);
            let n = 1usize << level;
            assert_eq!(mesh.vertices().len(), (n + 1) * (n + 2) / 2);
            assert_eq!(mesh.triangles().len(), n * n);
        }
    }

    #[test]
    fn total_area_is_one_eighth_of_the_sphere() {
        let mesh = OctantSphereMesh::build(6);
        let total: f64 = mesh
            .triangles()
            .iter()
            .map(|t| mesh.spherical_area(t))
            .sum();
        let expected = 4.0 * std::f64::consts::PI / 8.0;
        assert!((total - expected).abs() < 1e-9, "total = {total}");
    }

    #[test]
    fn locate_reproduces_vertices_and_interior_points() {
        let mesh = OctantSphereMesh::build(4);
        for (id, &v) in mesh.vertices().iter().enumerate() {
            let (t, w) = mesh.locate(v);
            let tri = mesh.triangles()[t];
            let mut p = [0.0; 3];
            for c in 0..3 {
                for a in 0..3 {
                    p[a] += w[c] * mesh.vertices()[tri[c]][a];
                }
            }
            let p = normalize(p);
            for a in 0..3 {
                assert!(
                    (p[a] - v[a]).abs() < 1e-12,
                    "vertex {id} not reproduced by locate"
                );
            }
        }
        // A strictly interior direction interpolates to itself after projection.
        let theta = normalize([0.3, 0.5, 0.81]);
        let (t, w) = mesh.locate(theta);
        let tri = mesh.triangles()[t];
        let mut p = [0.0; 3];
        for c in 0..3 {
            for a in 0..3 {
                p[a] += w[c] * mesh.vertices()[tri[c]][a];
            }
        }
        let p = normalize(p);
        let err: f64 = (0..3).map(|a| (p[a] - theta[a]).abs()).sum();
        assert!(err < 1e-2);
    }

    #[test]
    fn boundary_points_get_exact_zero_opposite_weight() {
        let mesh = OctantSphereMesh::build(4);
        // Point on the {x=0} arc between e₂ and e₃.
        let theta = normalize([0.0, 0.7, 0.3]);
        let (t, w) = mesh.locate(theta);
        let tri = mesh.triangles()[t];
        for c in 0..3 {
            if !mesh.on_edge_x0(tri[c]) {
                assert_eq!(w[c], 0.0);
            }
        }
    }

    #[test]
    fn triangles_are_outward_oriented() {
        let mesh = OctantSphereMesh::build(3);
        for tri in mesh.triangles() {
            let p0 = mesh.vertices()[tri[0]];
            let e1 = sub(mesh.vertices()[tri[1]], p0);
            let e2 = sub(mesh.vertices()[tri[2]], p0);
            assert!(dot(cross(e1, e2), p0) > 0.0);
        }
    }
}
