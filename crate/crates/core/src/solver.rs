//! Minimization of the discrete Ginzburg-Landau energy over octant fields
//! with the mixed boundary conditions u₁ = 0, ∂_ν u₂ = 0 on {x=0} and
//! {y=0}; u₂ = 0, ∂_ν u₁ = 0 on {z=0}; u = g_R on the sphere — the
//! unconstrained form of minimizing in the symmetry class.
//! Descent acts on the free node components only; the Dirichlet sphere values
//! and the constrained face components stay frozen, so the Neumann conditions
//! are natural conditions of the discrete energy. Every `truncate_every`
//! iterations the iterate is passed through the energy-decreasing pointwise
//! projection w ↦ (|w₁| + i|w₂|)·min{1, 1/|w|}, whose two factors are the
//! component rectification and unit-disk truncation of the minimizing-sequence
//! normalization; neither factor can increase the discrete energy, and the
//! final iterate is projected, so the output satisfies |u| ≤ 1 and
//! u₁, u₂ ≥ 0 exactly.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;

use crate::boundary::{eval_g_r, BoundaryDatum};
use crate::energy::{
    discrete_energy, energy_gradient, EnergyConfig, Region,
};
use crate::geometry::{ComplexField, OctantGeometry};
use crate::numerics::KahanSum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    GradientDescent,
    NonlinearConjugateGradient,
    LimitedMemoryQuasiNewton,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" | "gradient-descent" | "gradient-descent-with-line-search" => {
                Ok(Self::GradientDescent)
            }
            "ncg" | "nonlinear-conjugate-gradient" => Ok(Self::NonlinearConjugateGradient),
            "lbfgs" | "limited-memory-quasi-newton" => Ok(Self::LimitedMemoryQuasiNewton),
            other => Err(Error::InvalidArgument(format!(
                "unknown optimizer '{other}' (expected gd, ncg or lbfgs)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum InitMode {
    /// Sample the competitor map v₁ = min{d_X, 1}·g(x/|x|).
    Competitor,
    /// Random free values; probes non-uniqueness of the minimizer.
    Random { amplitude: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct SolveConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub energy_tol: f64,
    pub truncate_every: usize,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub epsilon: f64,
    pub init: InitMode,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-3,
            energy_tol: 1e-13,
            truncate_every: 10,
            optimizer: Optimizer::LimitedMemoryQuasiNewton,
            seed: 0,
            epsilon: 1.0,
            init: InitMode::Competitor,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(self.grad_tol > 0.0 && self.energy_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.truncate_every == 0 {
            return Err(Error::InvalidArgument(
                "truncate_every must be >= 1".into(),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum TerminationReason {
    GradientConverged,
    EnergyStalled,
    MaxIterations,
    LineSearchFailure,
}

#[derive(Debug, Clone)]
pub struct IterationRow {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step_len: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub trace: Vec<IterationRow>,
    pub final_energy: f64,
    pub final_residual: f64,
    pub termination: TerminationReason,
    pub wall_seconds: f64,
    pub max_interior_modulus: f64,
    /// Componentwise minima over all octant nodes (faces included).
    pub min_octant_re: f64,
    pub min_octant_im: f64,
    /// Componentwise minima over interior nodes only. Strict positivity holds
    /// in the continuum; the discrete analogue is reported, not asserted.
    pub min_interior_re: f64,
    pub min_interior_im: f64,
}

/// Frozen boundary data for one geometry/datum pair: the Dirichlet values at
/// sphere nodes plus the face component masks.
pub struct BoundaryConditions {
    geom: Arc<OctantGeometry>,
    dirichlet: Vec<(usize, Complex64)>,
}

impl BoundaryConditions {
    pub fn build(geom: Arc<OctantGeometry>, datum: &BoundaryDatum) -> Self {
        let [nx, ny, nz] = geom.dims();
        let r = geom.radius();
        let mut dirichlet = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let class = geom.class(i, j, k);
                    if class.is_sphere() {
                        let p = geom.node_point(i, j, k);
                        dirichlet.push((geom.node_index(i, j, k), eval_g_r(datum, p, r)));
                    }
                }
            }
        }
        Self { geom, dirichlet }
    }

    pub fn geometry(&self) -> &Arc<OctantGeometry> {
        &self.geom
    }

    /// Applies the mixed conditions: u₁ = 0 on {x=0}∪{y=0}, u₂ = 0 on {z=0},
    /// g_R at sphere nodes (Dirichlet takes precedence), 0 at exterior nodes.
    /// Neumann components are natural: the free component is untouched, and
    /// gradient stencils see it through even ghost reflection. Idempotent.
    pub fn enforce(&self, f: &mut ComplexField) {
        let classes = self.geom.classes();
        for (idx, v) in f.values_mut().iter_mut().enumerate() {
            let class = classes[idx];
            if class.is_exterior() {
                *v = Complex64::new(0.0, 0.0);
                continue;
            }
            if class.is_sphere() {
                continue; // reinstated below
            }
            if class.on_face_x0() || class.on_face_y0() {
                v.re = 0.0;
            }
            if class.on_face_z0() {
                v.im = 0.0;
            }
        }
        for &(idx, value) in &self.dirichlet {
            f.values_mut()[idx] = value;
        }
    }

    pub fn is_enforced(&self, f: &ComplexField) -> bool {
        let mut copy = f.clone();
        self.enforce(&mut copy);
        f.values()
            .iter()
            .zip(copy.values())
            .all(|(a, b)| a.re == b.re && a.im == b.im)
    }
}

/// Initial field: the competitor map v₁ sampled at the nodes, with the face
/// conditions enforced exactly and g_R at the sphere nodes.
pub fn initialize(
    geom: &Arc<OctantGeometry>,
    datum: &BoundaryDatum,
    bcs: &BoundaryConditions,
) -> Result<ComplexField> {
    if !Arc::ptr_eq(geom, bcs.geometry()) {
        return Err(Error::InvalidArgument(
            "boundary conditions were built for a different geometry".into(),
        ));
    }
    let r = geom.radius();
    let mut f = ComplexField::from_fn(geom.clone(), |p, _| eval_g_r(datum, p, r));
    bcs.enforce(&mut f);
    Ok(f)
}

/// Pointwise unit-disk truncation z ↦ z·min{1, 1/|z|}. The projection is
/// 1-Lipschitz and lowers the potential, so the discrete energy never
/// increases.
pub fn truncate_unit_disk(f: &ComplexField) -> ComplexField {
    let mut out = f.clone();
    for v in out.values_mut() {
        let n = v.norm();
        if n > 1.0 {
            *v /= n;
        }
    }
    out
}

/// The full minimizing-sequence normalization: component rectification
/// w ↦ |w₁| + i|w₂| followed by the unit-disk truncation. Leaves the face
/// and Dirichlet values of an admissible field unchanged.
pub fn rectify_and_truncate(f: &ComplexField) -> ComplexField {
    let mut out = f.clone();
    for v in out.values_mut() {
        let mut w = Complex64::new(v.re.abs(), v.im.abs());
        let n = w.norm();
        if n > 1.0 {
            w /= n;
        }
        *v = w;
    }
    out
}

struct DofMap {
    /// (node index, component) per degree of freedom; component 0 = re.
    entries: Vec<(u32, u8)>,
}

impl DofMap {
    fn build(geom: &OctantGeometry) -> Self {
        let mut entries = Vec::new();
        for (idx, &class) in geom.classes().iter().enumerate() {
            if class.is_exterior() || class.is_sphere() {
                continue;
            }
            if !(class.on_face_x0() || class.on_face_y0()) {
                entries.push((idx as u32, 0u8));
            }
            if !class.on_face_z0() {
                entries.push((idx as u32, 1u8));
            }
        }
        Self { entries }
    }

    fn gather(&self, f: &ComplexField, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.entries.iter().map(|&(idx, comp)| {
            let v = f.values()[idx as usize];
            if comp == 0 {
                v.re
            } else {
                v.im
            }
        }));
    }

    fn scatter(&self, x: &[f64], f: &mut ComplexField) {
        for (&(idx, comp), &value) in self.entries.iter().zip(x) {
            let v = &mut f.values_mut()[idx as usize];
            if comp == 0 {
                v.re = value;
            } else {
                v.im = value;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    KahanSum::sum_iter(a.iter().zip(b).map(|(x, y)| x * y))
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Objective<'a> {
    dofs: &'a DofMap,
    field: ComplexField,
    cfg: EnergyConfig,
    evals: usize,
}

impl Objective<'_> {
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.dofs.scatter(x, &mut self.field);
        let e = discrete_energy(&self.field, &self.cfg)?;
        if !e.is_finite() {
            return Err(Error::Solver(format!(
                "non-finite energy {e} during minimization"
            )));
        }
        let grad_field = energy_gradient(&self.field, &self.cfg)?;
        let mut g = Vec::new();
        self.dofs.gather(&grad_field, &mut g);
        self.evals += 1;
        Ok((e, g))
    }
}

struct LineSearchResult {
    alpha: f64,
    x: Vec<f64>,
    energy: f64,
    grad: Vec<f64>,
}

/// Strong-Wolfe line search (bracket + zoom with bisection), c1 = 1e-4.
fn strong_wolfe(
    obj: &mut Objective,
    x0: &[f64],
    e0: f64,
    g0: &[f64],
    dir: &[f64],
    alpha_init: f64,
    c2: f64,
) -> Result<Option<LineSearchResult>> {
    const C1: f64 = 1e-4;
    let slope0 = dot(g0, dir);
    if slope0 >= 0.0 {
        return Ok(None);
    }
    let probe = |obj: &mut Objective, alpha: f64| -> Result<(Vec<f64>, f64, Vec<f64>, f64)> {
        let x: Vec<f64> = x0.iter().zip(dir).map(|(xi, di)| xi + alpha * di).collect();
        let (e, g) = obj.eval(&x)?;
        let slope = dot(&g, dir);
        Ok((x, e, g, slope))
    };

    let mut alpha_prev = 0.0;
    let mut e_prev = e0;
    let mut alpha = alpha_init;
    let mut bracket = None;
    for i in 0..20 {
        let (x, e, g, slope) = probe(obj, alpha)?;
        if e > e0 + C1 * alpha * slope0 || (i > 0 && e >= e_prev) {
            bracket = Some((alpha_prev, e_prev, alpha, e));
            break;
        }
        if slope.abs() <= -c2 * slope0 {
            return Ok(Some(LineSearchResult {
                alpha,
                x,
                energy: e,
                grad: g,
            }));
        }
        if slope >= 0.0 {
            bracket = Some((alpha, e, alpha_prev, e_prev));
            break;
        }
        alpha_prev = alpha;
        e_prev = e;
        alpha *= 2.0;
    }
    let (mut lo, mut e_lo, mut hi, mut _e_hi) = match bracket {
        Some(b) => b,
        None => return Ok(None),
    };
    for _ in 0..30 {
        let alpha = 0.5 * (lo + hi);
        let (x, e, g, slope) = probe(obj, alpha)?;
        if e > e0 + C1 * alpha * slope0 || e >= e_lo {
            hi = alpha;
            _e_hi = e;
        } else {
            if slope.abs() <= -c2 * slope0 {
                return Ok(Some(LineSearchResult {
                    alpha,
                    x,
                    energy: e,
                    grad: g,
                }));
            }
            if slope * (hi - lo) >= 0.0 {
                hi = lo;
            }
            lo = alpha;
            e_lo = e;
        }
        if (hi - lo).abs() <= 1e-16 * lo.abs().max(1.0) {
            break;
        }
    }
    // Accept a plain Armijo point if the curvature condition is unreachable.
    if e_lo < e0 && lo > 0.0 {
        let (x, e, g, _) = probe(obj, lo)?;
        if e < e0 {
            return Ok(Some(LineSearchResult {
                alpha: lo,
                x,
                energy: e,
                grad: g,
            }));
        }
    }
    Ok(None)
}

/// Minimizes the discrete energy over the free components of `f0`.
pub fn minimize(
    f0: &ComplexField,
    cfg: &SolveConfig,
    bcs: &BoundaryConditions,
) -> Result<(ComplexField, SolveReport)> {
    cfg.validate()?;
    if !bcs.is_enforced(f0) {
        return Err(Error::Solver(
            "initial field does not satisfy the boundary conditions".into(),
        ));
    }
    let start = Instant::now();
    let geom = f0.geometry().clone();
    let dofs = DofMap::build(&geom);
    let energy_cfg = EnergyConfig {
        epsilon: cfg.epsilon,
        region: Region::Octant,
    };

    let mut base = f0.clone();
    bcs.enforce(&mut base);
    let mut obj = Objective {
        dofs: &dofs,
        field: base,
        cfg: energy_cfg,
        evals: 0,
    };
    let mut x = Vec::new();
    dofs.gather(&obj.field, &mut x);
    let (mut energy, mut grad) = obj.eval(&x)?;
    let g0_norm = norm2(&grad).max(f64::MIN_POSITIVE);

    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    trace.push(IterationRow {
        iter: 0,
        energy,
        grad_norm: norm2(&grad),
        step_len: 0.0,
    });

    // L-BFGS memory.
    let memory = 10usize;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();
    let mut prev_grad: Option<Vec<f64>> = None;
    let mut prev_dir: Option<Vec<f64>> = None;
    let mut stalled = 0usize;
    let mut termination = TerminationReason::MaxIterations;
    let mut iterations = 0usize;

    for iter in 1..=cfg.max_iters {
        iterations = iter;
        let gnorm = norm2(&grad);
        if gnorm <= cfg.grad_tol * g0_norm {
            termination = TerminationReason::GradientConverged;
            iterations = iter - 1;
            break;
        }

        // Search direction.
        let mut dir: Vec<f64> = match cfg.optimizer {
            Optimizer::GradientDescent => grad.iter().map(|g| -g).collect(),
            Optimizer::NonlinearConjugateGradient => {
                let mut d: Vec<f64> = grad.iter().map(|g| -g).collect();
                if let (Some(pg), Some(pd)) = (&prev_grad, &prev_dir) {
                    let denom = dot(pg, pg);
                    if denom > 0.0 {
                        let beta = (dot(&grad, &grad) - dot(&grad, pg)) / denom;
                        let beta = beta.max(0.0); // Polak-Ribière+
                        for (di, pdi) in d.iter_mut().zip(pd) {
                            *di += beta * pdi;
                        }
                    }
                }
                d
            }
            Optimizer::LimitedMemoryQuasiNewton => {
                let mut q = grad.clone();
                let k = s_hist.len();
                let mut alphas = vec![0.0; k];
                for i in (0..k).rev() {
                    let a = rho_hist[i] * dot(&s_hist[i], &q);
                    alphas[i] = a;
                    for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
                        *qj -= a * yj;
                    }
                }
                if k > 0 {
                    let gamma = dot(&s_hist[k - 1], &y_hist[k - 1])
                        / dot(&y_hist[k - 1], &y_hist[k - 1]);
                    for qj in q.iter_mut() {
                        *qj *= gamma;
                    }
                }
                for i in 0..k {
                    let b = rho_hist[i] * dot(&y_hist[i], &q);
                    for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
                        *qj += (alphas[i] - b) * sj;
                    }
                }
                q.iter().map(|v| -v).collect()
            }
        };
        if dot(&dir, &grad) >= 0.0 {
            // Not a descent direction: restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = grad.iter().map(|g| -g).collect();
        }

        let alpha_init = match cfg.optimizer {
            Optimizer::LimitedMemoryQuasiNewton if !s_hist.is_empty() => 1.0,
            _ => {
                let dn = norm2(&dir);
                if dn > 0.0 {
                    (1.0 / dn).min(1.0)
                } else {
                    1.0
                }
            }
        };
        let c2 = match cfg.optimizer {
            Optimizer::NonlinearConjugateGradient => 0.45,
            _ => 0.9,
        };
        let mut step = strong_wolfe(&mut obj, &x, energy, &grad, &dir, alpha_init, c2)?;
        if step.is_none() && cfg.optimizer != Optimizer::GradientDescent {
            // Fall back to plain gradient descent for this iteration.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            let sd: Vec<f64> = grad.iter().map(|g| -g).collect();
            let a0 = 1.0 / norm2(&sd).max(1.0);
            step = strong_wolfe(&mut obj, &x, energy, &grad, &sd, a0, 0.9)?;
        }
        let Some(step) = step else {
            termination = TerminationReason::LineSearchFailure;
            break;
        };

        let decrease = energy - step.energy;
        debug_assert!(decrease >= -1e-12 * energy.abs().max(1.0));

        // Update optimizer memory.
        if matches!(cfg.optimizer, Optimizer::LimitedMemoryQuasiNewton) {
            let s: Vec<f64> = step.x.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = step.grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-10 * norm2(&s) * norm2(&y) {
                s_hist.push(s);
                y_hist.push(y);
                rho_hist.push(1.0 / sy);
                if s_hist.len() > memory {
                    s_hist.remove(0);
                    y_hist.remove(0);
                    rho_hist.remove(0);
                }
            }
        }
        prev_grad = Some(grad.clone());
        prev_dir = Some(dir);
        x = step.x;
        energy = step.energy;
        grad = step.grad;

        // Periodic energy-decreasing projection onto the admissible cone.
        if iter % cfg.truncate_every == 0 {
            obj.dofs.scatter(&x, &mut obj.field);
            let mut projected = rectify_and_truncate(&obj.field);
            // Unit-modulus Dirichlet values can move by one ulp under the
            // disk projection; restore them exactly.
            bcs.enforce(&mut projected);
            let changed = projected
                .values()
                .iter()
                .zip(obj.field.values())
                .any(|(a, b)| a.re != b.re || a.im != b.im);
            if changed {
                obj.field = projected;
                dofs.gather(&obj.field, &mut x);
                let (e_new, g_new) = obj.eval(&x)?;
                debug_assert!(e_new <= energy * (1.0 + 1e-12) + 1e-12);
                energy = e_new;
                grad = g_new;
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                prev_grad = None;
                prev_dir = None;
            }
        }

        trace.push(IterationRow {
            iter,
            energy,
            grad_norm: norm2(&grad),
            step_len: step.alpha,
        });
        debug_assert!(bcs.is_enforced(&{
            obj.dofs.scatter(&x, &mut obj.field);
            obj.field.clone()
        }));

        if decrease <= cfg.energy_tol * energy.abs().max(1.0) {
            stalled += 1;
            if stalled >= 2 {
                termination = TerminationReason::EnergyStalled;
                break;
            }
        } else {
            stalled = 0;
        }
    }

    // Final projection keeps |u| ≤ 1 and u₁, u₂ ≥ 0 exactly.
    obj.dofs.scatter(&x, &mut obj.field);
    let mut out = rectify_and_truncate(&obj.field);
    bcs.enforce(&mut out);
    let final_energy = discrete_energy(&out, &energy_cfg)?;
    let final_residual = el_residual(&out, cfg.epsilon);

    let geom_ref = out.geometry().clone();
    let mut max_interior: f64 = 0.0;
    let mut min_re = f64::INFINITY;
    let mut min_im = f64::INFINITY;
    let mut min_int_re = f64::INFINITY;
    let mut min_int_im = f64::INFINITY;
    for (idx, v) in out.values().iter().enumerate() {
        let class = geom_ref.classes()[idx];
        if class.is_exterior() {
            continue;
        }
        min_re = min_re.min(v.re);
        min_im = min_im.min(v.im);
        if class.is_interior() {
            max_interior = max_interior.max(v.norm());
            min_int_re = min_int_re.min(v.re);
            min_int_im = min_int_im.min(v.im);
        }
    }

    let report = SolveReport {
        iterations,
        final_energy,
        final_residual,
        termination,
        wall_seconds: start.elapsed().as_secs_f64(),
        max_interior_modulus: max_interior,
        min_octant_re: min_re,
        min_octant_im: min_im,
        min_interior_re: min_int_re,
        min_interior_im: min_int_im,
        trace,
    };
    Ok((out, report))
}

/// Full solve: initialize from the competitor (or random values) and minimize.
pub fn solve(
    geom: &Arc<OctantGeometry>,
    datum: &BoundaryDatum,
    cfg: &SolveConfig,
) -> Result<(ComplexField, SolveReport)> {
    let bcs = BoundaryConditions::build(geom.clone(), datum);
    let f0 = match cfg.init {
        InitMode::Competitor => initialize(geom, datum, &bcs)?,
        InitMode::Random { amplitude } => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut f = ComplexField::from_fn(geom.clone(), |_, _| {
                Complex64::new(
                    rng.gen_range(-amplitude..amplitude),
                    rng.gen_range(-amplitude..amplitude),
                )
            });
            bcs.enforce(&mut f);
            f
        }
    };
    minimize(&f0, cfg, &bcs)
}

/// Relative RMS Euler–Lagrange residual Δu + u(1−|u|²)/ε² of the 7-point
/// Laplacian, normalized by (1 + max|u|)/h². Measured over the interior nodes
/// where the discrete energy's criticality condition is the 7-point equation,
/// i.e. all eight incident cells carry weight one; at staircase nodes next to
/// the spherical boundary the weighted stencil and the plain Laplacian differ
/// at O(1) regardless of convergence.
pub fn el_residual(f: &ComplexField, epsilon: f64) -> f64 {
    let geom = f.geometry();
    let n = geom.cells_per_axis();
    let [nx, ny, nz] = geom.dims();
    let h2 = geom.spacing() * geom.spacing();
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    let mut sum = KahanSum::new();
    let mut count = 0usize;
    let mut max_mod: f64 = 0.0;
    for (idx, v) in f.values().iter().enumerate() {
        if !geom.classes()[idx].is_exterior() {
            max_mod = max_mod.max(v.norm());
        }
    }
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            for k in 1..nz - 1 {
                if !geom.class(i, j, k).is_interior() {
                    continue;
                }
                let mut consistent = true;
                'cells: for di in 0..2usize {
                    for dj in 0..2usize {
                        for dk in 0..2usize {
                            let (ci, cj, ck) = (i + di - 1, j + dj - 1, k + dk - 1);
                            if ci >= n || cj >= n || ck >= n
                                || geom.cell_weight(ci, cj, ck) != 1.0
                            {
                                consistent = false;
                                break 'cells;
                            }
                        }
                    }
                }
                if !consistent {
                    continue;
                }
                let u = f.get(i, j, k);
                let lap = (f.get(i + 1, j, k)
                    + f.get(i - 1, j, k)
                    + f.get(i, j + 1, k)
                    + f.get(i, j - 1, k)
                    + f.get(i, j, k + 1)
                    + f.get(i, j, k - 1)
                    - 6.0 * u)
                    / h2;
                let res = lap + u * (1.0 - u.norm_sqr()) * inv_eps2;
                sum.add(res.norm_sqr());
                count += 1;
            }
        }
    }
    if count == 0 {
        return 0.0;
    }
    let rms = (sum.value() / count as f64).sqrt();
    rms * h2 / (1.0 + max_mod)
}
