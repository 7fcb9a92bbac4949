//! Shared numerical kernels: compensated summation, deterministic parallel
//! reductions, small linear solves and least-squares fits.
//!
//! Every reduction in this crate goes through [`KahanSum`] with a fixed
//! association order, so results are bit-identical between runs and between
//! thread counts.

use crate::{Error, Result};

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn sum_iter<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc.value()
    }
}

/// Fixed block length for deterministic reductions. Block boundaries depend
/// only on the index range, never on the thread count.
pub const REDUCTION_BLOCK: usize = 4096;

/// Number of worker threads requested through `GLSADDLE_THREADS` (default 1).
pub fn env_thread_count() -> usize {
    std::env::var("GLSADDLE_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Sums `term(i)` for `i in 0..len` with a fixed reduction tree: per-block
/// compensated sums combined in block order. Bit-identical for any `threads`.
pub fn block_sum<F>(len: usize, threads: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let n_blocks = len.div_ceil(REDUCTION_BLOCK);
    let mut partials = vec![0.0_f64; n_blocks];
    let sum_block = |b: usize| -> f64 {
        let lo = b * REDUCTION_BLOCK;
        let hi = (lo + REDUCTION_BLOCK).min(len);
        let mut acc = KahanSum::new();
        for i in lo..hi {
            acc.add(term(i));
        }
        acc.value()
    };
    if threads <= 1 || n_blocks <= 1 {
        for (b, slot) in partials.iter_mut().enumerate() {
            *slot = sum_block(b);
        }
    } else {
        let workers = threads.min(n_blocks);
        std::thread::scope(|scope| {
            for (w, chunk) in partials.chunks_mut(n_blocks.div_ceil(workers)).enumerate() {
                let sum_block = &sum_block;
                let chunk_len = n_blocks.div_ceil(workers);
                scope.spawn(move || {
                    for (off, slot) in chunk.iter_mut().enumerate() {
                        *slot = sum_block(w * chunk_len + off);
                    }
                });
            }
        });
    }
    let mut total = KahanSum::new();
    for p in partials {
        total.add(p);
    }
    total.value()
}

/// Fills `out[i] = value(i)` in parallel over disjoint slices. No reductions,
/// so the result is trivially independent of the partitioning.
pub fn parallel_fill<T, F>(out: &mut [T], threads: usize, value: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let len = out.len();
    if threads <= 1 || len < 2 * REDUCTION_BLOCK {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = value(i);
        }
        return;
    }
    let chunk = len.div_ceil(threads);
    std::thread::scope(|scope| {
        for (w, slice) in out.chunks_mut(chunk).enumerate() {
            let value = &value;
            scope.spawn(move || {
                for (off, slot) in slice.iter_mut().enumerate() {
                    *slot = value(w * chunk + off);
                }
            });
        }
    });
}

/// Least squares for `y ~ a*phi1(x) + b*phi2(x)` via 2x2 normal equations.
pub fn fit_two_basis(
    xs: &[f64],
    ys: &[f64],
    phi1: impl Fn(f64) -> f64,
    phi2: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    assert_eq!(xs.len(), ys.len());
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (
        KahanSum::new(),
        KahanSum::new(),
        KahanSum::new(),
        KahanSum::new(),
        KahanSum::new(),
    );
    for (&x, &y) in xs.iter().zip(ys) {
        let (p, q) = (phi1(x), phi2(x));
        s11.add(p * p);
        s12.add(p * q);
        s22.add(q * q);
        b1.add(p * y);
        b2.add(q * y);
    }
    let (s11, s12, s22) = (s11.value(), s12.value(), s22.value());
    let det = s11 * s22 - s12 * s12;
    let scale = s11.max(s22).max(1.0);
    // Also rejects NaN determinants.
    if !(det.abs() > 1e-18 * scale * scale) {
        return Err(Error::Numerical(
            "singular normal equations in two-basis fit".into(),
        ));
    }
    let (b1, b2) = (b1.value(), b2.value());
    let a = (s22 * b1 - s12 * b2) / det;
    let b = (s11 * b2 - s12 * b1) / det;
    Ok((a, b))
}

/// Tridiagonal solve (Thomas algorithm). `lower[0]` and `upper[n-1]` unused.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    if diag[0] == 0.0 {
        return Err(Error::Numerical("tridiagonal pivot is zero".into()));
    }
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        if m == 0.0 {
            return Err(Error::Numerical("tridiagonal pivot is zero".into()));
        }
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Sparse symmetric matrix in adjacency-list form for the mesh Laplacian.
pub struct SparseSym {
    pub n: usize,
    pub diag: Vec<f64>,
    pub neighbors: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = self.diag[i] * x[i];
            for &(j, w) in &self.neighbors[i] {
                acc += w * x[j];
            }
            out[i] = acc;
        }
    }

    /// Jacobi-preconditioned conjugate gradient; deterministic, serial.
    pub fn solve_cg(&self, rhs: &[f64], tol: f64, max_iters: usize) -> Result<Vec<f64>> {
        let n = self.n;
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        let minv: Vec<f64> = self
            .diag
            .iter()
            .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        let mut z: Vec<f64> = r.iter().zip(&minv).map(|(ri, mi)| ri * mi).collect();
        let mut p = z.clone();
        let mut rz = KahanSum::sum_iter(r.iter().zip(&z).map(|(a, b)| a * b));
        let rhs_norm = KahanSum::sum_iter(rhs.iter().map(|v| v * v)).sqrt();
        if rhs_norm == 0.0 {
            return Ok(x);
        }
        let mut ap = vec![0.0; n];
        for _ in 0..max_iters {
            self.apply(&p, &mut ap);
            let pap = KahanSum::sum_iter(p.iter().zip(&ap).map(|(a, b)| a * b));
            if pap <= 0.0 {
                return Err(Error::Numerical("CG lost positive definiteness".into()));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rnorm = KahanSum::sum_iter(r.iter().map(|v| v * v)).sqrt();
            if rnorm <= tol * rhs_norm {
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] * minv[i];
            }
            let rz_new = KahanSum::sum_iter(r.iter().zip(&z).map(|(a, b)| a * b));
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::Numerical("CG did not converge".into()))
    }
}
