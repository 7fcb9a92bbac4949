//! Post-processing diagnostics: zero-set extraction against the cross X,
//! winding numbers on axis-orthogonal circles, energy-growth fitting,
//! the clearing-out diagnostic, blow-down concentration reports, and an
//! executable checker for the growth-reabsorbing iteration: from
//! f(r) ≤ A·r·log r + B·√r·√f(λr) and the a-priori bound f ≤ K·r³ it
//! follows that f(r) ≤ A·r·log r + r(log r)^{2/3} + B²λ²·r for r > r₁.
//!
//! Degrees on general loops reduce to linking numbers with the two bent
//! lines of the vorticity; only axis-orthogonal circles are computed here.

use std::f64::consts::{E, PI};

use num_complex::Complex64;

use crate::energy::{discrete_energy, EnergyConfig, EnergyProfile, Region};
use crate::geometry::{dist_to_cross, ComplexField, FullField};
use crate::{Error, Result};

/// Low-modulus node set and its one-sided Hausdorff distance to X.
#[derive(Debug, Clone)]
pub struct ZeroSet {
    pub points: Vec<[f64; 3]>,
    pub hausdorff: f64,
    pub empty: bool,
}

/// Octant nodes with |u| below the threshold, each measured against X.
/// Moduli are invariant under the symmetry extension, so the octant set
/// represents its eight reflected copies and the Hausdorff value is that of
/// the extended field.
pub fn extract_zero_set(f: &ComplexField, threshold: f64) -> Result<ZeroSet> {
    if !(threshold > 0.0 && threshold <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "zero-set threshold must lie in (0, 1/2], got {threshold}"
        )));
    }
    let geom = f.geometry();
    let [nx, ny, nz] = geom.dims();
    let mut points = Vec::new();
    let mut sup: f64 = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                if geom.class(i, j, k).is_exterior() {
                    continue;
                }
                if f.get(i, j, k).norm() < threshold {
                    let p = geom.node_point(i, j, k);
                    sup = sup.max(dist_to_cross(p));
                    points.push(p);
                }
            }
        }
    }
    let empty = points.is_empty();
    Ok(ZeroSet {
        points,
        hausdorff: if empty { 0.0 } else { sup },
        empty,
    })
}

/// The other side of the zero-set comparison: max interpolated |u| over
/// sampled points of X ∩ B_{R−margin} (both half-axes of the octant).
pub fn cross_max_modulus(f: &ComplexField, margin: f64) -> Result<f64> {
    let geom = f.geometry();
    let (r, h) = (geom.radius(), geom.spacing());
    let t_max = r - margin;
    if t_max <= 0.0 {
        return Err(Error::InvalidArgument("margin exceeds the radius".into()));
    }
    let steps = (2.0 * t_max / h).ceil() as usize;
    let mut sup: f64 = 0.0;
    for s in 0..=steps {
        let t = t_max * s as f64 / steps as f64;
        for p in [[t, 0.0, 0.0], [0.0, t, 0.0]] {
            let v = crate::competitors::sample_octant(f, p)?;
            sup = sup.max(v.norm());
        }
    }
    Ok(sup)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum LoopAxis {
    X,
    Y,
}

/// Circle orthogonal to a coordinate axis, oriented by the right-hand rule
/// around the positive axis direction.
#[derive(Debug, Clone, Copy)]
pub struct LoopSpec {
    pub center: [f64; 3],
    pub radius: f64,
    pub axis: LoopAxis,
    pub samples: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DegreeResult {
    pub center: [f64; 3],
    pub radius: f64,
    pub axis: LoopAxis,
    pub samples: usize,
    pub winding: i64,
    pub residual: f64,
    pub min_modulus: f64,
}

/// Winding of a closed sample sequence: wrapped phase increments over 2π.
pub fn winding_from_samples(values: &[Complex64]) -> (i64, f64) {
    let mut total = 0.0;
    for k in 0..values.len() {
        let prev = values[k];
        let next = values[(k + 1) % values.len()];
        total += (next * prev.conj()).arg();
    }
    let turns = total / (2.0 * PI);
    let winding = turns.round();
    ((winding as i64), (turns - winding).abs())
}

pub fn winding_number(full: &FullField, spec: &LoopSpec) -> Result<DegreeResult> {
    if spec.samples < 64 {
        return Err(Error::InvalidArgument(format!(
            "winding needs at least 64 samples, got {}",
            spec.samples
        )));
    }
    let mut values = Vec::with_capacity(spec.samples);
    let mut min_modulus = f64::INFINITY;
    for s in 0..spec.samples {
        let t = 2.0 * PI * s as f64 / spec.samples as f64;
        let p = match spec.axis {
            // e_y × e_z = e_x and e_z × e_x = e_y fix the orientation.
            LoopAxis::X => [
                spec.center[0],
                spec.center[1] + spec.radius * t.cos(),
                spec.center[2] + spec.radius * t.sin(),
            ],
            LoopAxis::Y => [
                spec.center[0] + spec.radius * t.sin(),
                spec.center[1],
                spec.center[2] + spec.radius * t.cos(),
            ],
        };
        let v = full.sample(p)?;
        min_modulus = min_modulus.min(v.norm());
        values.push(v);
    }
    if min_modulus <= 0.1 {
        return Err(Error::UnderResolved(format!(
            "loop touches the vortex core: min |u| = {min_modulus:.3}"
        )));
    }
    let (winding, residual) = winding_from_samples(&values);
    Ok(DegreeResult {
        center: spec.center,
        radius: spec.radius,
        axis: spec.axis,
        samples: spec.samples,
        winding,
        residual,
        min_modulus,
    })
}

/// Least squares E(r) = a·r·log r + b·r with the RMS relative misfit.
pub fn fit_growth(profile: &EnergyProfile) -> Result<(f64, f64, f64)> {
    let (a, b) = crate::energy::fit_r_log_r(&profile.radii, &profile.energies)?;
    let mut misfit = crate::numerics::KahanSum::new();
    let mut count = 0usize;
    for (&r, &e) in profile.radii.iter().zip(&profile.energies) {
        if r >= E && e != 0.0 {
            let model = a * r * r.ln() + b * r;
            misfit.add(((e - model) / e).powi(2));
            count += 1;
        }
    }
    let residual = (misfit.value() / count as f64).sqrt();
    Ok((a, b, residual))
}

/// Clearing-out diagnostic: low local energy forces |u| ≥ 1/2, so nodes with
/// |u| < 1/2 must sit near the energy-carrying cross. Returns the max d_X
/// over {|u| < floor}; 0 when the set is empty.
pub fn clearing_out_check(f: &ComplexField, modulus_floor: f64) -> Result<f64> {
    let set = extract_zero_set(f, modulus_floor)?;
    Ok(set.hausdorff)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BlowdownRow {
    pub r: f64,
    /// μ-mass E(u, B_r)/(π·r·log r); concentrates at H¹(X ∩ B₁) = 4.
    pub mass: f64,
    /// Energy fraction inside the tube {d_X ≤ δ_fraction·r}.
    pub tube_fraction: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BlowdownReport {
    pub delta_fraction: f64,
    pub rows: Vec<BlowdownRow>,
    pub tube_fraction_nondecreasing: bool,
}

pub fn blowdown_report(
    f: &ComplexField,
    radii: &[f64],
    delta_fraction: f64,
    epsilon: f64,
) -> Result<BlowdownReport> {
    let geom = f.geometry();
    if !(delta_fraction > 0.0 && delta_fraction < 0.25) {
        return Err(Error::InvalidArgument(format!(
            "delta_fraction must lie in (0, 1/4), got {delta_fraction}"
        )));
    }
    for &r in radii {
        if r <= E || r > geom.radius() + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "blow-down radius {r} outside (e, R]"
            )));
        }
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let cfg = EnergyConfig {
            epsilon,
            region: Region::Ball(r),
        };
        let energy = discrete_energy(f, &cfg)?;
        let mass = energy / (PI * r * r.ln());
        let tube_fraction =
            crate::energy::tube_fraction_unchecked(f, &cfg, delta_fraction * r)?;
        rows.push(BlowdownRow {
            r,
            mass,
            tube_fraction,
        });
    }
    let tube_fraction_nondecreasing = rows
        .windows(2)
        .all(|w| w[1].tube_fraction >= w[0].tube_fraction - 1e-12);
    Ok(BlowdownReport {
        delta_fraction,
        rows,
        tube_fraction_nondecreasing,
    })
}

/// Sampled instance of the growth-reabsorbing iteration hypotheses.
#[derive(Debug, Clone)]
pub struct GrowthLemmaCase {
    pub a: f64,
    pub b: f64,
    pub k: f64,
    pub lambda: f64,
    pub r0: f64,
    /// (r, f(r)) on an increasing radius grid covering [r0, λ·max checked r].
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum GrowthVerdict {
    /// Both hypotheses hold but no sampled radius exceeds r₁.
    HypothesesHold,
    Hypothesis1ViolatedAt(f64),
    Hypothesis2ViolatedAt(f64),
    ConclusionHolds,
    ConclusionViolatedAt(f64),
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct GrowthLemmaReport {
    pub verdict: GrowthVerdict,
    /// Smallest sampled radius satisfying the reabsorption threshold
    /// B√λ·√(A·log(λr) + (log λr)^{2/3}) ≤ (log r)^{2/3}.
    pub r1: Option<f64>,
}

pub fn growth_lemma_check(case: &GrowthLemmaCase) -> Result<GrowthLemmaReport> {
    let GrowthLemmaCase {
        a,
        b,
        k,
        lambda,
        r0,
        samples,
    } = case;
    let (a, b, k, lambda, r0) = (*a, *b, *k, *lambda, *r0);
    if !(a > 0.0 && b > 0.0 && k > 0.0 && lambda > 1.0 && r0 >= 1.0) {
        return Err(Error::InvalidArgument(
            "growth lemma needs A, B, K > 0, λ > 1, r0 >= 1".into(),
        ));
    }
    for w in samples.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidArgument(
                "growth lemma samples must have increasing radii".into(),
            ));
        }
    }
    if samples.iter().any(|&(r, f)| r <= 0.0 || f <= 0.0) {
        return Err(Error::InvalidArgument(
            "growth lemma samples must be positive".into(),
        ));
    }
    let r_max = samples.last().map(|&(r, _)| r).unwrap_or(0.0);
    // f(λr) by log-log interpolation of the sample table.
    let log_table: Vec<(f64, f64)> = samples.iter().map(|&(r, f)| (r.ln(), f.ln())).collect();
    let eval = |r: f64| -> f64 {
        let x = r.ln();
        let idx = log_table
            .partition_point(|&(lr, _)| lr <= x)
            .clamp(1, log_table.len() - 1);
        let (x0, y0) = log_table[idx - 1];
        let (x1, y1) = log_table[idx];
        let t = (x - x0) / (x1 - x0);
        (y0 + t * (y1 - y0)).exp()
    };

    let checkable: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(r, _)| r >= r0 && lambda * r <= r_max * (1.0 + 1e-12))
        .collect();
    if checkable.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "samples do not cover [r0, λ·r] for the f(λr) lookup \
             ({} checkable radii)",
            checkable.len()
        )));
    }

    let slack = 1.0 + 1e-9;
    for &(r, f) in &checkable {
        let bound = a * r * r.ln() + b * r.sqrt() * eval(lambda * r).sqrt();
        if f > bound * slack {
            return Ok(GrowthLemmaReport {
                verdict: GrowthVerdict::Hypothesis1ViolatedAt(r),
                r1: None,
            });
        }
    }
    for &(r, f) in samples.iter().filter(|&&(r, _)| r >= r0) {
        if f > k * r.powi(3) * slack {
            return Ok(GrowthLemmaReport {
                verdict: GrowthVerdict::Hypothesis2ViolatedAt(r),
                r1: None,
            });
        }
    }

    let r1 = samples
        .iter()
        .map(|&(r, _)| r)
        .filter(|&r| r > r0 && r.ln() > 0.0)
        .find(|&r| {
            let lr = (lambda * r).ln();
            b * lambda.sqrt() * (a * lr + lr.powf(2.0 / 3.0)).sqrt()
                <= r.ln().powf(2.0 / 3.0)
        });
    let Some(r1) = r1 else {
        return Ok(GrowthLemmaReport {
            verdict: GrowthVerdict::HypothesesHold,
            r1: None,
        });
    };

    let mut any = false;
    for &(r, f) in samples.iter().filter(|&&(r, _)| r > r1) {
        any = true;
        let bound = a * r * r.ln() + r * r.ln().powf(2.0 / 3.0) + b * b * lambda * lambda * r;
        if f > bound * slack {
            return Ok(GrowthLemmaReport {
                verdict: GrowthVerdict::ConclusionViolatedAt(r),
                r1: Some(r1),
            });
        }
    }
    Ok(GrowthLemmaReport {
        verdict: if any {
            GrowthVerdict::ConclusionHolds
        } else {
            GrowthVerdict::HypothesesHold
        },
        r1: Some(r1),
    })
}

/// One induction step of the reabsorption iteration from the cubic a-priori
/// bound: feeding f = K·r³ through the first hypothesis must land below the
/// n = 0 claim A·r·log r + r(log r)^{2/3} + B^{2−2⁻ⁿ}K^{2^{−n−1}}λ²r^{1+2⁻ⁿ}.
pub fn induction_base_step_holds(a: f64, b: f64, k: f64, lambda: f64, r: f64) -> bool {
    let after_step = a * r * r.ln() + b * r.sqrt() * (k * (lambda * r).powi(3)).sqrt();
    let claim0 = a * r * r.ln() + r * r.ln().powf(2.0 / 3.0) + b * k.sqrt() * lambda * lambda * r * r;
    after_step <= claim0 * (1.0 + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_octant_geometry, extend_octant_field, ComplexField};
    use num_complex::Complex64;

    #[test]
    fn zero_set_of_unit_field_is_empty() {
        let geom = build_octant_geometry(4.0, 0.5).unwrap();
        let ones = ComplexField::from_fn(geom, |_, _| Complex64::new(1.0, 0.0));
        let set = extract_zero_set(&ones, 0.5).unwrap();
        assert!(set.empty);
        assert_eq!(set.hausdorff, 0.0);
        assert_eq!(clearing_out_check(&ones, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn zero_set_of_ramp_field_tracks_the_cross() {
        let geom = build_octant_geometry(4.0, 0.25).unwrap();
        let h = geom.spacing();
        // |u| = min(d_X, 1): the low-modulus set is the exact tube d_X < τ.
        let f = ComplexField::from_fn(geom, |p, _| {
            Complex64::new(dist_to_cross(p).min(1.0), 0.0)
        });
        let set = extract_zero_set(&f, 0.25).unwrap();
        assert!(!set.empty);
        assert!(set.hausdorff <= 0.25 + h * 3.0_f64.sqrt());
        let cleared = clearing_out_check(&f, 0.5).unwrap();
        assert!((cleared - 0.5).abs() <= h * 3.0_f64.sqrt());
    }

    #[test]
    fn threshold_validation() {
        let geom = build_octant_geometry(4.0, 0.5).unwrap();
        let ones = ComplexField::from_fn(geom, |_, _| Complex64::new(1.0, 0.0));
        assert!(extract_zero_set(&ones, 0.0).is_err());
        assert!(extract_zero_set(&ones, 0.7).is_err());
    }

    #[test]
    fn winding_from_explicit_samples() {
        let quarter = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        assert_eq!(winding_from_samples(&quarter), (1, 0.0));
        let reversed = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        assert_eq!(winding_from_samples(&reversed), (-1, 0.0));
    }

    fn synthetic_vortex_field() -> crate::geometry::FullField {
        // Octant field with phase winding around the x-axis and modulus ramp.
        let geom = build_octant_geometry(6.0, 0.5).unwrap();
        let f = ComplexField::from_fn(geom, |p, _| {
            let d = (p[1] * p[1] + p[2] * p[2]).sqrt();
            if d == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            d.min(1.0) * Complex64::new(p[1] / d, p[2] / d)
        });
        extend_octant_field(&f)
    }

    #[test]
    fn winding_on_interpolated_loops() {
        let full = synthetic_vortex_field();
        let spec = LoopSpec {
            center: [3.0, 0.0, 0.0],
            radius: 2.0,
            axis: LoopAxis::X,
            samples: 64,
        };
        let result = winding_number(&full, &spec).unwrap();
        assert_eq!(result.winding, 1);
        assert!(result.residual < 0.05);
        // Refinement invariance: 64 → 256 samples.
        let fine = winding_number(
            &full,
            &LoopSpec {
                samples: 256,
                ..spec
            },
        )
        .unwrap();
        assert_eq!(fine.winding, 1);
        // The reflected loop at (-3,0,0) reverses orientation: u∘R_x = -ū.
        let mirrored = winding_number(
            &full,
            &LoopSpec {
                center: [-3.0, 0.0, 0.0],
                ..spec
            },
        )
        .unwrap();
        assert_eq!(mirrored.winding, -1);
        // Sample-count gate and core-contact gate.
        assert!(winding_number(
            &full,
            &LoopSpec {
                samples: 32,
                ..spec
            }
        )
        .is_err());
        assert!(winding_number(
            &full,
            &LoopSpec {
                radius: 0.05,
                ..spec
            }
        )
        .is_err());
    }

    #[test]
    fn fit_growth_recovers_synthetic_models() {
        let radii: Vec<f64> = (3..=10).map(|r| r as f64).collect();
        let exact: Vec<f64> = radii
            .iter()
            .map(|&r| 4.0 * PI * r * r.ln() + 2.0 * r)
            .collect();
        let profile = EnergyProfile {
            radii: radii.clone(),
            energies: exact,
            fit_a: 0.0,
            fit_b: 0.0,
        };
        let (a, b, res) = fit_growth(&profile).unwrap();
        assert!((a - 4.0 * PI).abs() < 1e-9);
        assert!((b - 2.0).abs() < 1e-9);
        assert!(res < 1e-12);

        let linear: Vec<f64> = radii.iter().map(|&r| 7.0 * r).collect();
        let profile = EnergyProfile {
            radii,
            energies: linear,
            fit_a: 0.0,
            fit_b: 0.0,
        };
        let (a, b, _) = fit_growth(&profile).unwrap();
        assert!(a.abs() < 1e-9);
        assert!((b - 7.0).abs() < 1e-9);
    }

    fn geometric_radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn growth_lemma_passing_case() {
        let radii = geometric_radii(1.0, 1e12, 400);
        let samples: Vec<(f64, f64)> = radii
            .iter()
            .map(|&r| (r, (r * r.ln()).max(1e-6)))
            .collect();
        let case = GrowthLemmaCase {
            a: 1.0,
            b: 1.0,
            k: 1.0,
            lambda: 2.0,
            r0: 1.0,
            samples,
        };
        let report = growth_lemma_check(&case).unwrap();
        assert_eq!(report.verdict, GrowthVerdict::ConclusionHolds);
        let r1 = report.r1.unwrap();
        assert!(r1 > 1e6 && r1 < 1e12, "r1 = {r1:.3e}");
    }

    #[test]
    fn growth_lemma_detects_hypothesis_violation() {
        // f(r) = r² with B = 0.1 fails hypothesis 1 at r = 100:
        // 10⁴ > 100·log 100 + 0.2·100^{3/2}.
        let radii = geometric_radii(50.0, 400.0, 60);
        let samples: Vec<(f64, f64)> = radii.iter().map(|&r| (r, r * r)).collect();
        let case = GrowthLemmaCase {
            a: 1.0,
            b: 0.1,
            k: 1.0,
            lambda: 2.0,
            r0: 50.0,
            samples,
        };
        let report = growth_lemma_check(&case).unwrap();
        match report.verdict {
            GrowthVerdict::Hypothesis1ViolatedAt(r) => {
                assert!(r <= 110.0, "violation first seen at {r}")
            }
            other => panic!("expected hypothesis-1 violation, got {other:?}"),
        }
        // Direct arithmetic at r = 100.
        let f = 1e4_f64;
        let bound = 100.0 * 100.0_f64.ln() + 0.2 * 100.0_f64.powf(1.5);
        assert!(f > bound);
    }

    #[test]
    fn growth_lemma_detects_cubic_violation() {
        let radii = geometric_radii(1.0, 64.0, 40);
        let samples: Vec<(f64, f64)> = radii.iter().map(|&r| (r, 2.0 * r.powi(4))).collect();
        let case = GrowthLemmaCase {
            a: 100.0,
            b: 100.0,
            k: 1.0,
            lambda: 2.0,
            r0: 1.0,
            samples,
        };
        let report = growth_lemma_check(&case).unwrap();
        assert!(matches!(
            report.verdict,
            GrowthVerdict::Hypothesis2ViolatedAt(_)
        ));
    }

    #[test]
    fn induction_base_step_numeric() {
        for &r in &[1.0, 2.0, 3.5, 4.0, 10.0, 100.0] {
            assert!(induction_base_step_holds(1.0, 1.0, 1.0, 2.0, r), "r = {r}");
        }
    }

    #[test]
    fn growth_lemma_requires_coverage() {
        let case = GrowthLemmaCase {
            a: 1.0,
            b: 1.0,
            k: 1.0,
            lambda: 2.0,
            r0: 1.0,
            samples: vec![(1.0, 1.0), (1.5, 1.5)],
        };
        assert!(growth_lemma_check(&case).is_err());
    }

    #[test]
    fn blowdown_rows_monotone_for_ramp_field() {
        let geom = build_octant_geometry(8.0, 0.5).unwrap();
        let f = ComplexField::from_fn(geom, |p, _| {
            let d = dist_to_cross(p);
            if d == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let dy = (p[1] * p[1] + p[2] * p[2]).sqrt();
            if dy == 0.0 {
                return Complex64::new(d.min(1.0), 0.0);
            }
            d.min(1.0) * Complex64::new(p[1] / dy, p[2] / dy)
        });
        let report = blowdown_report(&f, &[4.0, 6.0, 8.0], 0.2, 1.0).unwrap();
        assert_eq!(report.rows.len(), 3);
        for row in &report.rows {
            assert!(row.mass > 0.0 && row.mass.is_finite());
            assert!((0.0..=1.0).contains(&row.tube_fraction));
        }
        assert!(blowdown_report(&f, &[4.0], 0.3, 1.0).is_err());
        assert!(blowdown_report(&f, &[2.0], 0.2, 1.0).is_err());
    }
}
