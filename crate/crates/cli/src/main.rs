//! Configuration-driven pipeline: generate the boundary datum, minimize the
//! energy, analyze the solved field, and compare against the analytic
//! competitor, with deterministic file artifacts.
//!
//! Worker thread count comes from the environment variable GLSADDLE_THREADS
//! (default 1 for reproducibility); results are bit-identical regardless.

mod config;

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use gl_saddle::analysis::{
    blowdown_report, clearing_out_check, extract_zero_set, fit_growth, growth_lemma_check,
    winding_number, DegreeResult, GrowthLemmaCase, LoopAxis, LoopSpec,
};
use gl_saddle::boundary::{build_boundary_datum, BoundaryDatum, DEFAULT_CAP_RADIUS};
use gl_saddle::competitors::{CompetitorMap, CompetitorQuadrature};
use gl_saddle::energy::energy_profile;
use gl_saddle::geometry::{build_octant_geometry, extend_octant_field, ComplexField};
use gl_saddle::io;
use gl_saddle::solver;

use config::{parse_config, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "glsaddle",
    about = "Ginzburg-Landau saddle solution laboratory",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the spherical boundary datum and export its phase field (PHI1).
    GenBoundary {
        #[arg(long, default_value_t = DEFAULT_CAP_RADIUS)]
        cap_radius: f64,
        #[arg(long, default_value_t = 6)]
        mesh_level: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimize the energy on the octant grid and dump the field (GLF1).
    Solve {
        #[arg(long = "R")]
        r: f64,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = DEFAULT_CAP_RADIUS)]
        cap_radius: f64,
        #[arg(long, default_value_t = 6)]
        mesh_level: u32,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-3)]
        grad_tol: f64,
        #[arg(long, default_value_t = 1e-13)]
        energy_tol: f64,
        #[arg(long, default_value_t = 10)]
        truncate_every: usize,
        #[arg(long, default_value = "lbfgs")]
        optimizer: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Analyze a solved field: zero set, degrees, growth fit, blow-down.
    Analyze {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        radii: Option<String>,
        #[arg(long)]
        blowdown_radii: Option<String>,
        #[arg(long, default_value_t = 0.15)]
        delta_fraction: f64,
        #[arg(long, default_value_t = 0.5)]
        zero_threshold: f64,
        #[arg(long)]
        degree_offset: Option<f64>,
        #[arg(long, default_value_t = 2.0)]
        degree_radius: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        /// Optional localized-energy table (CSV: r, E, E_over_rlogr).
        #[arg(long)]
        profile_out: Option<PathBuf>,
        /// Optional blow-down density export (GLF1, zero imaginary parts),
        /// normalized at the largest analysis radius.
        #[arg(long)]
        density_out: Option<PathBuf>,
    },
    /// Competitor energy table E(v_m, B_r) and the slope integrand.
    CompetitorEnergy {
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 0.0)]
        r1: f64,
        #[arg(long)]
        r2: f64,
        #[arg(long, default_value_t = 6)]
        mesh_level: u32,
        #[arg(long, default_value_t = DEFAULT_CAP_RADIUS)]
        cap_radius: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Radial vortex profile ρ_d by relaxation.
    RadialProfile {
        #[arg(long, default_value_t = 1)]
        d: u32,
        #[arg(long, default_value_t = 20.0)]
        rmax: f64,
        #[arg(long, default_value_t = 2001)]
        n_points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the growth-reabsorbing iteration on a sampled function.
    GrowthLemma {
        /// CSV with columns r,f (no header).
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
    },
    /// Full pipeline: solve, analyze, competitor table.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Human-readable summary of an analysis file with PASS/FAIL flags.
    Report {
        #[arg(long)]
        analysis: PathBuf,
    },
}

fn parse_radius_list(s: &str) -> Result<Vec<f64>> {
    let radii: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().context("bad radius"))
        .collect::<Result<_>>()?;
    Ok(radii)
}

fn analyze_field(
    field: &ComplexField,
    analysis_radii: &[f64],
    blowdown_radii: &[f64],
    delta_fraction: f64,
    zero_threshold: f64,
    degree_offset: f64,
    degree_radius: f64,
    epsilon: f64,
) -> Result<io::AnalysisReport> {
    let zero = extract_zero_set(field, zero_threshold)?;
    let clearing = clearing_out_check(field, 0.5)?;

    let full = extend_octant_field(field);
    let mut degrees: Vec<DegreeResult> = Vec::new();
    for (center, axis) in [
        ([degree_offset, 0.0, 0.0], LoopAxis::X),
        ([-degree_offset, 0.0, 0.0], LoopAxis::X),
        ([0.0, degree_offset, 0.0], LoopAxis::Y),
        ([0.0, -degree_offset, 0.0], LoopAxis::Y),
    ] {
        degrees.push(winding_number(
            &full,
            &LoopSpec {
                center,
                radius: degree_radius,
                axis,
                samples: 256,
            },
        )?);
    }

    let profile = energy_profile(field, analysis_radii, epsilon)?;
    let (fit_a, fit_b, _residual) = fit_growth(&profile)?;
    let blowdown = blowdown_report(field, blowdown_radii, delta_fraction, epsilon)?;

    Ok(io::AnalysisReport {
        zero_set_hausdorff: zero.hausdorff,
        degrees: degrees.iter().map(io::DegreeJson::from).collect(),
        fit_a,
        fit_b,
        clearing_out_max_dx: clearing,
        blowdown: (&blowdown).into(),
    })
}

fn competitor_rows(
    datum: &Arc<BoundaryDatum>,
    m: f64,
    mesh_level: u32,
    radii: &[f64],
) -> Result<Vec<(f64, f64, f64)>> {
    let map = CompetitorMap::new(m, datum.clone())?;
    let quad = CompetitorQuadrature::build(&map, mesh_level, 64)?;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        rows.push((r, quad.annulus_energy(0.0, r)?, quad.shell_tangential(r)));
    }
    Ok(rows)
}

fn cmd_run(config_path: PathBuf) -> Result<()> {
    let cfg: PipelineConfig = parse_config(&config_path)?;
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;

    eprintln!("building boundary datum (level {})...", cfg.mesh_level);
    let datum = Arc::new(build_boundary_datum(cfg.cap_radius, cfg.mesh_level)?);
    let geom = build_octant_geometry(cfg.r, cfg.h)?;

    eprintln!(
        "solving R = {}, h = {} ({} nodes)...",
        cfg.r,
        cfg.h,
        geom.node_count()
    );
    let (field, report) = solver::solve(&geom, &datum, &cfg.solve_config())?;
    eprintln!(
        "solve finished: {} iterations, energy {:.6}, residual {:.3e}, {:?} ({:.1}s)",
        report.iterations,
        report.final_energy,
        report.final_residual,
        report.termination,
        report.wall_seconds
    );

    io::write_glf1(&cfg.out_dir.join("field.glf1"), &field)?;
    io::write_solve_report(&cfg.out_dir.join("report.csv"), &report.trace)?;

    eprintln!("analyzing...");
    let analysis = analyze_field(
        &field,
        &cfg.analysis_radii,
        &cfg.blowdown_radii,
        cfg.delta_fraction,
        cfg.zero_threshold,
        cfg.degree_offset,
        cfg.degree_radius,
        cfg.epsilon,
    )?;
    io::write_analysis_json(&cfg.out_dir.join("analysis.json"), &analysis)?;

    eprintln!("competitor table...");
    let rows = competitor_rows(&datum, 1.0, cfg.mesh_level, &cfg.analysis_radii)?;
    io::write_competitor_table(&cfg.out_dir.join("comp.csv"), &rows)?;

    println!(
        "wrote field.glf1, report.csv, analysis.json, comp.csv to {}",
        cfg.out_dir.display()
    );
    Ok(())
}

fn cmd_report(analysis: PathBuf) -> Result<()> {
    let report = io::read_analysis_json(&analysis)?;
    let four_pi = 4.0 * std::f64::consts::PI;
    let ratio = report.fit_a / four_pi;
    let growth_ok = (ratio - 1.0).abs() <= 0.5;
    let zero_ok = report.zero_set_hausdorff <= 2.0;
    let degrees_ok = !report.degrees.is_empty()
        && report
            .degrees
            .iter()
            .all(|d| d.winding.abs() == 1 && d.residual < 0.05);
    let clearing_ok = report.clearing_out_max_dx <= 2.0;
    let flag = |ok: bool| if ok { "PASS" } else { "FAIL" };

    println!(
        "growth      fit_a = {:.6}  fit_a/4pi = {:.4}  fit_b = {:.4}   {}",
        report.fit_a,
        ratio,
        report.fit_b,
        flag(growth_ok)
    );
    println!(
        "zero-set    max d_X = {:.4} (threshold 2.0)                    {}",
        report.zero_set_hausdorff,
        flag(zero_ok)
    );
    let windings: Vec<String> = report
        .degrees
        .iter()
        .map(|d| {
            format!(
                "{}{} at ({:+.1},{:+.1},{:+.1}) |w|={} res={:.3}",
                d.axis,
                if d.winding >= 0 { "+" } else { "-" },
                d.center[0],
                d.center[1],
                d.center[2],
                d.winding.abs(),
                d.residual
            )
        })
        .collect();
    println!("degrees     {}   {}", windings.join("; "), flag(degrees_ok));
    println!(
        "clearing    max d_X over {{|u|<1/2}} = {:.4} (threshold 2.0)    {}",
        report.clearing_out_max_dx,
        flag(clearing_ok)
    );
    for row in &report.blowdown {
        println!(
            "blowdown    r = {:5.1}  mass = {:.4}  tube_fraction = {:.4}",
            row.r, row.mass, row.tube_fraction
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenBoundary {
            cap_radius,
            mesh_level,
            out,
        } => {
            let datum = build_boundary_datum(cap_radius, mesh_level)?;
            io::write_phi1(&out, datum.phase_field())?;
            println!("wrote {}", out.display());
        }
        Command::Solve {
            r,
            h,
            cap_radius,
            mesh_level,
            epsilon,
            max_iters,
            grad_tol,
            energy_tol,
            truncate_every,
            optimizer,
            seed,
            out,
            report,
        } => {
            let datum = build_boundary_datum(cap_radius, mesh_level)?;
            let geom = build_octant_geometry(r, h)?;
            let cfg = solver::SolveConfig {
                max_iters,
                grad_tol,
                energy_tol,
                truncate_every,
                optimizer: optimizer.parse()?,
                seed,
                epsilon,
                init: solver::InitMode::Competitor,
            };
            let (field, solve_report) = solver::solve(&geom, &datum, &cfg)?;
            io::write_glf1(&out, &field)?;
            io::write_solve_report(&report, &solve_report.trace)?;
            println!(
                "solved in {} iterations: energy {:.6}, residual {:.3e}, {:?}",
                solve_report.iterations,
                solve_report.final_energy,
                solve_report.final_residual,
                solve_report.termination
            );
        }
        Command::Analyze {
            field,
            report,
            radii,
            blowdown_radii,
            delta_fraction,
            zero_threshold,
            degree_offset,
            degree_radius,
            epsilon,
            profile_out,
            density_out,
        } => {
            let f = io::read_glf1(&field)?;
            let geom = f.geometry();
            let analysis_radii = match radii {
                Some(s) => parse_radius_list(&s)?,
                None => config::default_analysis_radii(geom.radius(), geom.spacing()),
            };
            if analysis_radii.is_empty() {
                bail!("no admissible analysis radii; pass --radii");
            }
            let blowdown = match blowdown_radii {
                Some(s) => parse_radius_list(&s)?,
                None => config::default_blowdown_radii(geom.radius()),
            };
            let offset = degree_offset.unwrap_or_else(|| (0.5 * geom.radius()).min(6.0));
            let analysis = analyze_field(
                &f,
                &analysis_radii,
                &blowdown,
                delta_fraction,
                zero_threshold,
                offset,
                degree_radius,
                epsilon,
            )?;
            io::write_analysis_json(&report, &analysis)?;
            if let Some(path) = profile_out {
                let profile = energy_profile(&f, &analysis_radii, epsilon)?;
                io::write_energy_profile(&path, &profile.radii, &profile.energies)?;
            }
            if let Some(path) = density_out {
                let r_norm = analysis_radii.last().copied().unwrap();
                let density =
                    gl_saddle::energy::compute_density_field(&f, r_norm, epsilon)?;
                io::write_glf1_density(&path, &density)?;
            }
            println!("wrote {}", report.display());
        }
        Command::CompetitorEnergy {
            m,
            r1,
            r2,
            mesh_level,
            cap_radius,
            out,
        } => {
            if !(r2 > r1 && r1 >= 0.0) {
                bail!("need 0 <= r1 < r2");
            }
            let datum = Arc::new(build_boundary_datum(cap_radius, mesh_level)?);
            // 16 geometrically spaced radii ending at r2.
            let lo = if r1 > 0.0 { r1 } else { (r2 / 100.0).max(1.0) };
            let radii: Vec<f64> = (0..16)
                .map(|i| lo * (r2 / lo).powf(i as f64 / 15.0))
                .collect();
            let rows = competitor_rows(&datum, m, mesh_level, &radii)?;
            io::write_competitor_table(&out, &rows)?;
            println!("wrote {}", out.display());
        }
        Command::RadialProfile {
            d,
            rmax,
            n_points,
            out,
        } => {
            let profile = gl_saddle::competitors::radial_profile(d, rmax, n_points)?;
            let file = std::fs::File::create(&out)?;
            use std::io::Write;
            let mut w = std::io::BufWriter::new(file);
            writeln!(w, "r,rho")?;
            for (i, rho) in profile.rhos.iter().enumerate() {
                writeln!(
                    w,
                    "{},{}",
                    io::fmt_f64(profile.radius(i)),
                    io::fmt_f64(*rho)
                )?;
            }
            w.flush()?;
            println!("wrote {}", out.display());
        }
        Command::GrowthLemma {
            samples,
            a,
            b,
            k,
            lambda,
            r0,
        } => {
            let text = std::fs::read_to_string(&samples)?;
            let mut table = Vec::new();
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') || line.starts_with('r') {
                    continue;
                }
                let (rs, fs) = line
                    .split_once(',')
                    .with_context(|| format!("bad sample line '{line}'"))?;
                table.push((rs.trim().parse::<f64>()?, fs.trim().parse::<f64>()?));
            }
            let case = GrowthLemmaCase {
                a,
                b,
                k,
                lambda,
                r0,
                samples: table,
            };
            let report = growth_lemma_check(&case)?;
            match report.r1 {
                Some(r1) => println!("verdict: {:?} (r1 = {r1:.6e})", report.verdict),
                None => println!("verdict: {:?}", report.verdict),
            }
        }
        Command::Run { config } => cmd_run(config)?,
        Command::Report { analysis } => cmd_report(analysis)?,
    }
    Ok(())
}
