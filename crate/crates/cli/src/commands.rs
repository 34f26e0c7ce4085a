use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use walllaw::cell::{
    decay_report, solve_cell_first, solve_cell_second, steklov_poincare_solve, truncation_sensitivity, write_sidecar,
    CellResolution, CellSidecar, CellSolution, SteklovOptions,
};
use walllaw::fem::{DofMap, FiniteElementField};
use walllaw::fourier::sample_points;
use walllaw::io_util::write_atomic;
use walllaw::lab::{fit_order, run_experiment_with, solve_cells, ExperimentReport, FamilyTag};
use walllaw::mesh::{build_mesh, export_mesh, DomainKind, DomainSpec};
use walllaw::profile::RoughnessProfile;
use walllaw::wall_laws::{self, closed_form, Mode, WallLawFamily};
use walllaw::Error;

use crate::config::Resolved;

/// Reference averages for the built-in cosine wall with δ = 0.05.
const REFERENCE_BETA_BAR: f64 = 0.43215;
const REFERENCE_GAMMA_BAR_ABS: f64 = 0.29795;

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    write_atomic(path, text.as_bytes()).with_context(|| format!("cannot write {}", path.display()))
}

fn cell_strip(res: &Resolved) -> DomainKind {
    DomainKind::MicroStrip { height: res.cell_height }
}

pub fn cell(res: &Resolved) -> anyhow::Result<()> {
    let dir = res.out.join("cell");
    let (beta, gamma) = rayon::join(
        || solve_cell_first(&res.profile, res.cell_height, &res.cell),
        || solve_cell_second(&res.profile, res.cell_height, &res.cell),
    );
    let (beta, gamma) = (beta?, gamma?);
    println!("beta_bar={:.6}", beta.average());
    println!("gamma_bar={:.6}", gamma.average());
    println!("gamma_bar_abs={:.6}", gamma.average().abs());

    let sp = steklov_poincare_solve(&res.profile, &res.cell, &SteklovOptions::default())?;
    let iterations = match sp.method() {
        walllaw::cell::CellMethod::SteklovPoincare { iterations, .. } => *iterations,
        _ => 0,
    };
    println!("steklov_beta_bar={:.6}", sp.average());
    println!("steklov_iterations={iterations}");
    println!("steklov_trace_distance={:.3e}", beta.trace_l2_distance(&sp)?);
    println!("max_principle_violation={:.3e}", beta.max_principle_violation());

    let decay = decay_report(&beta)?;
    let opt = |v: Option<f64>| v.map_or("none".to_owned(), |x| format!("{x:.6}"));
    println!("decay_rate={}", opt(decay.fitted_rate));
    println!("dominant_mode={}", decay.dominant_mode);
    println!("dominant_mode_rate={}", opt(decay.mode_rate));

    let mut sweep_dat = String::from("# H beta_bar\n");
    if res.sweep.len() >= 2 {
        println!("truncation sensitivity:");
        for (h, b) in truncation_sensitivity(&res.profile, &res.sweep, &res.cell)? {
            println!("  H={h:<5} beta_bar={b:.10}");
            let _ = writeln!(sweep_dat, "{h} {b:.12e}");
        }
    }

    let mesh = beta.field().mesh();
    export_mesh(mesh, dir.join("cell.mesh"))?;
    beta.field().save(dir.join("beta.field"))?;
    gamma.field().save(dir.join("gamma.field"))?;
    for (name, sol) in [("beta", &beta), ("gamma", &gamma)] {
        let mut buf = Vec::new();
        write_sidecar(&CellSidecar::from(sol), &mut buf)?;
        write_atomic(&dir.join(format!("{name}.cell")), &buf)?;
    }
    let mut traces = String::from("# y1 f(y1) beta(y1,0) gamma(y1,0)\n");
    for y1 in sample_points(beta.trace_samples().len()) {
        let _ = writeln!(
            traces,
            "{y1:.10e} {:.10e} {:.10e} {:.10e}",
            res.profile.evaluate(y1),
            beta.trace_at(y1),
            gamma.trace_at(y1)
        );
    }
    write_text(&dir.join("traces.dat"), &traces)?;
    let mut decay_dat = String::from("# y2 deviation\n");
    for (y, d) in decay.heights.iter().zip(&decay.deviation) {
        let _ = writeln!(decay_dat, "{y} {d:.10e}");
    }
    write_text(&dir.join("decay.dat"), &decay_dat)?;
    write_text(&dir.join("sweep.dat"), &sweep_dat)?;
    write_text(
        &dir.join("traces.gp"),
        "set xlabel 'y1'\nset key bottom right\n\
         plot 'traces.dat' u 1:3 w l t 'beta(y1,0)', '' u 1:4 w l t 'gamma(y1,0)', '' u 1:2 w l dt 2 t 'wall'\n\
         pause -1\n",
    )?;
    println!("cell artifacts written to {}", dir.display());
    Ok(())
}

pub fn experiment(res: &Resolved) -> anyhow::Result<ExperimentReport> {
    let cells = solve_cells(&res.plan)?;
    let report = run_experiment_with(&res.plan, &cells)?;
    report.write(&res.out)?;
    let mut gp = String::from(
        "set datafile separator ','\nset logscale xy\nset xlabel 'epsilon'\nset ylabel 'L2 error'\nset key left top\nplot \\\n",
    );
    let plots: Vec<String> = report
        .records
        .iter()
        .map(|r| format!("  'errors.csv' u ((strcol(1) eq '{0}') ? $2 : 1/0):3 w lp t '{0}'", r.family))
        .collect();
    gp.push_str(&plots.join(", \\\n"));
    gp.push_str("\npause -1\n");
    write_text(&res.out.join("errors.gp"), &gp)?;
    println!("beta_bar={:.6} gamma_bar={:.6}", report.beta_bar, report.gamma_bar);
    println!("{:<14} {:>8} {:>12}  status", "family", "alpha", "fit_rms");
    for r in &report.records {
        let f = |v: Option<f64>| v.map_or("-".to_owned(), |x| format!("{x:.4}"));
        println!("{:<14} {:>8} {:>12}  {}", r.family, f(r.alpha), f(r.fit_residual), r.status);
    }
    println!("results written to {}", res.out.display());
    Ok(report)
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum MeshKind {
    Rough,
    Smooth,
    Strip,
    Layer,
}

pub fn mesh(res: &Resolved, kind: MeshKind, epsilon: f64) -> anyhow::Result<PathBuf> {
    let (mesh, name) = match kind {
        MeshKind::Rough | MeshKind::Smooth => {
            if !(epsilon > 0.0 && epsilon <= 1.0) {
                anyhow::bail!("epsilon must lie in (0, 1], got {epsilon}");
            }
            let (kind, name) = match kind {
                MeshKind::Rough => (DomainKind::RoughCell { epsilon }, "rough"),
                _ => (DomainKind::SmoothCell { epsilon }, "smooth"),
            };
            let mut m = build_mesh(&DomainSpec::new(kind, res.profile.clone(), res.plan.segments))?;
            for _ in 0..res.plan.refinements {
                m = m.refine();
            }
            (m, format!("{name}_eps{epsilon}.mesh"))
        }
        MeshKind::Strip => (res.cell.mesh(cell_strip(res), &res.profile)?, "strip.mesh".to_owned()),
        MeshKind::Layer => (res.cell.mesh(DomainKind::RoughLayer, &res.profile)?, "layer.mesh".to_owned()),
    };
    let path = res.out.join(name);
    export_mesh(&mesh, &path)?;
    println!(
        "{}: {} vertices, {} triangles, h_max {:.4e}, max aspect {:.3}, checksum {}",
        path.display(),
        mesh.vertices().len(),
        mesh.triangles().len(),
        mesh.h_max(),
        mesh.max_aspect_ratio(),
        mesh.checksum()
    );
    Ok(path)
}

struct Matrix {
    rows: Vec<(String, Option<bool>, String)>,
}

impl Matrix {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.rows.push((name.to_owned(), Some(pass), detail));
    }

    fn info(&mut self, name: &str, detail: String) {
        println!("INFO {name}: {detail}");
        self.rows.push((name.to_owned(), None, detail));
    }

    fn attempt(&mut self, name: &str, r: anyhow::Result<(bool, String)>) {
        match r {
            Ok((pass, detail)) => self.check(name, pass, detail),
            Err(e) => self.check(name, false, format!("error: {e:#}")),
        }
    }
}

fn is_reference_profile(p: &RoughnessProfile) -> bool {
    let reference = RoughnessProfile::cosine(0.05).expect("built-in profile");
    (0..64).all(|j| {
        let y = std::f64::consts::TAU * j as f64 / 64.0;
        (p.evaluate(y) - reference.evaluate(y)).abs() < 1e-12
    })
}

/// Runs the invariant suite; returns whether every check passed.
pub fn verify(res: &Resolved, quick: bool, field: Option<&Path>) -> anyhow::Result<bool> {
    let mut m = Matrix { rows: Vec::new() };

    m.attempt("flat profile oracles", (|| {
        let delta = res.profile.delta();
        let flat = RoughnessProfile::flat(delta)?;
        let coarse = CellResolution {
            refinements: 0,
            ..res.cell.clone()
        };
        let b = solve_cell_first(&flat, 6.0, &coarse)?.average();
        let g = solve_cell_second(&flat, 6.0, &coarse)?.average();
        let ok = (b - delta).abs() <= 1e-8 && (g + delta * delta).abs() <= 1e-8;
        Ok((ok, format!("beta_bar={b:.3e} (delta {delta}), gamma_bar={g:.3e}")))
    })());

    m.attempt("fit_order synthetic", (|| {
        let pts: Vec<(f64, f64)> = [0.5, 0.4, 0.3, 0.2, 0.1].iter().map(|&e: &f64| (e, e * e)).collect();
        let (a, _) = fit_order(&pts)?;
        Ok(((a - 2.0).abs() < 1e-12, format!("alpha={a:.12}")))
    })());

    let cells = (|| -> anyhow::Result<(CellSolution, CellSolution)> {
        Ok((
            solve_cell_first(&res.profile, res.cell_height, &res.cell)?,
            solve_cell_second(&res.profile, res.cell_height, &res.cell)?,
        ))
    })();
    let (beta, gamma) = match cells {
        Ok(c) => c,
        Err(e) => {
            m.check("cell solves", false, format!("error: {e:#}"));
            return Ok(false);
        }
    };
    let (bb, gb) = (beta.average(), gamma.average());
    if is_reference_profile(&res.profile) && res.cell_height == 10.0 {
        let rb = (bb - REFERENCE_BETA_BAR).abs() / REFERENCE_BETA_BAR;
        let rg = (gb.abs() - REFERENCE_GAMMA_BAR_ABS).abs() / REFERENCE_GAMMA_BAR_ABS;
        m.check(
            "cell averages",
            rb <= 0.02 && rg <= 0.02,
            format!("beta_bar={bb:.6} ({:.2}%), |gamma_bar|={:.6} ({:.2}%)", 100.0 * rb, gb.abs(), 100.0 * rg),
        );
    } else {
        m.info("cell averages", format!("beta_bar={bb:.6}, gamma_bar={gb:.6} (no reference values)"));
    }
    m.info(
        "gamma_bar sign",
        format!("gamma_bar={gb:.6} is {}; reported magnitude {:.6}", if gb < 0.0 { "negative" } else { "non-negative" }, gb.abs()),
    );
    m.check(
        "maximum principle",
        beta.max_principle_violation() <= 1e-10,
        format!("violation {:.3e}", beta.max_principle_violation()),
    );
    m.attempt("steklov-poincare agreement", (|| {
        let sp = steklov_poincare_solve(&res.profile, &res.cell, &SteklovOptions::default())?;
        let d = beta.trace_l2_distance(&sp)?;
        Ok((d <= 1e-3, format!("L2(Gamma) trace distance {d:.3e}")))
    })());
    m.attempt("dominant mode decay", (|| {
        let d = decay_report(&beta)?;
        let k = d.dominant_mode as f64;
        Ok(match d.mode_rate {
            Some(r) => ((r - k).abs() <= 0.05 * k, format!("mode {k}, rate {r:.6}")),
            None => (res.profile.is_flat(), "no oscillating content".to_owned()),
        })
    })());

    m.attempt("averaged laws: FEM = closed form", (|| {
        let mut worst: f64 = 0.0;
        for eps in [0.1, 0.3] {
            let dofs = res.plan.smooth_dofs(eps)?;
            let c = res.plan.c;
            let u1 = wall_laws::averaged_first(c, eps, bb, &dofs, Mode::Fem)?;
            worst = worst.max(u1.max_dof_deviation(|x2| closed_form::first(c, eps, bb, x2)));
            let u2 = wall_laws::averaged_second(c, eps, bb, gb, &dofs, Mode::Fem)?;
            worst = worst.max(u2.max_dof_deviation(|x2| closed_form::second(c, eps, bb, gb, x2)));
        }
        Ok((worst <= 1e-9, format!("max nodal deviation {worst:.3e}")))
    })());

    let strip_dofs = Arc::new(DofMap::new(beta.field().mesh().clone(), res.cell.order));
    m.attempt("field round trip", (|| {
        let mut buf = Vec::new();
        beta.field().write(&mut buf)?;
        let back = FiniteElementField::read(&buf[..], strip_dofs.clone())?;
        let same = back.values() == beta.field().values();
        let other = Arc::new(DofMap::new(gamma.field().mesh().refine().into(), res.cell.order));
        let rejected = matches!(
            FiniteElementField::read(&buf[..], other),
            Err(Error::ChecksumMismatch { .. })
        );
        Ok((same && rejected, format!("bit-exact {same}, foreign mesh rejected {rejected}")))
    })());

    if let Some(path) = field {
        m.attempt("field file", (|| {
            let f = FiniteElementField::load(path, strip_dofs.clone())
                .with_context(|| format!("{} against the configured cell mesh", path.display()))?;
            Ok((true, format!("{} values match the cell mesh", f.values().len())))
        })());
    }

    if !quick {
        match solve_cells(&res.plan).and_then(|c| run_experiment_with(&res.plan, &c)) {
            Ok(report) => experiment_checks(&mut m, &report),
            Err(e) => m.check("experiment", false, format!("error: {e}")),
        }
    }

    let failed = m.rows.iter().filter(|r| r.1 == Some(false)).count();
    let passed = m.rows.iter().filter(|r| r.1 == Some(true)).count();
    println!("{passed} passed, {failed} failed");
    Ok(failed == 0)
}

fn experiment_checks(m: &mut Matrix, report: &ExperimentReport) {
    m.check(
        "experiment completed",
        report.all_ok(),
        report
            .records
            .iter()
            .map(|r| format!("{}={}", r.family, r.status))
            .collect::<Vec<_>>()
            .join(", "),
    );
    let targets: [(WallLawFamily, f64, f64); 6] = [
        (WallLawFamily::U0, 1.11 - 0.15, 1.11 + 0.15),
        (WallLawFamily::U1Analytic, 1.4786 - 0.15, 1.4786 + 0.15),
        (WallLawFamily::U2Analytic, 1.3931 - 0.15, 1.3931 + 0.15),
        (WallLawFamily::ExplicitMS1, 1.768 - 0.2, 1.768 + 0.2),
        (WallLawFamily::ImplicitMS1, 1.6227 - 0.2, 1.6227 + 0.2),
        (WallLawFamily::ExplicitMS2, 1.8, 3.8),
    ];
    for (family, lo, hi) in targets {
        if let Some(r) = report.record(FamilyTag::Law(family)) {
            match r.alpha {
                Some(a) => m.check(&format!("order {family}"), a >= lo && a <= hi, format!("alpha={a:.4} in [{lo:.4}, {hi:.4}]")),
                None => m.check(&format!("order {family}"), false, r.status.clone()),
            }
        }
    }
    for r in &report.records {
        let inv = r.inversions();
        m.check(&format!("monotone {}", r.family), inv <= 1, format!("{inv} inversion(s)"));
    }
    let (u1, u2, ms2) = (
        report.record(FamilyTag::Law(WallLawFamily::U1Analytic)),
        report.record(FamilyTag::Law(WallLawFamily::U2Analytic)),
        report.record(FamilyTag::Law(WallLawFamily::ExplicitMS2)),
    );
    if let (Some(u1), Some(u2)) = (u1, u2) {
        let worst = u1
            .errors
            .iter()
            .filter_map(|&(e, a)| u2.error_at(e).map(|b| (a - b).abs() / a))
            .fold(0.0, f64::max);
        m.check("U1 and U2 indistinguishable", worst <= 0.10, format!("max relative gap {:.2}%", 100.0 * worst));
    }
    if let (Some(u1), Some(ms2)) = (u1, ms2) {
        let worst = u1
            .errors
            .iter()
            .filter_map(|&(e, a)| ms2.error_at(e).map(|b| b / a))
            .fold(0.0, f64::max);
        m.check("ExplicitMS2 an order below U1", worst <= 0.1, format!("max ratio {worst:.3}"));
    }
}

pub fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}
