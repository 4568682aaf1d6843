//! Run artifacts: diagnostics.csv, snapshots/*.csv and report.json.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use dirac1d::functionals::{
    check_monotonicity, linf_bound_check, window_translate_bound, LinfBoundReport,
    MonotonicityReport,
};
use dirac1d::models::GlimmConstants;
use dirac1d::solver::{SolverConfig, Trajectory};
use serde::Serialize;

pub fn write_diagnostics(traj: &Trajectory, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let n_windows = traj.records.first().map_or(0, |r| r.local_charges.len());
    let mut header: Vec<String> = ["t", "L", "Q", "D", "glimm", "linf", "cumD"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=n_windows).map(|i| format!("window_{i}")));
    w.write_record(&header)?;
    for r in &traj.records {
        let mut row = vec![r.t, r.l, r.q, r.d, r.glimm, r.linf, r.cumulative_d];
        row.extend(r.local_charges.iter().map(|&(_, q)| q));
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_snapshots(traj: &Trajectory, dir: &Path) -> Result<usize> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let dt = traj.grid.dt();
    for s in &traj.snapshots {
        let step = (s.t / dt).round() as usize;
        let path = dir.join(format!("step_{step:06}.csv"));
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        s.write_csv(BufWriter::new(file))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(traj.snapshots.len())
}

#[derive(Serialize)]
struct ModelReport<'a> {
    name: &'a str,
    /// `[j, k, w_jk]`.
    w_terms: Vec<(u32, u32, f64)>,
    gn_coupling: f64,
}

#[derive(Serialize)]
struct WindowReport {
    window: (f64, f64),
    max_lhs_over_rhs: f64,
    holds_everywhere: bool,
    final_local_charge: f64,
}

#[derive(Serialize)]
struct MonotonicitySummary {
    #[serde(rename = "K")]
    k: f64,
    delta: Option<f64>,
    l0: f64,
    q0: f64,
    hypothesis_met: bool,
    max_violation: f64,
    final_excess: f64,
}

impl From<&MonotonicityReport> for MonotonicitySummary {
    fn from(r: &MonotonicityReport) -> Self {
        Self {
            k: r.k,
            delta: r.delta,
            l0: r.l0,
            q0: r.q0,
            hypothesis_met: r.hypothesis_met,
            max_violation: r.max_violation,
            final_excess: r.series.last().map_or(0.0, |p| p.1),
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    model: ModelReport<'a>,
    grid: GridReport,
    solver: &'a SolverConfig,
    t_requested: f64,
    t_final: f64,
    n_steps: usize,
    glimm_constants: GlimmConstants,
    smallness_hypothesis_met: bool,
    monotonicity: MonotonicitySummary,
    linf: LinfBoundReport,
    windows: Vec<WindowReport>,
    boundary_warnings: usize,
}

#[derive(Serialize)]
struct GridReport {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    dx: f64,
}

pub fn write_report(traj: &Trajectory, windows: &[(f64, f64)], path: &Path) -> Result<()> {
    let mono = check_monotonicity(traj).ok();
    let (l0, q0) = traj.records.first().map_or((0.0, 0.0), |r| (r.l, r.q));
    let monotonicity = match &mono {
        Some(m) => MonotonicitySummary::from(m),
        // A zero-step run has nothing to compare against.
        None => MonotonicitySummary {
            k: traj.constants.k,
            delta: traj.constants.delta,
            l0,
            q0,
            hypothesis_met: traj.constants.hypothesis_met(l0, q0),
            max_violation: 0.0,
            final_excess: 0.0,
        },
    };
    let windows = windows
        .iter()
        .map(|&(a, b)| {
            let points = window_translate_bound(traj, a, b)?;
            let max_ratio = points
                .iter()
                .filter(|p| p.rhs > 0.0)
                .map(|p| p.lhs / p.rhs)
                .fold(0.0, f64::max);
            Ok(WindowReport {
                window: (a, b),
                max_lhs_over_rhs: max_ratio,
                holds_everywhere: points.iter().all(|p| p.holds),
                final_local_charge: points.last().map_or(0.0, |p| p.lhs),
            })
        })
        .collect::<dirac1d::Result<Vec<_>>>()?;
    let g = &traj.grid;
    let report = Report {
        model: ModelReport {
            name: traj.model.name(),
            w_terms: traj
                .model
                .w_coeffs()
                .iter()
                .map(|(&(j, k), &w)| (j, k, w))
                .collect(),
            gn_coupling: traj.model.gn_coupling(),
        },
        grid: GridReport {
            x_min: g.x_min(),
            x_max: g.x_max(),
            n_cells: g.n_cells(),
            dx: g.dx(),
        },
        solver: &traj.config,
        t_requested: traj.t_requested,
        t_final: traj.t_final,
        n_steps: traj.n_steps,
        glimm_constants: traj.constants,
        smallness_hypothesis_met: traj.constants.hypothesis_met(l0, q0),
        monotonicity,
        linf: linf_bound_check(traj),
        windows,
        boundary_warnings: traj.boundary_warnings.len(),
    };
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &report)?;
    Ok(())
}
