//! Split-step integrator on the `dt = dx` characteristic grid.
//!
//! One step of the default scheme is the palindrome
//!
//! ```text
//! W(dt/2) F(dt/2) | shift u right, v left | F(dt/2) W(dt/2)
//! ```
//!
//! applied cell by cell. `W(tau)` is the exact flow of the potential part: it
//! preserves `|u|` and `|v|`, so it is a phase rotation at frozen moduli. `F(tau)`
//! is the Gross-Neveu part, integrated by the implicit midpoint rule (Picard
//! iteration) or classical RK4.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{CellRange, GridSpec, SpinorField};
use crate::functionals::DiagnosticsRecord;
use crate::models::{GlimmConstants, Model};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Symmetric (Strang) splitting, second order.
    #[default]
    Strang2,
    /// Source then transport, first order.
    Lie1,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FSubstep {
    #[default]
    Midpoint,
    Rk4,
}

/// What to do when the support gets within two cells of the boundary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPolicy {
    #[default]
    Warn,
    Abort,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub f_substep: FSubstep,
    pub max_picard_iters: usize,
    pub picard_tol: f64,
    pub boundary_policy: BoundaryPolicy,
    /// Density below which a cell counts as empty for the boundary check.
    pub boundary_threshold: f64,
    /// Run the per-cell source substep on the rayon pool.
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Strang2,
            f_substep: FSubstep::Midpoint,
            max_picard_iters: 8,
            picard_tol: 1e-12,
            boundary_policy: BoundaryPolicy::Warn,
            boundary_threshold: 1e-24,
            parallel: false,
        }
    }
}

impl SolverConfig {
    pub fn lie1() -> Self {
        Self {
            scheme: Scheme::Lie1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.picard_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "picard_tol must be positive, got {}",
                self.picard_tol
            )));
        }
        if self.max_picard_iters < 1 {
            return Err(Error::InvalidArgument(
                "max_picard_iters must be at least 1".into(),
            ));
        }
        if !(self.boundary_threshold >= 0.0) {
            return Err(Error::InvalidArgument(
                "boundary_threshold must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Order {
    WThenF,
    FThenW,
}

/// Failure inside a single cell's F substep: (iterations, last increment).
type CellFailure = (usize, f64);

fn rotate(z: C64, rate: f64, tau: f64) -> C64 {
    if rate == 0.0 {
        z
    } else {
        z * C64::from_polar(1.0, -rate * tau)
    }
}

fn w_flow(m: &Model, u: &mut C64, v: &mut C64, tau: f64) {
    if m.w_coeffs().is_empty() {
        return;
    }
    let (ps, pr) = m.phase_rates(u.norm_sqr(), v.norm_sqr());
    *u = rotate(*u, ps, tau);
    *v = rotate(*v, pr, tau);
}

/// Right-hand side of `i u' = F1`, `i v' = F2`.
fn f_rhs(m: &Model, u: C64, v: C64) -> (C64, C64) {
    let (f1, f2) = m.eval_f(u, v);
    (-C64::i() * f1, -C64::i() * f2)
}

fn f_flow(
    m: &Model,
    u: &mut C64,
    v: &mut C64,
    tau: f64,
    cfg: &SolverConfig,
) -> std::result::Result<(), CellFailure> {
    if m.is_potential_only() {
        return Ok(());
    }
    match cfg.f_substep {
        FSubstep::Midpoint => {
            let (u0, v0) = (*u, *v);
            let scale = u0.norm() + v0.norm();
            if scale == 0.0 {
                return Ok(());
            }
            let (mut u1, mut v1) = (u0, v0);
            let mut increment = f64::INFINITY;
            for _ in 0..cfg.max_picard_iters {
                let (du, dv) = f_rhs(m, 0.5 * (u0 + u1), 0.5 * (v0 + v1));
                let un = u0 + du * tau;
                let vn = v0 + dv * tau;
                increment = (un - u1).norm().max((vn - v1).norm());
                u1 = un;
                v1 = vn;
                if increment <= cfg.picard_tol * scale {
                    *u = u1;
                    *v = v1;
                    return Ok(());
                }
            }
            Err((cfg.max_picard_iters, increment))
        }
        FSubstep::Rk4 => {
            let (u0, v0) = (*u, *v);
            let (k1u, k1v) = f_rhs(m, u0, v0);
            let (k2u, k2v) = f_rhs(m, u0 + k1u * (tau / 2.0), v0 + k1v * (tau / 2.0));
            let (k3u, k3v) = f_rhs(m, u0 + k2u * (tau / 2.0), v0 + k2v * (tau / 2.0));
            let (k4u, k4v) = f_rhs(m, u0 + k3u * tau, v0 + k3v * tau);
            *u = u0 + (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (tau / 6.0);
            *v = v0 + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (tau / 6.0);
            Ok(())
        }
    }
}

fn source_cell(
    m: &Model,
    u: &mut C64,
    v: &mut C64,
    tau: f64,
    order: Order,
    cfg: &SolverConfig,
) -> std::result::Result<(), CellFailure> {
    match order {
        Order::WThenF => {
            w_flow(m, u, v, tau);
            f_flow(m, u, v, tau, cfg)
        }
        Order::FThenW => {
            f_flow(m, u, v, tau, cfg)?;
            w_flow(m, u, v, tau);
            Ok(())
        }
    }
}

fn source(
    f: &mut SpinorField,
    m: &Model,
    tau: f64,
    order: Order,
    cfg: &SolverConfig,
) -> Result<()> {
    let t = f.t;
    let fail = |cell: usize, (iters, increment): CellFailure| Error::PicardDivergence {
        cell,
        t,
        iters,
        increment,
    };
    if cfg.parallel {
        f.u.par_iter_mut()
            .zip(f.v.par_iter_mut())
            .enumerate()
            .try_for_each(|(i, (u, v))| {
                source_cell(m, u, v, tau, order, cfg).map_err(|e| fail(i, e))
            })
    } else {
        for (i, (u, v)) in f.u.iter_mut().zip(f.v.iter_mut()).enumerate() {
            source_cell(m, u, v, tau, order, cfg).map_err(|e| fail(i, e))?;
        }
        Ok(())
    }
}

/// Exact transport: `u` one cell right, `v` one cell left, zeros flow in.
fn transport(f: &mut SpinorField, forward: bool) {
    let zero = C64::new(0.0, 0.0);
    let (right, left) = if forward {
        (&mut f.u, &mut f.v)
    } else {
        (&mut f.v, &mut f.u)
    };
    right.rotate_right(1);
    right[0] = zero;
    left.rotate_left(1);
    let n = left.len();
    left[n - 1] = zero;
    f.t += if forward { f.grid.dt() } else { -f.grid.dt() };
}

fn near_boundary(f: &SpinorField, threshold: f64) -> bool {
    let n = f.grid.n_cells();
    match f.support_cells(threshold) {
        None => false,
        Some((lo, hi)) => lo < 2 || hi + 3 > n,
    }
}

fn advance(f: &SpinorField, m: &Model, cfg: &SolverConfig, forward: bool) -> Result<SpinorField> {
    cfg.validate()?;
    let mut next = f.clone();
    let dt = f.grid.dt();
    let sign = if forward { 1.0 } else { -1.0 };
    match (cfg.scheme, forward) {
        (Scheme::Strang2, _) => {
            source(&mut next, m, sign * dt / 2.0, Order::WThenF, cfg)?;
            transport(&mut next, forward);
            source(&mut next, m, sign * dt / 2.0, Order::FThenW, cfg)?;
        }
        (Scheme::Lie1, true) => {
            source(&mut next, m, dt, Order::WThenF, cfg)?;
            transport(&mut next, true);
        }
        (Scheme::Lie1, false) => {
            transport(&mut next, false);
            source(&mut next, m, -dt, Order::FThenW, cfg)?;
        }
    }
    Ok(next)
}

/// Advances the field by one step `dt = dx`.
pub fn step(f: &SpinorField, m: &Model, cfg: &SolverConfig) -> Result<SpinorField> {
    if near_boundary(f, cfg.boundary_threshold) {
        match cfg.boundary_policy {
            BoundaryPolicy::Abort => return Err(Error::BoundaryReached { t: f.t }),
            BoundaryPolicy::Warn => {
                log::warn!("support within two cells of the boundary at t = {}", f.t)
            }
        }
    }
    advance(f, m, cfg, true)
}

/// Exact inverse of [`step`] (negated source times, reversed shifts), up to
/// rounding and the Picard tolerance, provided nothing left through the boundary.
pub fn step_back(f: &SpinorField, m: &Model, cfg: &SolverConfig) -> Result<SpinorField> {
    advance(f, m, cfg, false)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Keep every `snapshot_stride`-th field (the initial and final fields are always kept).
    pub snapshot_stride: usize,
    /// Windows `(a, b)` whose local charge is recorded each step.
    pub windows: Vec<(f64, f64)>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            snapshot_stride: 1,
            windows: Vec::new(),
        }
    }
}

impl EvolveOptions {
    pub fn stride(snapshot_stride: usize) -> Self {
        Self {
            snapshot_stride,
            windows: Vec::new(),
        }
    }
}

/// Component supports (density above zero) at one time level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StepSupport {
    pub u: Option<CellRange>,
    pub v: Option<CellRange>,
    pub total: Option<CellRange>,
}

impl StepSupport {
    pub fn of(f: &SpinorField) -> Self {
        Self {
            u: f.support_cells_u(0.0),
            v: f.support_cells_v(0.0),
            total: f.support_cells(0.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub model: Model,
    pub grid: GridSpec,
    pub config: SolverConfig,
    pub constants: GlimmConstants,
    /// Final time actually reached (the requested time rounded up to a whole step).
    pub t_final: f64,
    pub t_requested: f64,
    pub n_steps: usize,
    pub snapshots: Vec<SpinorField>,
    /// One record per time level, `n_steps + 1` in total.
    pub records: Vec<DiagnosticsRecord>,
    pub supports: Vec<StepSupport>,
    /// Times at which the support was near the boundary.
    pub boundary_warnings: Vec<f64>,
}

impl Trajectory {
    pub fn initial(&self) -> &SpinorField {
        &self.snapshots[0]
    }

    pub fn final_field(&self) -> &SpinorField {
        self.snapshots.last().expect("trajectory has snapshots")
    }

    /// Snapshot whose time is within `1e-9 dx` of `t`.
    pub fn snapshot_at(&self, t: f64) -> Option<&SpinorField> {
        let tol = 1e-9 * self.grid.dx();
        self.snapshots.iter().find(|s| (s.t - t).abs() <= tol)
    }
}

/// Number of steps needed to reach `t_final`; non-multiples of `dx` round up.
pub fn steps_for(grid: &GridSpec, t_final: f64) -> usize {
    let ratio = t_final / grid.dt();
    let n = ratio.round();
    if (ratio - n).abs() <= 1e-9 * ratio.max(1.0) {
        n as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Evolves `f0` to `t_final`, recording diagnostics at every time level.
pub fn evolve(
    f0: &SpinorField,
    m: &Model,
    t_final: f64,
    cfg: &SolverConfig,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "final time must be positive, got {t_final}"
        )));
    }
    if opts.snapshot_stride == 0 {
        return Err(Error::InvalidArgument(
            "snapshot_stride must be at least 1".into(),
        ));
    }
    for &(a, b) in &opts.windows {
        if !(a < b) {
            return Err(Error::InvalidArgument(format!(
                "window needs a < b, got ({a}, {b})"
            )));
        }
    }
    cfg.validate()?;
    let grid = f0.grid;
    let n_steps = steps_for(&grid, t_final);
    let t_reached = f0.t + n_steps as f64 * grid.dt();
    if (t_reached - f0.t - t_final).abs() > 1e-9 * grid.dt() {
        log::info!("final time {t_final} rounded up to {t_reached} ({n_steps} steps)");
    }
    let constants = m.glimm_constants();

    let mut current = f0.clone();
    let mut records = Vec::with_capacity(n_steps + 1);
    let mut supports = Vec::with_capacity(n_steps + 1);
    let mut snapshots = vec![current.clone()];
    let mut boundary_warnings = Vec::new();
    records.push(DiagnosticsRecord::compute(
        &current,
        constants.k,
        &opts.windows,
        None,
    ));
    supports.push(StepSupport::of(&current));

    for n in 1..=n_steps {
        if near_boundary(&current, cfg.boundary_threshold) {
            if cfg.boundary_policy == BoundaryPolicy::Abort {
                return Err(Error::BoundaryReached { t: current.t });
            }
            if boundary_warnings.is_empty() {
                log::warn!(
                    "support within two cells of the boundary at t = {}",
                    current.t
                );
            }
            boundary_warnings.push(current.t);
        }
        current = advance(&current, m, cfg, true)?;
        // Re-derive time from the step count so snapshot times do not drift.
        current.t = f0.t + n as f64 * grid.dt();
        let prev = records.last();
        let rec = DiagnosticsRecord::compute(&current, constants.k, &opts.windows, prev);
        records.push(rec);
        supports.push(StepSupport::of(&current));
        if n % opts.snapshot_stride == 0 || n == n_steps {
            snapshots.push(current.clone());
        }
    }

    Ok(Trajectory {
        model: m.clone(),
        grid,
        config: *cfg,
        constants,
        t_final: current.t,
        t_requested: t_final,
        n_steps,
        snapshots,
        records,
        supports,
        boundary_warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{init_field, Profile};
    use crate::functionals::charge_l;

    fn grid() -> GridSpec {
        GridSpec::new(-8.0, 8.0, 256).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_field_stays_zero() {
        let f = SpinorField::zeros(grid());
        for m in [
            Model::thirring(1.0),
            Model::gross_neveu(1.0),
            Model::federbusch(1.0),
        ] {
            let g = step(&f, &m, &SolverConfig::default()).unwrap();
            assert!(g.u.iter().chain(&g.v).all(|z| *z == c(0.0, 0.0)));
            assert_eq!(g.t, f.grid.dt());
        }
    }

    #[test]
    fn free_right_mover_is_an_exact_shift() {
        let g = grid();
        let pu = Profile::bump(c(0.8, 0.3), -3.0, 1.0);
        let f0 = init_field(g, &pu, &Profile::Zero).unwrap();
        for m in [
            Model::thirring(2.0),
            Model::gross_neveu(1.0),
            Model::federbusch(1.5),
        ] {
            let mut f = f0.clone();
            for _ in 0..40 {
                f = step(&f, &m, &SolverConfig::default()).unwrap();
            }
            for i in 0..g.n_cells() {
                let expect = if i >= 40 { f0.u[i - 40] } else { c(0.0, 0.0) };
                assert_eq!(f.u[i], expect);
                assert_eq!(f.v[i], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn potential_models_transport_moduli() {
        let g = grid();
        let pu = Profile::bump(c(0.9, 0.0), -2.0, 1.5);
        let pv = Profile::bump(c(0.0, 0.7), 2.0, 1.5);
        let f0 = init_field(g, &pu, &pv).unwrap();
        for m in [Model::thirring(1.0), Model::federbusch(1.0)] {
            let f1 = step(&f0, &m, &SolverConfig::default()).unwrap();
            for i in 1..g.n_cells() - 1 {
                assert!((f1.u[i].norm() - f0.u[i - 1].norm()).abs() <= 1e-15);
                assert!((f1.v[i].norm() - f0.v[i + 1].norm()).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn gross_neveu_midpoint_conserves_cell_charge() {
        let m = Model::gross_neveu(1.0);
        let cfg = SolverConfig::default();
        let (mut u, mut v) = (c(0.3, 0.1), c(0.2, -0.25));
        let before = u.norm_sqr() + v.norm_sqr();
        f_flow(&m, &mut u, &mut v, 0.05, &cfg).unwrap();
        let after = u.norm_sqr() + v.norm_sqr();
        assert!((after - before).abs() <= 1e-15);
        assert!((u - c(0.3, 0.1)).norm() > 1e-6);
    }

    #[test]
    fn rk4_and_midpoint_agree_to_high_order() {
        let m = Model::gross_neveu(1.0);
        let (u0, v0) = (c(0.3, 0.1), c(0.2, -0.25));
        let (mut um, mut vm) = (u0, v0);
        let (mut ur, mut vr) = (u0, v0);
        let mid = SolverConfig::default();
        let rk = SolverConfig {
            f_substep: FSubstep::Rk4,
            ..mid
        };
        f_flow(&m, &mut um, &mut vm, 0.01, &mid).unwrap();
        f_flow(&m, &mut ur, &mut vr, 0.01, &rk).unwrap();
        // midpoint local error is O(tau^3)
        assert!((um - ur).norm() < 1e-6);
    }

    #[test]
    fn picard_divergence_is_reported() {
        let m = Model::gross_neveu(1.0);
        let cfg = SolverConfig {
            max_picard_iters: 50,
            ..SolverConfig::default()
        };
        let g = GridSpec::new(-8.0, 8.0, 16).unwrap();
        let mut f = SpinorField::zeros(g);
        f.u[8] = c(10.0, 0.0);
        f.v[8] = c(5.0, 5.0);
        match step(&f, &m, &cfg) {
            Err(Error::PicardDivergence { cell, .. }) => assert_eq!(cell, 8),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn boundary_policy() {
        let g = GridSpec::new(0.0, 1.0, 32).unwrap();
        let mut f = SpinorField::zeros(g);
        f.u[30] = c(0.1, 0.0);
        let abort = SolverConfig {
            boundary_policy: BoundaryPolicy::Abort,
            ..SolverConfig::default()
        };
        assert!(matches!(
            step(&f, &Model::thirring(1.0), &abort),
            Err(Error::BoundaryReached { .. })
        ));
        let traj = evolve(
            &f,
            &Model::thirring(1.0),
            3.0 / 32.0,
            &SolverConfig::default(),
            &EvolveOptions::default(),
        )
        .unwrap();
        assert!(!traj.boundary_warnings.is_empty());
        // zero inflow: the pulse leaves the domain
        assert_eq!(charge_l(traj.final_field()), 0.0);
    }

    #[test]
    fn evolve_rounds_final_time_up() {
        let g = GridSpec::new(0.0, 1.0, 10).unwrap();
        let f = SpinorField::zeros(g);
        let traj = evolve(
            &f,
            &Model::thirring(1.0),
            0.25,
            &SolverConfig::default(),
            &EvolveOptions::stride(2),
        )
        .unwrap();
        assert_eq!(traj.n_steps, 3);
        assert!((traj.t_final - 0.3).abs() < 1e-15);
        assert_eq!(traj.records.len(), 4);
        // t = 0, 0.2 and the final 0.3
        assert_eq!(traj.snapshots.len(), 3);
        assert!(traj.records.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(steps_for(&g, 0.3), 3);
        assert!(evolve(
            &f,
            &Model::thirring(1.0),
            0.0,
            &SolverConfig::default(),
            &EvolveOptions::default()
        )
        .is_err());
    }

    #[test]
    fn parallel_source_is_bit_identical() {
        let g = GridSpec::new(-8.0, 8.0, 512).unwrap();
        let pu = Profile::bump(c(0.2, 0.05), -1.0, 1.5);
        let pv = Profile::bump(c(0.1, 0.15), 1.0, 1.5);
        let f0 = init_field(g, &pu, &pv).unwrap();
        let m = Model::new("mixed", [(1, 1, 0.7), (2, 1, 0.2)], 0.9).unwrap();
        let seq = SolverConfig::default();
        let par = SolverConfig {
            parallel: true,
            ..seq
        };
        let a = evolve(&f0, &m, 2.0, &seq, &EvolveOptions::stride(64)).unwrap();
        let b = evolve(&f0, &m, 2.0, &par, &EvolveOptions::stride(64)).unwrap();
        assert_eq!(a.snapshots, b.snapshots);
    }

    #[test]
    fn forward_then_backward_returns_initial_data() {
        let g = grid();
        let pu = Profile::bump(c(0.6, 0.2), -2.0, 1.5);
        let pv = Profile::bump(c(0.3, -0.5), 2.0, 1.5);
        let f0 = init_field(g, &pu, &pv).unwrap();
        for (m, cfg) in [
            (Model::thirring(1.5), SolverConfig::default()),
            (Model::federbusch(1.0), SolverConfig::lie1()),
            (Model::gross_neveu(0.5), SolverConfig::default()),
        ] {
            let mut f = f0.clone();
            for _ in 0..64 {
                f = step(&f, &m, &cfg).unwrap();
            }
            for _ in 0..64 {
                f = step_back(&f, &m, &cfg).unwrap();
            }
            let err = f.l2_distance(&f0);
            assert!(err < 1e-10, "{}: {err:e}", m.name());
            assert!(f.t.abs() < 1e-12);
        }
    }
}
