//! Reference solutions and numerical studies.
//!
//! Nothing here calls into the solver's internals: the Thirring oracle integrates
//! the phase along characteristics by adaptive quadrature, and the Bony oracle is
//! a plain double loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::field::{init_field, GridSpec, Profile, SpinorField};
use crate::functionals::{local_charge, window_translate_bound};
use crate::models::Model;
use crate::solver::{evolve, step, steps_for, BoundaryPolicy, EvolveOptions, SolverConfig};
use crate::{Error, Result, C64};

/// Absolute tolerance of the oracle quadratures.
pub const QUADRATURE_TOL: f64 = 1e-12;

/// Largest grid the quadratic-cost Bony oracle accepts.
pub const BONY_ORACLE_LIMIT: usize = 4096;

const PANELS: usize = 64;
const MAX_DEPTH: u32 = 48;

#[allow(clippy::too_many_arguments)]
fn simpson_panel<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || !delta.is_finite() {
        return Err(Error::Quadrature {
            a,
            b,
            msg: format!("no convergence, last estimate change {delta:e}"),
        });
    }
    Ok(
        simpson_panel(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
            + simpson_panel(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?,
    )
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`, started from a
/// uniform partition so that narrow compact features are not stepped over.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let h = (b - a) / PANELS as f64;
    let panel_tol = tol / PANELS as f64;
    let mut total = 0.0;
    for p in 0..PANELS {
        let lo = a + p as f64 * h;
        let hi = if p + 1 == PANELS { b } else { lo + h };
        let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson_panel(&f, lo, hi, fa, fm, fb, whole, panel_tol, MAX_DEPTH)?;
    }
    Ok(total)
}

fn analytic(p: &Profile) -> Result<&Profile> {
    if matches!(p, Profile::FromFile { .. }) {
        return Err(Error::InvalidProfile(
            "the Thirring oracle needs an analytic profile".into(),
        ));
    }
    p.validate()?;
    Ok(p)
}

/// Semi-analytic Thirring solution at `(x, t)`:
///
/// ```text
/// u(x,t) = u0(x - t) exp(-i alpha int_0^t |v0(x - t + 2s)|^2 ds)
/// v(x,t) = v0(x + t) exp(-i alpha int_0^t |u0(x + t - 2s)|^2 ds)
/// ```
pub fn thirring_exact(
    u0: &Profile,
    v0: &Profile,
    alpha: f64,
    x: f64,
    t: f64,
) -> Result<(C64, C64)> {
    let (u0, v0) = (analytic(u0)?, analytic(v0)?);
    let uval = |y: f64| u0.value_at(y).expect("analytic");
    let vval = |y: f64| v0.value_at(y).expect("analytic");
    let zero = C64::new(0.0, 0.0);

    let ub = uval(x - t);
    let u = if ub == zero || alpha == 0.0 || t == 0.0 {
        ub
    } else {
        let phase = integrate(|s| vval(x - t + 2.0 * s).norm_sqr(), 0.0, t, QUADRATURE_TOL)?;
        ub * C64::from_polar(1.0, -alpha * phase)
    };
    let vb = vval(x + t);
    let v = if vb == zero || alpha == 0.0 || t == 0.0 {
        vb
    } else {
        let phase = integrate(|s| uval(x + t - 2.0 * s).norm_sqr(), 0.0, t, QUADRATURE_TOL)?;
        vb * C64::from_polar(1.0, -alpha * phase)
    };
    Ok((u, v))
}

/// Discrete L2 distance between a field and the Thirring oracle at its cell centres.
pub fn thirring_error(f: &SpinorField, u0: &Profile, v0: &Profile, alpha: f64) -> Result<f64> {
    let g = &f.grid;
    let sq: Vec<f64> = (0..g.n_cells())
        .into_par_iter()
        .map(|i| {
            let (ue, ve) = thirring_exact(u0, v0, alpha, g.x(i), f.t)?;
            Ok((f.u[i] - ue).norm_sqr() + (f.v[i] - ve).norm_sqr())
        })
        .collect::<Result<_>>()?;
    Ok((g.dx() * sq.iter().sum::<f64>()).sqrt())
}

/// Reference Bony functional by direct double loop.
pub fn bony_q_oracle(f: &SpinorField) -> Result<f64> {
    let n = f.grid.n_cells();
    if n > BONY_ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            n,
            limit: BONY_ORACLE_LIMIT,
        });
    }
    let mut total = 0.0;
    for j in 0..n {
        let vj = f.v[j].norm_sqr();
        let mut row = 0.0;
        for i in 0..j {
            row += f.u[i].norm_sqr() * vj;
        }
        total += row;
    }
    let dx = f.grid.dx();
    Ok(dx * dx * total)
}

/// Lower estimate of the interaction constant by random sampling of
/// `(|conj(u) F1| + |conj(v) F2|) / (|u|^2 |v|^2)`.
pub fn estimate_c_by_sampling(m: &Model, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let u = C64::from_polar(
            rng.gen_range(0.1..2.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let v = C64::from_polar(
            rng.gen_range(0.1..2.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let (f1, f2) = m.eval_f(u, v);
        let ratio =
            ((u.conj() * f1).norm() + (v.conj() * f2).norm()) / (u.norm_sqr() * v.norm_sqr());
        best = best.max(ratio);
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceReference {
    /// Errors against the semi-analytic Thirring solution, one per resolution.
    ThirringExact,
    /// Self-convergence: `errors[k]` compares resolution `k` with resolution `k + 1`.
    Richardson,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceResult {
    pub reference: ConvergenceReference,
    pub resolutions: Vec<usize>,
    pub errors: Vec<f64>,
    /// `log2(e_k / e_{k+1})`; `+inf` when both errors vanish.
    pub observed_orders: Vec<f64>,
}

impl ConvergenceResult {
    pub fn min_order(&self) -> f64 {
        self.observed_orders
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

fn order(e0: f64, e1: f64) -> f64 {
    if e0 == 0.0 && e1 == 0.0 {
        f64::INFINITY
    } else {
        (e0 / e1).log2()
    }
}

/// Restricts a field to the grid with half as many cells (pairwise averages).
fn restrict(fine: &SpinorField, coarse: &GridSpec) -> SpinorField {
    let avg = |z: &[C64]| -> Vec<C64> { z.chunks_exact(2).map(|p| (p[0] + p[1]) * 0.5).collect() };
    SpinorField {
        grid: *coarse,
        u: avg(&fine.u),
        v: avg(&fine.v),
        t: fine.t,
    }
}

/// Refinement study over dyadic `resolutions` on the domain of `domain`.
///
/// Pure Thirring models are measured against [`thirring_exact`]; all other models
/// fall back to Richardson self-convergence.
pub fn convergence_study(
    m: &Model,
    pu: &Profile,
    pv: &Profile,
    domain: &GridSpec,
    t_final: f64,
    resolutions: &[usize],
    cfg: &SolverConfig,
) -> Result<ConvergenceResult> {
    if resolutions.len() < 3 {
        return Err(Error::InvalidArgument("need at least 3 resolutions".into()));
    }
    if resolutions.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidArgument("resolutions must double".into()));
    }
    let finals: Vec<SpinorField> = resolutions
        .par_iter()
        .map(|&n| {
            let g = domain.with_cells(n)?;
            let f0 = init_field(g, pu, pv)?;
            let traj = evolve(&f0, m, t_final, cfg, &EvolveOptions::stride(usize::MAX))?;
            Ok(traj.final_field().clone())
        })
        .collect::<Result<_>>()?;

    let (reference, errors) = match m.thirring_alpha() {
        Some(alpha) => {
            let errors = finals
                .iter()
                .map(|f| thirring_error(f, pu, pv, alpha))
                .collect::<Result<Vec<_>>>()?;
            (ConvergenceReference::ThirringExact, errors)
        }
        None => {
            let errors = finals
                .windows(2)
                .map(|w| w[0].l2_distance(&restrict(&w[1], &w[0].grid)))
                .collect();
            (ConvergenceReference::Richardson, errors)
        }
    };
    let observed_orders = errors.windows(2).map(|w| order(w[0], w[1])).collect();
    Ok(ConvergenceResult {
        reference,
        resolutions: resolutions.to_vec(),
        errors,
        observed_orders,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayPoint {
    pub t: f64,
    pub local_charge: f64,
    /// Translated-window bound at this time.
    pub bound: f64,
    pub bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayStudy {
    pub window: (f64, f64),
    /// Time after which no initially occupied cell can map into the window.
    pub exit_time: f64,
    pub series: Vec<DecayPoint>,
}

impl DecayStudy {
    /// Largest local charge strictly after the exit time.
    pub fn tail_max(&self) -> f64 {
        self.series
            .iter()
            .filter(|p| p.t > self.exit_time)
            .map(|p| p.local_charge)
            .fold(0.0, f64::max)
    }
}

/// Local charge in `window` over time, with the translated-window bound at each step.
pub fn decay_study(
    m: &Model,
    pu: &Profile,
    pv: &Profile,
    grid: &GridSpec,
    window: (f64, f64),
    t_final: f64,
    cfg: &SolverConfig,
) -> Result<DecayStudy> {
    let (a, b) = window;
    if !(a < b) {
        return Err(Error::InvalidArgument(format!(
            "window needs a < b, got ({a}, {b})"
        )));
    }
    for p in [pu, pv] {
        if !matches!(p, Profile::Bump { .. } | Profile::Zero) {
            return Err(Error::InvalidProfile(
                "decay study needs compact profiles".into(),
            ));
        }
    }
    let f0 = init_field(*grid, pu, pv)?;
    let steps = steps_for(grid, t_final);
    let n = grid.n_cells();
    let u_sup = f0.support_cells_u(0.0);
    let v_sup = f0.support_cells_v(0.0);
    if u_sup.is_some_and(|(_, hi)| hi + steps + 2 >= n)
        || v_sup.is_some_and(|(lo, _)| lo < steps + 2)
    {
        return Err(Error::InvalidArgument(format!(
            "domain too small: support reaches the boundary before t = {t_final}"
        )));
    }
    let exit_u = u_sup.map_or(0.0, |(lo, _)| b - grid.x(lo));
    let exit_v = v_sup.map_or(0.0, |(_, hi)| grid.x(hi) - a);
    let exit_time = exit_u.max(exit_v).max(0.0);

    let cfg = SolverConfig {
        boundary_policy: BoundaryPolicy::Abort,
        boundary_threshold: 0.0,
        ..*cfg
    };
    let traj = evolve(&f0, m, t_final, &cfg, &EvolveOptions::stride(1))?;
    let bounds = window_translate_bound(&traj, a, b)?;
    let series = traj
        .snapshots
        .iter()
        .zip(bounds)
        .map(|(s, wb)| {
            Ok(DecayPoint {
                t: s.t,
                local_charge: local_charge(s, a, b)?,
                bound: wb.rhs,
                bound_holds: wb.holds,
            })
        })
        .collect::<Result<_>>()?;
    Ok(DecayStudy {
        window,
        exit_time,
        series,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthStudy {
    /// `(t, ||(u', v') - (u'', v'')||_L2)` at every step.
    pub series: Vec<(f64, f64)>,
    pub d0: f64,
    /// Least-squares rate of `log(d / d0) = lambda t`.
    pub lambda: f64,
    /// `max_t d(t) / (d0 exp(lambda t))`.
    pub max_ratio: f64,
    /// Largest pointwise density seen in either run.
    pub linf: (f64, f64),
}

/// Runs the base data and `base + eps * perturbation` side by side.
pub fn perturbation_growth(
    m: &Model,
    base: (&Profile, &Profile),
    perturbation: (&Profile, &Profile),
    eps: f64,
    grid: &GridSpec,
    t_final: f64,
    cfg: &SolverConfig,
) -> Result<GrowthStudy> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "eps must be non-negative, got {eps}"
        )));
    }
    let f0 = init_field(*grid, base.0, base.1)?;
    let p = init_field(*grid, perturbation.0, perturbation.1)?;
    let mut g0 = f0.clone();
    for (z, dz) in g0.u.iter_mut().zip(&p.u).chain(g0.v.iter_mut().zip(&p.v)) {
        *z += dz * eps;
    }
    let steps = steps_for(grid, t_final);
    let (mut f, mut g) = (f0, g0);
    let mut series = Vec::with_capacity(steps + 1);
    let mut linf = (f.linf_norm(), g.linf_norm());
    series.push((f.t, f.l2_distance(&g)));
    for _ in 0..steps {
        f = step(&f, m, cfg)?;
        g = step(&g, m, cfg)?;
        linf = (linf.0.max(f.linf_norm()), linf.1.max(g.linf_norm()));
        series.push((f.t, f.l2_distance(&g)));
    }
    let d0 = series[0].1;
    let (lambda, max_ratio) = if d0 == 0.0 {
        (
            0.0,
            if series.iter().all(|&(_, d)| d == 0.0) {
                1.0
            } else {
                f64::INFINITY
            },
        )
    } else {
        let (num, den) = series.iter().fold((0.0, 0.0), |(n, d), &(t, dist)| {
            (n + t * (dist / d0).ln(), d + t * t)
        });
        let lambda = if den > 0.0 { num / den } else { 0.0 };
        let ratio = series
            .iter()
            .map(|&(t, dist)| dist / (d0 * (lambda * t).exp()))
            .fold(0.0, f64::max);
        (lambda, ratio)
    };
    Ok(GrowthStudy {
        series,
        d0,
        lambda,
        max_ratio,
        linf,
    })
}

/// Random field with entries uniform in the unit square (seeded).
pub fn random_field(grid: GridSpec, seed: u64) -> SpinorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n_cells();
    let mut next = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let u = (0..n).map(|_| next()).collect();
    let v = (0..n).map(|_| next()).collect();
    SpinorField { grid, u, v, t: 0.0 }
}
