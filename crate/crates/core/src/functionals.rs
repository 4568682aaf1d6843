//! Charge, interaction functionals and the bound checks run on trajectories.
//!
//! All quadratures use cell-centre collocation:
//!
//! - `L = dx * sum (|u_i|^2 + |v_i|^2)`
//! - `Q = dx^2 * sum_{i<j} |u_i|^2 |v_j|^2` (strictly ordered pairs, diagonal excluded)
//! - `D = dx * sum |u_i|^2 |v_i|^2`
//!
//! Windows `[a, b]` take every cell whose centre lies in the closed interval,
//! without partial-cell weighting.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::field::SpinorField;
use crate::solver::Trajectory;
use crate::{Error, Result};

/// Additive slack on the pointwise amplification bound.
pub const LINF_SLACK: f64 = 1e-10;
/// Slack added to the amplification constant of the translated-window bound.
pub const WINDOW_SLACK: f64 = 1e-10;

pub fn charge_l(f: &SpinorField) -> f64 {
    f.grid.dx() * f.density().sum::<f64>()
}

/// Bony functional in O(N) with a running prefix sum of `|u_i|^2`.
pub fn bony_q(f: &SpinorField) -> f64 {
    let mut left_u = 0.0;
    let mut acc = 0.0;
    for (u, v) in f.u.iter().zip(&f.v) {
        acc += v.norm_sqr() * left_u;
        left_u += u.norm_sqr();
    }
    let dx = f.grid.dx();
    dx * dx * acc
}

pub fn interaction_d(f: &SpinorField) -> f64 {
    let s: f64 =
        f.u.iter()
            .zip(&f.v)
            .map(|(u, v)| u.norm_sqr() * v.norm_sqr())
            .sum();
    f.grid.dx() * s
}

/// `L + K Q`; `K` must be positive.
pub fn glimm_value(f: &SpinorField, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "K must be positive, got {k}"
        )));
    }
    Ok(charge_l(f) + k * bony_q(f))
}

/// Charge in the cells with centres in `[a, b]`.
pub fn local_charge(f: &SpinorField, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::InvalidArgument(format!(
            "window needs a < b, got ({a}, {b})"
        )));
    }
    let range = f.grid.cells_in(a, b);
    let s: f64 = f.u[range.clone()]
        .iter()
        .zip(&f.v[range])
        .map(|(u, v)| u.norm_sqr() + v.norm_sqr())
        .sum();
    Ok(f.grid.dx() * s)
}

/// Diagnostics at one time level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub glimm: f64,
    pub linf: f64,
    pub local_charges: Vec<((f64, f64), f64)>,
    /// Trapezoidal `int_0^t D`.
    pub cumulative_d: f64,
}

impl DiagnosticsRecord {
    /// Windows are assumed valid (`a < b`); `prev` is the record of the previous
    /// time level, used for the running integral of `D`.
    pub fn compute(
        f: &SpinorField,
        k: f64,
        windows: &[(f64, f64)],
        prev: Option<&DiagnosticsRecord>,
    ) -> Self {
        let l = charge_l(f);
        let q = bony_q(f);
        let d = interaction_d(f);
        let local_charges = windows
            .iter()
            .map(|&(a, b)| ((a, b), local_charge(f, a, b).unwrap_or(0.0)))
            .collect();
        let cumulative_d = match prev {
            None => 0.0,
            Some(p) => p.cumulative_d + 0.5 * (p.d + d) * (f.t - p.t),
        };
        Self {
            t: f.t,
            l,
            q,
            d,
            glimm: l + k * q,
            linf: f.linf_norm(),
            local_charges,
            cumulative_d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    #[serde(rename = "K")]
    pub k: f64,
    /// `None` when no smallness is required (`c = 0`).
    pub delta: Option<f64>,
    pub l0: f64,
    pub q0: f64,
    pub hypothesis_met: bool,
    /// `max_t [L + K Q + int_0^t D](t) - [L + K Q](0)`; includes `t = 0`, so never negative.
    pub max_violation: f64,
    /// `(t, excess)` per recorded step.
    pub series: Vec<(f64, f64)>,
}

/// Measures the discrete excess of the Glimm dissipation inequality.
pub fn check_monotonicity(traj: &Trajectory) -> Result<MonotonicityReport> {
    let first = traj.records.first().ok_or(Error::EmptyTrajectory)?;
    if traj.records.len() < 2 {
        return Err(Error::EmptyTrajectory);
    }
    let k = traj.constants.k;
    let base = first.l + k * first.q;
    let series: Vec<(f64, f64)> = traj
        .records
        .iter()
        .map(|r| (r.t, r.l + k * r.q + r.cumulative_d - base))
        .collect();
    let max_violation = series
        .iter()
        .map(|&(_, e)| e)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MonotonicityReport {
        k,
        delta: traj.constants.delta,
        l0: first.l,
        q0: first.q,
        hypothesis_met: traj.constants.hypothesis_met(first.l, first.q),
        max_violation,
        series,
    })
}

/// Quadratures over the backward cone of `(x0, t0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConeFluxes {
    /// `int_{Gamma_R} |u|^2 ds` with arc length `ds = sqrt2 dt`.
    pub gamma_r_u: f64,
    /// `int_{Gamma_L} |v|^2 ds`.
    pub gamma_l_v: f64,
    /// `int int_Omega |u|^2 |v|^2 dx dt`.
    pub omega_uv: f64,
    /// `int_{x0-t0}^{x0+t0} |u_0|^2 dx`.
    pub base_u: f64,
    pub base_v: f64,
}

impl ConeFluxes {
    /// `sqrt2 int_{Gamma_R} |u|^2 - int_base |u_0|^2`; vanishes in the continuum when `F = 0`.
    pub fn identity_residual_u(&self) -> f64 {
        SQRT_2 * self.gamma_r_u - self.base_u
    }

    pub fn identity_residual_v(&self) -> f64 {
        SQRT_2 * self.gamma_l_v - self.base_v
    }

    /// `sqrt2 int_{Gamma_R} |u|^2 - (2c int int |u|^2|v|^2 + int_base |u_0|^2)`; the
    /// continuum inequality says this is `<= 0`.
    pub fn excess_u(&self, c: f64) -> f64 {
        SQRT_2 * self.gamma_r_u - (2.0 * c * self.omega_uv + self.base_u)
    }

    pub fn excess_v(&self, c: f64) -> f64 {
        SQRT_2 * self.gamma_l_v - (2.0 * c * self.omega_uv + self.base_v)
    }
}

/// Linear interpolation of a per-cell quantity at `x`; zero outside the cell centres.
fn interpolate(f: &SpinorField, values: &[f64], x: f64) -> f64 {
    let g = &f.grid;
    let p = (x - g.x_min()) / g.dx() - 0.5;
    let i = p.floor();
    let w = p - i;
    let at = |j: f64| {
        if j < 0.0 || j >= values.len() as f64 {
            0.0
        } else {
            values[j as usize]
        }
    };
    (1.0 - w) * at(i) + w * at(i + 1.0)
}

/// Boundary, interior and base integrals of the backward cone
/// `{0 < t < t0, |x - x0| < t0 - t}`. Time integrals use the trapezoid rule over the
/// stored snapshots, so the trajectory should be recorded with stride 1.
pub fn cone_boundary_flux(traj: &Trajectory, x0: f64, t0: f64) -> Result<ConeFluxes> {
    let out = |msg: &str| Error::ConeOutOfRange {
        x0,
        t0,
        msg: msg.to_string(),
    };
    let g = &traj.grid;
    let dx = g.dx();
    if !(t0 > 0.0) {
        return Err(out("t0 must be positive"));
    }
    let steps = t0 / dx;
    if (steps - steps.round()).abs() > 1e-6 {
        return Err(out("t0 must be a multiple of dx"));
    }
    if t0 > traj.t_final + 1e-9 * dx {
        return Err(out("t0 beyond the final time"));
    }
    if x0 - t0 < g.x_min() || x0 + t0 > g.x_max() {
        return Err(out("cone base leaves the domain"));
    }
    if traj.snapshot_at(t0).is_none() {
        return Err(out("no snapshot at the apex time"));
    }
    let initial = traj.initial();
    let slices: Vec<&SpinorField> = traj
        .snapshots
        .iter()
        .filter(|s| s.t <= t0 + 1e-9 * dx)
        .collect();

    let mut gr = Vec::with_capacity(slices.len());
    let mut gl = Vec::with_capacity(slices.len());
    let mut om = Vec::with_capacity(slices.len());
    for s in &slices {
        let h = t0 - s.t;
        let du: Vec<f64> = s.u.iter().map(|z| z.norm_sqr()).collect();
        let dv: Vec<f64> = s.v.iter().map(|z| z.norm_sqr()).collect();
        gr.push(interpolate(s, &du, x0 + h));
        gl.push(interpolate(s, &dv, x0 - h));
        let range = g.cells_in(x0 - h, x0 + h);
        om.push(dx * range.map(|i| du[i] * dv[i]).sum::<f64>());
    }
    let trapezoid = |vals: &[f64]| -> f64 {
        slices
            .windows(2)
            .zip(vals.windows(2))
            .map(|(s, v)| 0.5 * (v[0] + v[1]) * (s[1].t - s[0].t))
            .sum()
    };
    let base = g.cells_in(x0 - t0, x0 + t0);
    Ok(ConeFluxes {
        gamma_r_u: SQRT_2 * trapezoid(&gr),
        gamma_l_v: SQRT_2 * trapezoid(&gl),
        omega_uv: trapezoid(&om),
        base_u: dx * base.clone().map(|i| initial.u[i].norm_sqr()).sum::<f64>(),
        base_v: dx * base.map(|i| initial.v[i].norm_sqr()).sum::<f64>(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinfBoundReport {
    /// `sup_t max_i (|u_i|^2 + |v_i|^2)` over every recorded step.
    pub observed_sup: f64,
    pub initial_sup: f64,
    pub c1: f64,
    /// `C1 * initial_sup`.
    pub bound: f64,
    pub hypothesis_met: bool,
    pub holds: bool,
}

pub fn linf_bound_check(traj: &Trajectory) -> LinfBoundReport {
    let initial_sup = traj.records.first().map_or(0.0, |r| r.linf);
    let observed_sup = traj.records.iter().map(|r| r.linf).fold(0.0, f64::max);
    let c1 = traj.constants.c1();
    let bound = c1 * initial_sup;
    let (l0, q0) = traj.records.first().map_or((0.0, 0.0), |r| (r.l, r.q));
    LinfBoundReport {
        observed_sup,
        initial_sup,
        c1,
        bound,
        hypothesis_met: traj.constants.hypothesis_met(l0, q0),
        holds: observed_sup <= bound + LINF_SLACK,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindowBoundPoint {
    pub t: f64,
    /// `int_a^b (|u|^2 + |v|^2)(x, t) dx`.
    pub lhs: f64,
    /// `C2 * (int_{a-t}^{b-t} |u_0|^2 + int_{a+t}^{b+t} |v_0|^2)` with `C2 = C1`.
    pub rhs: f64,
    pub holds: bool,
}

/// Windowed charge against the initial charge on the characteristic preimages of the
/// window (`u` comes from `[a - t, b - t]`, `v` from `[a + t, b + t]`), per snapshot.
pub fn window_translate_bound(traj: &Trajectory, a: f64, b: f64) -> Result<Vec<WindowBoundPoint>> {
    if !(a < b) {
        return Err(Error::InvalidArgument(format!(
            "window needs a < b, got ({a}, {b})"
        )));
    }
    let initial = traj.initial();
    let g = &traj.grid;
    let dx = g.dx();
    let c2 = traj.constants.c1();
    traj.snapshots
        .iter()
        .map(|s| {
            let t = s.t - initial.t;
            let lhs = local_charge(s, a, b)?;
            let from_u: f64 = g
                .cells_in(a - t, b - t)
                .map(|i| initial.u[i].norm_sqr())
                .sum();
            let from_v: f64 = g
                .cells_in(a + t, b + t)
                .map(|i| initial.v[i].norm_sqr())
                .sum();
            let raw = dx * (from_u + from_v);
            Ok(WindowBoundPoint {
                t: s.t,
                lhs,
                rhs: c2 * raw,
                holds: lhs <= (c2 + WINDOW_SLACK) * raw,
            })
        })
        .collect()
}
