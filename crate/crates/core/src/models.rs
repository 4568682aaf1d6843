//! Nonlinearities of the form `G1 = dW/d(conj u) + F1`, `G2 = dW/d(conj v) + F2`.
//!
//! `W(u, v) = sum w_jk |u|^(2j) |v|^(2k)` is a real polynomial in `s = |u|^2` and
//! `r = |v|^2`. The non-potential part is restricted to the Gross-Neveu family
//! `F1 = 2 g S v`, `F2 = 2 g S u` with `S = conj(u) v + u conj(v)`, for which the
//! interaction constant `c` in `|conj(u) F1| + |conj(v) F2| <= c |u|^2 |v|^2` has the
//! closed form `8 |g|`.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    name: String,
    /// `(j, k) -> w_jk`, zero coefficients removed.
    w_coeffs: BTreeMap<(u32, u32), f64>,
    gn_coupling: f64,
}

impl Model {
    /// Builds a model from `(j, k, w_jk)` triples and a Gross-Neveu coupling.
    /// Repeated exponent pairs are summed.
    pub fn new(
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (u32, u32, f64)>,
        gn_coupling: f64,
    ) -> Result<Self> {
        if !gn_coupling.is_finite() {
            return Err(Error::InvalidModel(format!(
                "gn_coupling must be finite, got {gn_coupling}"
            )));
        }
        let mut w_coeffs = BTreeMap::new();
        for (j, k, w) in terms {
            if !w.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "coefficient w_({j},{k}) must be finite, got {w}"
                )));
            }
            *w_coeffs.entry((j, k)).or_insert(0.0) += w;
        }
        w_coeffs.retain(|_, w| *w != 0.0);
        Ok(Self {
            name: name.into(),
            w_coeffs,
            gn_coupling,
        })
    }

    /// Massless Thirring: `W = alpha |u|^2 |v|^2`.
    pub fn thirring(alpha: f64) -> Self {
        Self::new("thirring", [(1, 1, alpha)], 0.0).expect("finite preset")
    }

    /// Federbusch: `W = alpha (|u|^2 + |v|^2) |u|^2 |v|^2`.
    pub fn federbusch(alpha: f64) -> Self {
        Self::new("federbusch", [(2, 1, alpha), (1, 2, alpha)], 0.0).expect("finite preset")
    }

    /// Massless Gross-Neveu: `(F1, F2) = grad_(conj u, conj v) alpha S^2`, `W = 0`.
    pub fn gross_neveu(alpha: f64) -> Self {
        Self::new("gross-neveu", [], alpha).expect("finite preset")
    }

    /// Looks up a preset by its config name.
    pub fn preset(name: &str, coefficient: f64) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::InvalidModel(format!(
                "coefficient must be finite, got {coefficient}"
            )));
        }
        match name {
            "thirring" => Ok(Self::thirring(coefficient)),
            "federbusch" => Ok(Self::federbusch(coefficient)),
            "gross-neveu" | "gross_neveu" => Ok(Self::gross_neveu(coefficient)),
            other => Err(Error::InvalidModel(format!(
                "unknown model `{other}` (expected thirring, federbusch or gross-neveu)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn w_coeffs(&self) -> &BTreeMap<(u32, u32), f64> {
        &self.w_coeffs
    }

    pub fn gn_coupling(&self) -> f64 {
        self.gn_coupling
    }

    /// True when `F1 = F2 = 0`, i.e. both chiral densities are exactly transported.
    pub fn is_potential_only(&self) -> bool {
        self.gn_coupling == 0.0
    }

    /// `Some(alpha)` when the model is exactly `W = alpha |u|^2 |v|^2`, `F = 0`.
    pub fn thirring_alpha(&self) -> Option<f64> {
        if self.gn_coupling != 0.0 {
            return None;
        }
        match self.w_coeffs.len() {
            0 => Some(0.0),
            1 => self.w_coeffs.get(&(1, 1)).copied(),
            _ => None,
        }
    }

    /// `(dW/ds, dW/dr)` at `s = |u|^2`, `r = |v|^2`.
    pub fn phase_rates(&self, s: f64, r: f64) -> (f64, f64) {
        let mut ds = 0.0;
        let mut dr = 0.0;
        for (&(j, k), &w) in &self.w_coeffs {
            if j > 0 {
                ds += w * f64::from(j) * s.powi(j as i32 - 1) * r.powi(k as i32);
            }
            if k > 0 {
                dr += w * f64::from(k) * s.powi(j as i32) * r.powi(k as i32 - 1);
            }
        }
        (ds, dr)
    }

    /// The non-potential part `(F1, F2)`.
    pub fn eval_f(&self, u: C64, v: C64) -> (C64, C64) {
        if self.gn_coupling == 0.0 {
            return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        }
        let s = 2.0 * (u.conj() * v).re;
        let g = 2.0 * self.gn_coupling * s;
        (v * g, u * g)
    }

    /// Pointwise `(G1, G2)`.
    pub fn eval_g(&self, u: C64, v: C64) -> (C64, C64) {
        let (ps, pr) = self.phase_rates(u.norm_sqr(), v.norm_sqr());
        let (f1, f2) = self.eval_f(u, v);
        (u * ps + f1, v * pr + f2)
    }

    /// Rates of change of `|u|^2` and `|v|^2` along their characteristics,
    /// `(2 Im(conj(u) F1), 2 Im(conj(v) F2))`. The potential part contributes nothing.
    pub fn charge_source_rates(&self, u: C64, v: C64) -> (f64, f64) {
        let (f1, f2) = self.eval_f(u, v);
        (2.0 * (u.conj() * f1).im, 2.0 * (v.conj() * f2).im)
    }

    /// Tight constant `c` with `|conj(u) F1| + |conj(v) F2| <= c |u|^2 |v|^2`.
    ///
    /// For the Gross-Neveu family `|conj(u) F1| = 2|g| |S| |u||v| <= 4|g| |u|^2 |v|^2`,
    /// equality when `conj(u) v` is real, and symmetrically for `F2`.
    pub fn coupling_constant_c(&self) -> f64 {
        8.0 * self.gn_coupling.abs()
    }

    pub fn glimm_constants(&self) -> GlimmConstants {
        GlimmConstants::from_c(self.coupling_constant_c())
    }
}

/// Constants of the small-data Glimm argument.
///
/// Admissible pairs satisfy `-2 + 2 delta c < -1/2` and `-K/2 + 2c < -2`. We take
/// half the strict bound for `delta` and a margin of one on `K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GlimmConstants {
    pub c: f64,
    /// `None` means no smallness is needed (`c = 0`).
    pub delta: Option<f64>,
    #[serde(rename = "K")]
    pub k: f64,
}

impl GlimmConstants {
    pub fn from_c(c: f64) -> Self {
        if c == 0.0 {
            Self {
                c,
                delta: None,
                k: 5.0,
            }
        } else {
            Self {
                c,
                delta: Some(3.0 / (8.0 * c)),
                k: 4.0 * c + 5.0,
            }
        }
    }

    /// `L(0) + K Q(0) <= delta`.
    pub fn hypothesis_met(&self, l0: f64, q0: f64) -> bool {
        match self.delta {
            None => true,
            Some(delta) => l0 + self.k * q0 <= delta,
        }
    }

    /// Amplification constant `C1 = exp((2 sqrt2 c^2 + sqrt2 c) delta)` of the
    /// pointwise and windowed charge bounds; `1` when `c = 0`.
    pub fn c1(&self) -> f64 {
        match self.delta {
            None => 1.0,
            Some(delta) => ((2.0 * SQRT_2 * self.c * self.c + SQRT_2 * self.c) * delta).exp(),
        }
    }

    /// Both strict inequalities hold (trivially true when `c = 0`).
    pub fn admissible(&self) -> bool {
        match self.delta {
            None => self.c == 0.0 && self.k > 0.0,
            Some(delta) => {
                -2.0 + 2.0 * delta * self.c < -0.5 && -self.k / 2.0 + 2.0 * self.c < -2.0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn thirring_g_at_unit_values() {
        let (g1, g2) = Model::thirring(1.0).eval_g(c(1.0, 0.0), c(1.0, 0.0));
        assert_eq!(g1, c(1.0, 0.0));
        assert_eq!(g2, c(1.0, 0.0));
    }

    #[test]
    fn all_models_vanish_at_origin() {
        for m in [
            Model::thirring(1.3),
            Model::federbusch(-0.4),
            Model::gross_neveu(2.0),
        ] {
            let z = c(0.0, 0.0);
            assert_eq!(m.eval_g(z, z), (z, z));
            assert_eq!(m.charge_source_rates(z, c(0.3, 0.1)), (0.0, 0.0));
        }
    }

    #[test]
    fn gross_neveu_s_vanishes_for_orthogonal_phases() {
        let (g1, g2) = Model::gross_neveu(1.0).eval_g(c(1.0, 0.0), c(0.0, 1.0));
        assert_eq!(g1, c(0.0, 0.0));
        assert_eq!(g2, c(0.0, 0.0));
    }

    #[test]
    fn federbusch_g_at_unit_values() {
        let (g1, g2) = Model::federbusch(1.0).eval_g(c(1.0, 0.0), c(1.0, 0.0));
        assert!((g1 - c(3.0, 0.0)).norm() < 1e-15);
        assert!((g2 - c(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn presets_match_coefficient_maps() {
        let t = Model::thirring(0.7);
        assert_eq!(t.w_coeffs().get(&(1, 1)), Some(&0.7));
        assert_eq!(t.gn_coupling(), 0.0);
        let f = Model::federbusch(0.7);
        assert_eq!(f.w_coeffs().len(), 2);
        assert_eq!(f.w_coeffs().get(&(2, 1)), Some(&0.7));
        assert_eq!(f.w_coeffs().get(&(1, 2)), Some(&0.7));
        let g = Model::gross_neveu(0.7);
        assert!(g.w_coeffs().is_empty());
        assert_eq!(g.gn_coupling(), 0.7);
        assert_eq!(Model::preset("gross-neveu", 0.7).unwrap(), g);
        assert!(Model::preset("dirac", 1.0).is_err());
    }

    #[test]
    fn duplicate_terms_are_summed() {
        let m = Model::new("custom", [(1, 1, 0.5), (1, 1, 0.25), (2, 0, 0.0)], 0.0).unwrap();
        assert_eq!(m.w_coeffs().len(), 1);
        assert_eq!(m.w_coeffs()[&(1, 1)], 0.75);
        assert_eq!(m.thirring_alpha(), Some(0.75));
        assert!(Model::new("bad", [(1, 1, f64::NAN)], 0.0).is_err());
        assert!(Model::new("bad", [], f64::INFINITY).is_err());
    }

    #[test]
    fn phase_rates_examples() {
        assert_eq!(Model::thirring(2.0).phase_rates(1.0, 3.0), (6.0, 2.0));
        assert_eq!(Model::federbusch(1.0).phase_rates(1.0, 1.0), (3.0, 3.0));
        for m in [
            Model::thirring(1.0),
            Model::federbusch(1.0),
            Model::gross_neveu(1.0),
        ] {
            assert_eq!(m.phase_rates(0.0, 0.0), (0.0, 0.0));
        }
        // w_10 s contributes a constant to dW/ds.
        let m = Model::new("linear", [(1, 0, 0.5)], 0.0).unwrap();
        assert_eq!(m.phase_rates(0.0, 0.0), (0.5, 0.0));
    }

    #[test]
    fn potential_models_have_zero_charge_rates() {
        let u = c(0.3, -1.2);
        let v = c(-0.7, 0.4);
        assert_eq!(Model::thirring(3.0).charge_source_rates(u, v), (0.0, 0.0));
        assert_eq!(Model::federbusch(3.0).charge_source_rates(u, v), (0.0, 0.0));
    }

    #[test]
    fn coupling_constants() {
        assert_eq!(Model::thirring(1.0).coupling_constant_c(), 0.0);
        assert_eq!(Model::federbusch(2.0).coupling_constant_c(), 0.0);
        assert_eq!(Model::gross_neveu(1.0).coupling_constant_c(), 8.0);
        assert_eq!(Model::gross_neveu(-0.5).coupling_constant_c(), 4.0);
    }

    #[test]
    fn gross_neveu_bound_is_attained_by_phase_search() {
        // Maximize (|conj(u) F1| + |conj(v) F2|) / (|u|^2 |v|^2) over relative phases.
        let m = Model::gross_neveu(1.0);
        let mut best: f64 = 0.0;
        for i in 0..=720 {
            let theta = i as f64 * std::f64::consts::PI / 360.0;
            let u = c(1.0, 0.0);
            let v = C64::from_polar(1.0, theta);
            let (f1, f2) = m.eval_f(u, v);
            best = best.max((u.conj() * f1).norm() + (v.conj() * f2).norm());
        }
        assert!((best - 8.0).abs() < 1e-12, "sampled max {best}");
    }

    #[test]
    fn glimm_constant_recipes() {
        let t = Model::thirring(1.0).glimm_constants();
        assert_eq!(t.delta, None);
        assert_eq!(t.k, 5.0);
        assert_eq!(t.c1(), 1.0);
        assert!(t.hypothesis_met(1e6, 1e6));

        let g = Model::gross_neveu(1.0).glimm_constants();
        assert_eq!(g.delta, Some(3.0 / 64.0));
        assert_eq!(g.k, 37.0);
        assert!(g.admissible());

        let one = GlimmConstants::from_c(1.0);
        assert_eq!(one.delta, Some(0.375));
        assert_eq!(one.k, 9.0);
        let expect_c1 = ((2.0 * SQRT_2 + SQRT_2) * 0.375_f64).exp();
        assert!((one.c1() - expect_c1).abs() < 1e-14);
        assert!(one.hypothesis_met(0.3, 0.008));
        assert!(!one.hypothesis_met(0.3, 0.01));
    }

    fn arb_c64() -> impl Strategy<Value = C64> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| C64::new(re, im))
    }

    fn arb_model() -> impl Strategy<Value = Model> {
        prop_oneof![
            (-2.0..2.0f64).prop_map(Model::thirring),
            (-2.0..2.0f64).prop_map(Model::federbusch),
            (-2.0..2.0f64).prop_map(Model::gross_neveu),
            (-2.0..2.0f64, -2.0..2.0f64, -1.0..1.0f64).prop_map(|(a, b, g)| {
                Model::new("custom", [(1, 1, a), (2, 0, b), (0, 3, a * b)], g).unwrap()
            }),
        ]
    }

    proptest! {
        #[test]
        fn a2_bound_holds(m in arb_model(), u in arb_c64(), v in arb_c64()) {
            let (f1, f2) = m.eval_f(u, v);
            let lhs = (u.conj() * f1).norm() + (v.conj() * f2).norm();
            let rhs = m.coupling_constant_c() * u.norm_sqr() * v.norm_sqr();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-13);
        }

        #[test]
        fn potential_part_never_sources_charge(m in arb_model(), u in arb_c64(), v in arb_c64()) {
            let (ps, pr) = m.phase_rates(u.norm_sqr(), v.norm_sqr());
            let wu = u.conj() * (u * ps);
            let wv = v.conj() * (v * pr);
            prop_assert!(wu.im.abs() <= 1e-14 * (1.0 + wu.re.abs()));
            prop_assert!(wv.im.abs() <= 1e-14 * (1.0 + wv.re.abs()));
        }

        #[test]
        fn gross_neveu_rates_cancel(g in -2.0..2.0f64, u in arb_c64(), v in arb_c64()) {
            let (r1, r2) = Model::gross_neveu(g).charge_source_rates(u, v);
            prop_assert!((r1 + r2).abs() <= 1e-14 * (1.0 + r1.abs()));
        }

        #[test]
        fn glimm_constants_admissible(c in 1e-6..1e3f64) {
            prop_assert!(GlimmConstants::from_c(c).admissible());
        }

        #[test]
        fn potential_part_is_phase_covariant(
            m in arb_model(), u in arb_c64(), v in arb_c64(), theta in 0.0..6.3f64
        ) {
            let rot = C64::from_polar(1.0, theta);
            let (ps, _) = m.phase_rates(u.norm_sqr(), v.norm_sqr());
            let (ps_rot, _) = m.phase_rates((rot * u).norm_sqr(), v.norm_sqr());
            let lhs = rot * u * ps_rot;
            let rhs = rot * (u * ps);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }
    }
}
