//! Orbit-type presets and the curvature quantities entering the ODEs.
//!
//! A preset fixes one two-summand principal orbit: the collapsing-sphere
//! dimension `d1`, the base dimension `d2`, the Einstein constant `c_q` of the
//! base, the O'Neill constant `a2` of the submersion, and the soliton constant
//! `epsilon < 0`. Everything downstream (vector field, diagnostics, scans) is
//! parametrized by one of these.

use serde::{Deserialize, Serialize};

use crate::dynamics::SolitonState;
use crate::error::{Error, Result};

/// Which metric factor must collapse at the far end for the manifold to close
/// up smoothly. Determines the target of the shooting functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollapsePattern {
    /// The same sphere factor (`f`) collapses at both ends.
    SameEnd,
    /// The opposite factor (`h`) collapses at the far end.
    OppositeEnd,
}

/// Constants defining one ODE family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitPreset {
    pub name: String,
    /// Dimension of the collapsing sphere factor.
    pub d1: u32,
    /// Dimension of the base factor.
    pub d2: u32,
    /// Einstein constant of the base metric.
    pub c_q: f64,
    /// Norm-squared of the O'Neill tensor; zero for products.
    pub a2: f64,
    /// Soliton constant; negative for shrinkers.
    pub epsilon: f64,
    pub collapse: CollapsePattern,
}

impl OrbitPreset {
    pub fn new(
        name: &str,
        d1: u32,
        d2: u32,
        c_q: f64,
        a2: f64,
        epsilon: f64,
        collapse: CollapsePattern,
    ) -> Result<Self> {
        if d1 < 1 || d2 < 1 {
            return Err(Error::InvalidParameter(format!(
                "factor dimensions must be >= 1 (got d1 = {d1}, d2 = {d2})"
            )));
        }
        if !(c_q > 0.0) {
            return Err(Error::InvalidParameter(format!("c_q must be > 0 (got {c_q})")));
        }
        if !(a2 >= 0.0) {
            return Err(Error::InvalidParameter(format!("a2 must be >= 0 (got {a2})")));
        }
        if !(epsilon < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be < 0, shrinkers only (got {epsilon})"
            )));
        }
        Ok(OrbitPreset {
            name: name.to_string(),
            d1,
            d2,
            c_q,
            a2,
            epsilon,
            collapse,
        })
    }

    /// Principal-orbit dimension `n = d1 + d2`.
    pub fn n(&self) -> u32 {
        self.d1 + self.d2
    }

    /// Lower admissible bound for the potential parameter `ubar`.
    pub fn ubar_lower_bound(&self) -> f64 {
        -((self.n() as f64) + 1.0) / 2.0
    }

    /// Same preset with the soliton constant replaced (per-run override).
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be < 0 (got {epsilon})"
            )));
        }
        let mut p = self.clone();
        p.epsilon = epsilon;
        Ok(p)
    }
}

fn check_scales(f: f64, h: f64) -> Result<()> {
    if !(f > 0.0) || !(h > 0.0) {
        return Err(Error::Collapse { f, h });
    }
    Ok(())
}

/// The two Ricci-endomorphism eigenvalues of the principal-orbit metric.
///
/// `r1` belongs to the sphere factor of scale `f`, `r2` to the base of scale
/// `h`. For product orbits (`a2 = 0`) the cross terms vanish.
pub fn ricci_components(preset: &OrbitPreset, f: f64, h: f64) -> Result<(f64, f64)> {
    check_scales(f, h)?;
    let d1 = preset.d1 as f64;
    let d2 = preset.d2 as f64;
    let f2 = f * f;
    let h2 = h * h;
    let h4 = h2 * h2;
    let r1 = (d1 - 1.0) / f2 + (d2 / d1) * preset.a2 * f2 / h4;
    let r2 = preset.c_q / h2 - 2.0 * preset.a2 * f2 / h4;
    if !r1.is_finite() || !r2.is_finite() {
        return Err(Error::NonFinite {
            context: "ricci_components",
        });
    }
    Ok((r1, r2))
}

/// Scalar curvature `S`, mean curvature `tr L`, and relative volume
/// `v = f^d1 h^d2` of the principal orbit at `state`.
pub fn scalar_and_volume(preset: &OrbitPreset, state: &SolitonState) -> Result<(f64, f64, f64)> {
    let (r1, r2) = ricci_components(preset, state.f, state.h)?;
    let d1 = preset.d1 as f64;
    let d2 = preset.d2 as f64;
    let s = d1 * r1 + d2 * r2;
    let tr_l = d1 * state.fdot / state.f + d2 * state.hdot / state.h;
    let v = state.f.powi(preset.d1 as i32) * state.h.powi(preset.d2 as i32);
    if !s.is_finite() || !tr_l.is_finite() || !v.is_finite() {
        return Err(Error::NonFinite {
            context: "scalar_and_volume",
        });
    }
    Ok((s, tr_l, v))
}

/// Named presets with the constants used in the reproduction runs.
///
/// Where the source normalization is pinned by the construction, the exact
/// value is used (`cp2`, `s5`, `s2xs3`). For the remaining spaces the default
/// is `epsilon = -n/50`, the normalization under which a round sphere written
/// as a doubly warped metric starts at `hbar = 10`; it can be overridden with
/// [`OrbitPreset::with_epsilon`].
pub fn preset_catalog(name: &str) -> Result<OrbitPreset> {
    let default_eps = |n: u32| -(n as f64) / 50.0;
    match name {
        // The base constants follow the projective-space normalization used
        // for the reported runs (C_Q = 4 for the two-sphere base, matching
        // 4n+8 for the quaternionic bases); the Page and Koiso-Cao locations
        // are reproduced only under that convention.
        "cp2" => OrbitPreset::new("cp2", 1, 2, 4.0, 1.0, -7.46562, CollapsePattern::SameEnd),
        "s5" => OrbitPreset::new("s5", 2, 2, 1.0, 0.0, -0.08, CollapsePattern::OppositeEnd),
        "s2xs3" => OrbitPreset::new("s2xs3", 2, 2, 1.0, 0.0, -0.08, CollapsePattern::SameEnd),
        "s11" => OrbitPreset::new("s11", 5, 5, 4.0, 0.0, default_eps(10), CollapsePattern::OppositeEnd),
        "cap2" => OrbitPreset::new("cap2", 7, 8, 28.0, 7.0, default_eps(15), CollapsePattern::SameEnd),
        _ => {
            // Parametrized families hp(n) and f(n).
            if let Some(n) = parse_family(name, "hp") {
                let d2 = 4 * n;
                return OrbitPreset::new(
                    name,
                    3,
                    d2,
                    (4 * n + 8) as f64,
                    3.0,
                    default_eps(3 + d2),
                    CollapsePattern::SameEnd,
                );
            }
            if let Some(n) = parse_family(name, "f") {
                let d2 = 4 * n;
                return OrbitPreset::new(
                    name,
                    2,
                    d2,
                    (4 * n + 8) as f64,
                    8.0,
                    default_eps(2 + d2),
                    CollapsePattern::SameEnd,
                );
            }
            Err(Error::UnknownPreset(name.to_string()))
        }
    }
}

/// Parses `"<family>(<n>)"` and returns `n` if positive.
fn parse_family(name: &str, family: &str) -> Option<u32> {
    let rest = name.strip_prefix(family)?;
    let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
    let n: u32 = inner.parse().ok()?;
    (n >= 1).then_some(n)
}

/// Catalog names accepted by [`preset_catalog`] (families shown with `n = 1`).
pub const CATALOG_NAMES: &[&str] = &["cp2", "s5", "s2xs3", "s11", "hp(1)", "f(1)", "cap2"];

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn product_preset(d1: u32, d2: u32, c_q: f64, eps: f64) -> OrbitPreset {
        OrbitPreset::new("test", d1, d2, c_q, 0.0, eps, CollapsePattern::SameEnd).unwrap()
    }

    #[test]
    fn ricci_product_formula() {
        let p = product_preset(3, 2, 1.0, -1.0);
        let (r1, r2) = ricci_components(&p, 2.0, 1.0).unwrap();
        assert_eq!(r1, 0.5);
        assert_eq!(r2, 1.0);
    }

    #[test]
    fn ricci_with_oneill_term() {
        let p = OrbitPreset::new("t", 1, 2, 1.0, 1.0, -1.0, CollapsePattern::SameEnd).unwrap();
        let (r1, r2) = ricci_components(&p, 1.0, 1.0).unwrap();
        assert_eq!(r1, 2.0);
        assert_eq!(r2, -1.0);
    }

    #[test]
    fn circle_fiber_is_flat() {
        // d1 = 1 and a2 = 0 leaves no curvature on the fiber.
        let p = product_preset(1, 4, 2.0, -1.0);
        for f in [0.1, 1.0, 7.3] {
            let (r1, _) = ricci_components(&p, f, 1.0).unwrap();
            assert_eq!(r1, 0.0);
        }
    }

    #[test]
    fn collapse_is_an_error() {
        let p = product_preset(2, 2, 1.0, -1.0);
        assert!(matches!(
            ricci_components(&p, 0.0, 1.0),
            Err(Error::Collapse { .. })
        ));
        assert!(matches!(
            ricci_components(&p, 1.0, -0.5),
            Err(Error::Collapse { .. })
        ));
    }

    #[test]
    fn scalar_curvature_of_unit_product() {
        let p = product_preset(2, 2, 1.0, -1.0);
        let st = SolitonState {
            t: 1.0,
            f: 1.0,
            fdot: 0.0,
            h: 1.0,
            hdot: 0.0,
            u: 0.0,
            udot: 0.0,
        };
        let (s, tr_l, v) = scalar_and_volume(&p, &st).unwrap();
        assert_eq!(s, 4.0);
        assert_eq!(tr_l, 0.0);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn mean_curvature_leading_term() {
        // f = t, fdot = 1 with d1 = 1 gives tr L = 1/t to leading order.
        let p = product_preset(1, 2, 1.0, -1.0);
        let t = 1e-4;
        let st = SolitonState {
            t,
            f: t,
            fdot: 1.0,
            h: 1.0,
            hdot: 0.0,
            u: 0.0,
            udot: 0.0,
        };
        let (_, tr_l, _) = scalar_and_volume(&p, &st).unwrap();
        assert!((tr_l - 1.0 / t).abs() < 1e-9 / t);
    }

    #[test]
    fn catalog_constants() {
        let cp2 = preset_catalog("cp2").unwrap();
        assert_eq!(cp2.d1, 1);
        assert_eq!(cp2.c_q, 4.0);
        assert_eq!(cp2.a2, 1.0);
        assert_eq!(cp2.epsilon, -7.46562);
        assert_eq!(cp2.collapse, CollapsePattern::SameEnd);

        let hp1 = preset_catalog("hp(1)").unwrap();
        assert_eq!((hp1.d1, hp1.d2), (3, 4));
        assert_eq!(hp1.c_q, 12.0);
        assert_eq!(hp1.a2, 3.0);

        let cap2 = preset_catalog("cap2").unwrap();
        assert_eq!((cap2.d1, cap2.d2), (7, 8));
        assert_eq!(cap2.c_q, 28.0);
        assert_eq!(cap2.a2, 7.0);
        assert_eq!(cap2.epsilon, -0.3);

        let s11 = preset_catalog("s11").unwrap();
        assert_eq!((s11.d1, s11.d2), (5, 5));
        assert_eq!(s11.c_q, 4.0);
        assert_eq!(s11.epsilon, -0.2);
        assert_eq!(s11.collapse, CollapsePattern::OppositeEnd);

        let s5 = preset_catalog("s5").unwrap();
        assert_eq!(s5.epsilon, -0.08);
        assert_eq!(s5.collapse, CollapsePattern::OppositeEnd);

        assert!(matches!(
            preset_catalog("nope"),
            Err(Error::UnknownPreset(_))
        ));
    }

    #[test]
    fn epsilon_override() {
        let p = preset_catalog("hp(2)").unwrap().with_epsilon(-0.5).unwrap();
        assert_eq!(p.epsilon, -0.5);
        assert!(preset_catalog("s5").unwrap().with_epsilon(0.1).is_err());
    }

    proptest! {
        // Scaling (f, h) -> (cf, ch) scales both Ricci components by 1/c^2.
        #[test]
        fn ricci_homogeneity(
            f in 0.05f64..20.0,
            h in 0.05f64..20.0,
            c in 0.1f64..10.0,
            a2 in 0.0f64..5.0,
            d1 in 1u32..6,
            d2 in 1u32..6,
        ) {
            let p = OrbitPreset::new("t", d1, d2, 1.7, a2, -1.0, CollapsePattern::SameEnd).unwrap();
            let (r1, r2) = ricci_components(&p, f, h).unwrap();
            let (r1c, r2c) = ricci_components(&p, c * f, c * h).unwrap();
            prop_assert!((r1c - r1 / (c * c)).abs() <= 1e-9 * (1.0 + r1.abs() / (c * c)));
            prop_assert!((r2c - r2 / (c * c)).abs() <= 1e-9 * (1.0 + r2.abs() / (c * c)));
        }

        // S is exactly the weighted trace of the Ricci components, and is
        // positive for product presets.
        #[test]
        fn scalar_is_weighted_trace(
            f in 0.05f64..20.0,
            h in 0.05f64..20.0,
            d1 in 1u32..6,
            d2 in 1u32..6,
        ) {
            let p = OrbitPreset::new("t", d1, d2, 2.3, 0.0, -1.0, CollapsePattern::SameEnd).unwrap();
            let st = SolitonState { t: 1.0, f, fdot: 0.3, h, hdot: -0.2, u: 0.0, udot: 0.0 };
            let (s, _, _) = scalar_and_volume(&p, &st).unwrap();
            let (r1, r2) = ricci_components(&p, f, h).unwrap();
            prop_assert_eq!(s, d1 as f64 * r1 + d2 as f64 * r2);
            prop_assert!(s > 0.0);
        }
    }
}
