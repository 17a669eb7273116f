//! The m-factor warped-product phase system, its closed-form solutions, fixed
//! points, and linearization.
//!
//! The hypersurface is a product of Einstein factors with positive constants
//! `lambda_i`. Phase coordinates are `W = 1/xi` and, per factor,
//! `X_i = sqrt(d_i) * (gdot_i/g_i) / xi` and `Y_i = sqrt(d_i lambda_i) / (g_i xi)`,
//! in which the flow becomes polynomial. The `Y_i` normalization carries the
//! `sqrt(lambda_i)` factor: with it the curvature term in the `X_i` equation is
//! exactly `Y_i^2 / sqrt(d_i)`, the points `P+-` below are genuine equilibria,
//! and the conserved combination is `sum X^2 + sum Y^2 - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One Einstein factor of the principal orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarpedFactor {
    pub dim: u32,
    /// Einstein constant; must be positive.
    pub lambda: f64,
}

impl WarpedFactor {
    pub fn new(dim: u32, lambda: f64) -> Self {
        WarpedFactor { dim, lambda }
    }
}

/// A multiple warped product orbit type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedPreset {
    pub factors: Vec<WarpedFactor>,
    pub epsilon: f64,
}

impl WarpedPreset {
    pub fn new(factors: Vec<WarpedFactor>, epsilon: f64) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("need at least one factor".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.dim < 1 {
                return Err(Error::InvalidParameter(format!(
                    "factor {i}: dimension must be >= 1"
                )));
            }
            if !(f.lambda > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "factor {i}: lambda must be > 0 (got {})",
                    f.lambda
                )));
            }
        }
        if !(epsilon < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be < 0 (got {epsilon})"
            )));
        }
        Ok(WarpedPreset { factors, epsilon })
    }

    pub fn m(&self) -> usize {
        self.factors.len()
    }

    pub fn n(&self) -> u32 {
        self.factors.iter().map(|f| f.dim).sum()
    }
}

/// Phase-space point of the warped system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub w: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PhaseState {
    /// `G = sum X_i^2 = W^2 tr(L^2)`.
    pub fn g_cal(&self) -> f64 {
        self.x.iter().map(|x| x * x).sum()
    }

    /// `H = sum sqrt(d_i) X_i = W tr L`.
    pub fn h_cal(&self, preset: &WarpedPreset) -> f64 {
        self.x
            .iter()
            .zip(&preset.factors)
            .map(|(x, f)| (f.dim as f64).sqrt() * x)
            .sum()
    }

    /// `L = sum X^2 + sum Y^2 - 1`, the conserved combination on warped
    /// products.
    pub fn l_cal(&self) -> f64 {
        self.g_cal() + self.y.iter().map(|y| y * y).sum::<f64>() - 1.0
    }

    /// Builds phase coordinates from metric data `(g_i, gdot_i, udot)`.
    /// Fails at a turning point, where `xi = 0`.
    pub fn from_metric(
        preset: &WarpedPreset,
        g: &[f64],
        gdot: &[f64],
        udot: f64,
    ) -> Result<PhaseState> {
        let m = preset.m();
        if g.len() != m || gdot.len() != m {
            return Err(Error::InvalidParameter(
                "metric data length does not match the number of factors".into(),
            ));
        }
        let tr_l: f64 = preset
            .factors
            .iter()
            .zip(g.iter().zip(gdot))
            .map(|(f, (gi, gdi))| f.dim as f64 * gdi / gi)
            .sum();
        let xi = -udot + tr_l;
        if xi == 0.0 {
            return Err(Error::InvalidParameter(
                "phase coordinates undefined at a turning point (xi = 0)".into(),
            ));
        }
        let x = preset
            .factors
            .iter()
            .zip(g.iter().zip(gdot))
            .map(|(f, (gi, gdi))| (f.dim as f64).sqrt() * gdi / gi / xi)
            .collect();
        let y = preset
            .factors
            .iter()
            .zip(g)
            .map(|(f, gi)| (f.dim as f64 * f.lambda).sqrt() / (gi * xi))
            .collect();
        Ok(PhaseState { w: 1.0 / xi, x, y })
    }
}

/// Right-hand side of the warped phase system in the slow variable `s`
/// (where `d/ds = W d/dt`). Polynomial, so no failure modes.
pub fn warped_rhs(preset: &WarpedPreset, state: &PhaseState) -> PhaseState {
    let g: f64 = state.g_cal();
    let half_eps = preset.epsilon / 2.0;
    let w2 = state.w * state.w;
    let x = state
        .x
        .iter()
        .zip(&state.y)
        .zip(&preset.factors)
        .map(|((&xi, &yi), fac)| {
            let sd = (fac.dim as f64).sqrt();
            xi * (g - 1.0) + yi * yi / sd + half_eps * (sd - xi) * w2
        })
        .collect();
    let y = state
        .y
        .iter()
        .zip(&state.x)
        .zip(&preset.factors)
        .map(|((&yi, &xi), fac)| {
            let sd = (fac.dim as f64).sqrt();
            yi * (g - xi / sd - half_eps * w2)
        })
        .collect();
    let w = state.w * (g - half_eps * w2);
    PhaseState { w, x, y }
}

/// One classical RK4 step of the phase system in `s`.
pub fn phase_step(preset: &WarpedPreset, state: &PhaseState, s_step: f64) -> PhaseState {
    let add = |a: &PhaseState, k: &PhaseState, c: f64| PhaseState {
        w: a.w + c * k.w,
        x: a.x.iter().zip(&k.x).map(|(ai, ki)| ai + c * ki).collect(),
        y: a.y.iter().zip(&k.y).map(|(ai, ki)| ai + c * ki).collect(),
    };
    let k1 = warped_rhs(preset, state);
    let k2 = warped_rhs(preset, &add(state, &k1, s_step / 2.0));
    let k3 = warped_rhs(preset, &add(state, &k2, s_step / 2.0));
    let k4 = warped_rhs(preset, &add(state, &k3, s_step));
    let mut out = add(state, &k1, s_step / 6.0);
    out = add(&out, &k2, s_step / 3.0);
    out = add(&out, &k3, s_step / 3.0);
    add(&out, &k4, s_step / 6.0)
}

/// The equilibrium `P+` (`P-` with `sign = -1`): `X_i = sqrt(d_i)/n`,
/// `Y_i = +- sqrt(d_i) sqrt(n-1)/n`, `W = 0`.
pub fn p_point(preset: &WarpedPreset, sign: f64) -> PhaseState {
    let n = preset.n() as f64;
    let x = preset
        .factors
        .iter()
        .map(|f| (f.dim as f64).sqrt() / n)
        .collect();
    let y = preset
        .factors
        .iter()
        .map(|f| sign * (f.dim as f64).sqrt() * (n - 1.0).sqrt() / n)
        .collect();
    PhaseState { w: 0.0, x, y }
}

/// The associated planar system for `(E, F) = (eps*u + C, udot)` along a
/// trajectory: `E' = eps W F`, `F' = W E - F`.
pub fn ef_rhs(epsilon: f64, w: f64, e: f64, f: f64) -> (f64, f64) {
    (epsilon * w * f, w * e - f)
}

/// Eigenvalues of the `(E, F)` system matrix `[[0, eps W], [W, -1]]`:
/// `(-1 +- sqrt(1 + 4 eps W^2)) / 2`. Returned as (re, im) pairs.
pub fn ef_eigenvalues(epsilon: f64, w: f64) -> [(f64, f64); 2] {
    let disc = 1.0 + 4.0 * epsilon * w * w;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [((-1.0 + r) / 2.0, 0.0), ((-1.0 - r) / 2.0, 0.0)]
    } else {
        let i = (-disc).sqrt() / 2.0;
        [(-0.5, i), (-0.5, -i)]
    }
}

/// Closed-form reference solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleKind {
    /// Flat factor times fixed Einstein factors; smooth and complete.
    SmoothGaussian,
    /// All factors scaled by `t`; Ricci-flat cone with a conical singularity
    /// at the origin.
    ConicalGaussian,
    /// The Einstein metric `g_i ~ sin(alpha t)`; compact, conical at both
    /// ends for `m > 1`.
    SphericalCone,
}

impl OracleKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "smooth" => Ok(OracleKind::SmoothGaussian),
            "conical" => Ok(OracleKind::ConicalGaussian),
            "cone" | "spherical" => Ok(OracleKind::SphericalCone),
            _ => Err(Error::InvalidParameter(format!("unknown oracle kind `{s}`"))),
        }
    }
}

/// One evaluation of a closed-form solution: metric scales with first and
/// second derivatives, the potential data, and the derived `xi`, `E`.
///
/// The potential is pinned by the zero conservation-constant convention, so
/// the additive constant in `u` is part of the closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSample {
    pub t: f64,
    pub g: Vec<f64>,
    pub gdot: Vec<f64>,
    pub gddot: Vec<f64>,
    pub u: f64,
    pub udot: f64,
    pub uddot: f64,
    pub xi: f64,
    pub e: f64,
}

pub fn oracle(preset: &WarpedPreset, kind: OracleKind, t: f64) -> Result<OracleSample> {
    let eps = preset.epsilon;
    let n = preset.n() as f64;
    let m = preset.m();
    match kind {
        OracleKind::SmoothGaussian => {
            if !(t > 0.0) {
                return Err(Error::OutOfDomain(format!(
                    "smooth gaussian needs t > 0 (got {t})"
                )));
            }
            let d1 = preset.factors[0].dim as f64;
            let mut g = vec![0.0; m];
            let mut gdot = vec![0.0; m];
            let gddot = vec![0.0; m];
            g[0] = t;
            gdot[0] = 1.0;
            for (gi, fac) in g.iter_mut().zip(&preset.factors).skip(1) {
                *gi = (2.0 * fac.lambda / -eps).sqrt();
            }
            let u = -eps / 4.0 * t * t - (d1 + 1.0) / 2.0;
            Ok(OracleSample {
                t,
                g,
                gdot,
                gddot,
                u,
                udot: -eps / 2.0 * t,
                uddot: -eps / 2.0,
                xi: eps / 2.0 * t + d1 / t,
                e: eps * u,
            })
        }
        OracleKind::ConicalGaussian => {
            if !(t > 0.0) {
                return Err(Error::OutOfDomain(format!(
                    "conical gaussian needs t > 0 (got {t})"
                )));
            }
            if n < 2.0 {
                return Err(Error::InvalidParameter(
                    "conical gaussian needs n >= 2".into(),
                ));
            }
            let coef: Vec<f64> = preset
                .factors
                .iter()
                .map(|f| (f.lambda / (n - 1.0)).sqrt())
                .collect();
            let u = -eps / 4.0 * t * t - (n + 1.0) / 2.0;
            Ok(OracleSample {
                t,
                g: coef.iter().map(|c| c * t).collect(),
                gdot: coef.clone(),
                gddot: vec![0.0; m],
                u,
                udot: -eps / 2.0 * t,
                uddot: -eps / 2.0,
                xi: eps / 2.0 * t + n / t,
                e: eps * u,
            })
        }
        OracleKind::SphericalCone => {
            if n < 2.0 {
                return Err(Error::InvalidParameter("spherical cone needs n >= 2".into()));
            }
            let alpha = (-eps / (2.0 * n)).sqrt();
            if !(t > 0.0 && t < std::f64::consts::PI / alpha) {
                return Err(Error::OutOfDomain(format!(
                    "spherical cone needs 0 < t < pi/alpha = {} (got {t})",
                    std::f64::consts::PI / alpha
                )));
            }
            let coef: Vec<f64> = preset
                .factors
                .iter()
                .map(|f| (f.lambda / (n - 1.0)).sqrt() / alpha)
                .collect();
            let (sin, cos) = (alpha * t).sin_cos();
            Ok(OracleSample {
                t,
                g: coef.iter().map(|c| c * sin).collect(),
                gdot: coef.iter().map(|c| c * alpha * cos).collect(),
                gddot: coef.iter().map(|c| -c * alpha * alpha * sin).collect(),
                u: 0.0,
                udot: 0.0,
                uddot: 0.0,
                xi: alpha * n * cos / sin,
                e: 0.0,
            })
        }
    }
}

/// Residuals of the m-factor soliton equations at a metric-space point with
/// known second derivatives: per-factor tangential residuals, the
/// normal-direction residual, and the energy-constraint residual.
pub fn warped_residuals(preset: &WarpedPreset, sample: &OracleSample) -> (Vec<f64>, f64, f64) {
    let eps = preset.epsilon;
    let n = preset.n() as f64;
    let m = preset.m();
    let l: Vec<f64> = (0..m).map(|i| sample.gdot[i] / sample.g[i]).collect();
    let tr_l: f64 = preset
        .factors
        .iter()
        .zip(&l)
        .map(|(f, li)| f.dim as f64 * li)
        .sum();
    let tr_l2: f64 = preset
        .factors
        .iter()
        .zip(&l)
        .map(|(f, li)| f.dim as f64 * li * li)
        .sum();
    let s: f64 = preset
        .factors
        .iter()
        .zip(&sample.g)
        .map(|(f, gi)| f.dim as f64 * f.lambda / (gi * gi))
        .sum();

    let tangential: Vec<f64> = (0..m)
        .map(|i| {
            let ri = preset.factors[i].lambda / (sample.g[i] * sample.g[i]);
            let ldot_i = sample.gddot[i] / sample.g[i] - l[i] * l[i];
            ri - ldot_i + (sample.udot - tr_l) * l[i] + eps / 2.0
        })
        .collect();

    let normal = -(0..m)
        .map(|i| preset.factors[i].dim as f64 * sample.gddot[i] / sample.g[i])
        .sum::<f64>()
        + sample.uddot
        + eps / 2.0;

    let xi = -sample.udot + tr_l;
    let ham = s + tr_l2 - xi * xi + (n - 1.0) * eps / 2.0 - eps * sample.u;

    (tangential, normal, ham)
}

/// Linearization data at `P+` inside the invariant subvariety transverse to
/// the one-factor locus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PPlusLinearization {
    pub matrix: [[f64; 2]; 2],
    /// Eigenvalues as (re, im) pairs.
    pub eigenvalues: [(f64, f64); 2],
    pub discriminant: f64,
    /// Complex eigenvalues (spiralling approach) iff the discriminant is
    /// negative.
    pub is_focus: bool,
}

/// Linearizes the phase flow at `P+` for hypersurface dimension `n`.
///
/// The reduced 2x2 system has characteristic polynomial
/// `lambda^2 + ((n-1)/n) lambda + 2(n-1)/n^2`, whose discriminant
/// `(n-1)(n-9)/n^2` is negative exactly for `2 <= n <= 8`.
pub fn p_plus_linearization(n: u32) -> Result<PPlusLinearization> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "linearization needs n >= 2 (got {n})"
        )));
    }
    let nf = n as f64;
    let root = (nf - 1.0).sqrt();
    let matrix = [
        [(1.0 - nf) / nf, 2.0 * root / nf],
        [-root / nf, 0.0],
    ];
    let tr = (1.0 - nf) / nf;
    let disc = (nf - 1.0) * (nf - 9.0) / (nf * nf);
    let eigenvalues = if disc >= 0.0 {
        let r = disc.sqrt();
        [((tr + r) / 2.0, 0.0), ((tr - r) / 2.0, 0.0)]
    } else {
        let i = (-disc).sqrt() / 2.0;
        [(tr / 2.0, i), (tr / 2.0, -i)]
    };
    Ok(PPlusLinearization {
        matrix,
        eigenvalues,
        discriminant: disc,
        is_focus: disc < 0.0,
    })
}

/// Lower bound `n * prod lambda_i^(d_i/n)` for the Lyapunov quantity on
/// warped products. Attained exactly on the spherical-cone locus.
pub fn lyapunov_bound(preset: &WarpedPreset) -> f64 {
    let n = preset.n() as f64;
    let prod: f64 = preset
        .factors
        .iter()
        .map(|f| f.lambda.powf(f.dim as f64 / n))
        .product();
    n * prod
}
