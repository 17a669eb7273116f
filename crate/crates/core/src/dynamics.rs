//! The soliton vector field, conservation-law residuals, and pointwise
//! diagnostics.
//!
//! State layout follows the first-order reduction
//! `(z1, ..., z6) = (f, fdot, h, hdot, u, udot)`. The additive freedom in the
//! potential `u` is spent fixing the conservation constant to zero, so the
//! energy-like diagnostic is `E = epsilon * u` throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ricci_components, OrbitPreset};

/// Values smaller than this (for both `E` and `F`) mark an Einstein
/// trajectory, where the phase angle is undefined.
pub const EINSTEIN_EPS: f64 = 1e-12;

/// The six phase variables at a time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonState {
    /// Arc-length coordinate.
    pub t: f64,
    /// Scale of the collapsing sphere factor.
    pub f: f64,
    pub fdot: f64,
    /// Scale of the base factor.
    pub h: f64,
    pub hdot: f64,
    /// Soliton potential.
    pub u: f64,
    pub udot: f64,
}

impl SolitonState {
    pub fn new(t: f64, z: &[f64; 6]) -> Self {
        SolitonState {
            t,
            f: z[0],
            fdot: z[1],
            h: z[2],
            hdot: z[3],
            u: z[4],
            udot: z[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.f, self.fdot, self.h, self.hdot, self.u, self.udot]
    }
}

/// Pointwise diagnostics along a trajectory.
///
/// Quantities built from `W = 1/xi` carry an `Option`: they are undefined at a
/// turning point (`xi = 0`), which is a coordinate singularity only, and
/// consumers must handle that case explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    /// Generalized mean curvature `xi = -udot + tr L`.
    pub xi: f64,
    /// `W = 1/xi`; `None` exactly when `xi == 0`.
    pub w: Option<f64>,
    /// `E = epsilon * u` (conservation constant fixed to zero).
    pub e: f64,
    /// `F = udot`.
    pub f: f64,
    /// Phase angle `atan2(E, F)`, `F`-axis horizontal; `None` on Einstein
    /// trajectories.
    pub theta: Option<f64>,
    /// `G = W^2 tr(L^2)`, nonnegative where defined.
    pub g: Option<f64>,
    /// `H = W tr L`.
    pub hcal: Option<f64>,
    /// `Q = W^2 E`.
    pub q: Option<f64>,
    /// `L = W^2 (tr(L^2) + S) - 1`.
    pub lcal: Option<f64>,
    /// Lyapunov quantity `v^(2/n) (S + tr((L0)^2))`.
    pub fcal: f64,
    /// Scalar curvature of the principal orbit.
    pub s: f64,
    /// Mean curvature `tr L`.
    pub tr_l: f64,
    /// Violation of the Hamiltonian (energy) constraint; zero on exact
    /// solutions.
    pub ham_residual: f64,
    /// Violation of the normal-direction equation; zero on exact solutions.
    pub normal_residual: f64,
}

/// Per-factor logarithmic derivatives and derived traces.
struct ShapeData {
    l1: f64,
    l2: f64,
    tr_l: f64,
    tr_l2: f64,
}

fn shape(preset: &OrbitPreset, state: &SolitonState) -> ShapeData {
    let d1 = preset.d1 as f64;
    let d2 = preset.d2 as f64;
    let l1 = state.fdot / state.f;
    let l2 = state.hdot / state.h;
    ShapeData {
        l1,
        l2,
        tr_l: d1 * l1 + d2 * l2,
        tr_l2: d1 * l1 * l1 + d2 * l2 * l2,
    }
}

/// Right-hand side of the six-dimensional soliton system at `state`.
///
/// Returns `(z1', ..., z6')`. The potential dynamics come from the
/// conservation law with constant zero.
pub fn vector_field(preset: &OrbitPreset, state: &SolitonState) -> Result<[f64; 6]> {
    let (r1, r2) = ricci_components(preset, state.f, state.h)?;
    let half_eps = preset.epsilon / 2.0;
    let sh = shape(preset, state);

    // Tangential equations give fddot/f = r1 + (udot - tr L) l1 + l1^2 + eps/2
    // (likewise for h); the potential follows the conservation law with
    // constant zero.
    let fddot = state.f * (r1 + (state.udot - sh.tr_l) * sh.l1 + sh.l1 * sh.l1 + half_eps);
    let hddot = state.h * (r2 + (state.udot - sh.tr_l) * sh.l2 + sh.l2 * sh.l2 + half_eps);
    let uddot = -state.udot * sh.tr_l + state.udot * state.udot + preset.epsilon * state.u;

    let dz = [state.fdot, fddot, state.hdot, hddot, state.udot, uddot];
    if dz.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "vector_field",
        });
    }
    Ok(dz)
}

/// Hamiltonian-constraint violation `S + tr(L^2) - xi^2 + (n-1) eps/2 - E`.
pub fn ham_residual(preset: &OrbitPreset, state: &SolitonState) -> Result<f64> {
    let (r1, r2) = ricci_components(preset, state.f, state.h)?;
    let d1 = preset.d1 as f64;
    let d2 = preset.d2 as f64;
    let n = d1 + d2;
    let sh = shape(preset, state);
    let s = d1 * r1 + d2 * r2;
    let xi = -state.udot + sh.tr_l;
    let e = preset.epsilon * state.u;
    Ok(s + sh.tr_l2 - xi * xi + (n - 1.0) * preset.epsilon / 2.0 - e)
}

/// Normal-direction equation residual
/// `-d1 fddot/f - d2 hddot/h + uddot + eps/2`, with the second derivatives
/// taken from [`vector_field`]. Zero on exact solutions; used together with
/// [`ham_residual`] as the integration-quality monitor.
pub fn normal_residual(preset: &OrbitPreset, state: &SolitonState) -> Result<f64> {
    let dz = vector_field(preset, state)?;
    let d1 = preset.d1 as f64;
    let d2 = preset.d2 as f64;
    Ok(-d1 * dz[1] / state.f - d2 * dz[3] / state.h + dz[5] + preset.epsilon / 2.0)
}

/// All pointwise diagnostics at `state`.
pub fn diagnostics(preset: &OrbitPreset, state: &SolitonState) -> Result<DiagnosticsRecord> {
    let (r1, r2) = ricci_components(preset, state.f, state.h)?;
    let d1 = preset.d1 as f64;
    let d2 = preset.d2 as f64;
    let n = d1 + d2;
    let sh = shape(preset, state);
    let s = d1 * r1 + d2 * r2;

    let xi = -state.udot + sh.tr_l;
    let w = (xi != 0.0).then(|| 1.0 / xi);
    let e = preset.epsilon * state.u;
    let f = state.udot;
    let theta = (e.abs() >= EINSTEIN_EPS || f.abs() >= EINSTEIN_EPS).then(|| e.atan2(f));

    let g = w.map(|w| w * w * sh.tr_l2);
    let hcal = w.map(|w| w * sh.tr_l);
    let q = w.map(|w| w * w * e);
    let lcal = w.map(|w| w * w * (sh.tr_l2 + s) - 1.0);

    // Traceless shape norm via the explicit two-summand formula.
    let tr_l0_sq = sh.tr_l2 - sh.tr_l * sh.tr_l / n;
    let v = state.f.powi(preset.d1 as i32) * state.h.powi(preset.d2 as i32);
    let fcal = v.powf(2.0 / n) * (s + tr_l0_sq);

    let ham = s + sh.tr_l2 - xi * xi + (n - 1.0) * preset.epsilon / 2.0 - e;
    let dz = vector_field(preset, state)?;
    let normal = -d1 * dz[1] / state.f - d2 * dz[3] / state.h + dz[5] + preset.epsilon / 2.0;

    let rec = DiagnosticsRecord {
        xi,
        w,
        e,
        f,
        theta,
        g,
        hcal,
        q,
        lcal,
        fcal,
        s,
        tr_l: sh.tr_l,
        ham_residual: ham,
        normal_residual: normal,
    };
    if !rec.xi.is_finite() || !rec.fcal.is_finite() || !rec.ham_residual.is_finite() {
        return Err(Error::NonFinite {
            context: "diagnostics",
        });
    }
    Ok(rec)
}
