//! Closeness metrics, two-parameter grid scans, cluster extraction, and local
//! refinement: the soliton-hunting program.
//!
//! Each grid cell `(hbar, ubar)` integrates one trajectory and records how
//! close it came to the smooth-closing boundary data of the orbit type's
//! collapse pattern. Sub-threshold cells group into clusters that mark
//! candidate solutions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::SolitonState;
use crate::error::{Error, Result};
use crate::geometry::{CollapsePattern, OrbitPreset};
use crate::integrator::{integrate, IntegratorConfig, Termination};

/// Squared distance of `state` to the smooth-closing target of `pattern`.
///
/// Same-end closing wants `(f, fdot, hdot, udot) = (0, -1, 0, 0)`; opposite-end
/// closing wants `(fdot, h, hdot, udot) = (0, 0, -1, 0)`.
pub fn sol_metric(state: &SolitonState, pattern: CollapsePattern) -> f64 {
    let fd1 = state.fdot + 1.0;
    let hd1 = state.hdot + 1.0;
    match pattern {
        CollapsePattern::SameEnd => {
            state.f * state.f + fd1 * fd1 + state.hdot * state.hdot + state.udot * state.udot
        }
        CollapsePattern::OppositeEnd => {
            state.fdot * state.fdot + state.h * state.h + hd1 * hd1 + state.udot * state.udot
        }
    }
}

/// Rectangular search grid over the singular-orbit data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub hbar_min: f64,
    pub hbar_max: f64,
    pub hbar_step: f64,
    pub ubar_min: f64,
    pub ubar_max: f64,
    pub ubar_step: f64,
}

impl ScanGrid {
    pub fn new(
        hbar_min: f64,
        hbar_max: f64,
        hbar_step: f64,
        ubar_min: f64,
        ubar_max: f64,
        ubar_step: f64,
    ) -> Result<Self> {
        if !(hbar_step > 0.0) || !(ubar_step > 0.0) {
            return Err(Error::InvalidParameter("grid steps must be > 0".into()));
        }
        if !(hbar_min > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "hbar_min must be > 0 (got {hbar_min})"
            )));
        }
        Ok(ScanGrid {
            hbar_min,
            hbar_max,
            hbar_step,
            ubar_min,
            ubar_max,
            ubar_step,
        })
    }

    /// Clamps the `ubar` range to the admissible band `[-(n+1)/2, (n+1)/2]`
    /// for `preset`; returns the clamped grid and a warning when clamping
    /// changed anything.
    pub fn clamped_for(&self, preset: &OrbitPreset) -> (ScanGrid, Option<String>) {
        let bound = -preset.ubar_lower_bound();
        let mut g = *self;
        let mut warn = None;
        if g.ubar_min < -bound || g.ubar_max > bound {
            g.ubar_min = g.ubar_min.max(-bound);
            g.ubar_max = g.ubar_max.min(bound);
            warn = Some(format!(
                "ubar range clamped to the admissible band [{}, {}]",
                -bound, bound
            ));
        }
        (g, warn)
    }

    fn axis(min: f64, max: f64, step: f64) -> Vec<f64> {
        let mut vals = Vec::new();
        if max < min {
            return vals;
        }
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        for i in 0..count {
            vals.push(min + i as f64 * step);
        }
        vals
    }

    pub fn hbar_values(&self) -> Vec<f64> {
        Self::axis(self.hbar_min, self.hbar_max, self.hbar_step)
    }

    pub fn ubar_values(&self) -> Vec<f64> {
        Self::axis(self.ubar_min, self.ubar_max, self.ubar_step)
    }
}

/// One grid cell's outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub min_sol: f64,
    pub argmin_t: f64,
    pub termination: Termination,
}

/// Matrix of min-SOL values over the grid, with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub grid: ScanGrid,
    pub hbar: Vec<f64>,
    pub ubar: Vec<f64>,
    /// Row-major: `cells[i * ubar.len() + j]` belongs to `(hbar[i], ubar[j])`.
    pub cells: Vec<ScanCell>,
    pub preset: OrbitPreset,
    pub config: IntegratorConfig,
    pub warnings: Vec<String>,
}

impl ScanResult {
    pub fn cell(&self, i: usize, j: usize) -> &ScanCell {
        &self.cells[i * self.ubar.len() + j]
    }
}

/// Integrates every grid point and records its minimum closing distance.
///
/// Cells are independent and evaluated in parallel; results are merged in
/// deterministic `(i, j)` order. A cell whose integration cannot run is
/// recorded as aborted rather than failing the scan.
pub fn scan(preset: &OrbitPreset, grid: &ScanGrid, config: &IntegratorConfig) -> Result<ScanResult> {
    let (grid, warn) = grid.clamped_for(preset);
    let hbar = grid.hbar_values();
    let ubar = grid.ubar_values();
    let indices: Vec<(usize, usize)> = (0..hbar.len())
        .flat_map(|i| (0..ubar.len()).map(move |j| (i, j)))
        .collect();
    let cells: Vec<ScanCell> = indices
        .par_iter()
        .map(|&(i, j)| match integrate(preset, hbar[i], ubar[j], config) {
            Ok(traj) => ScanCell {
                min_sol: traj.min_sol,
                argmin_t: traj.argmin_sol_t,
                termination: traj.termination,
            },
            Err(_) => ScanCell {
                min_sol: f64::INFINITY,
                argmin_t: f64::NAN,
                termination: Termination::Aborted,
            },
        })
        .collect();
    Ok(ScanResult {
        grid,
        hbar,
        ubar,
        cells,
        preset: preset.clone(),
        config: *config,
        warnings: warn.into_iter().collect(),
    })
}

/// A connected group of sub-threshold cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Grid indices `(i, j)` of the member cells.
    pub members: Vec<(usize, usize)>,
    /// Weighted mean of the member coordinates (weights favour low SOL).
    pub centroid: (f64, f64),
    /// Best member cell.
    pub best_hbar: f64,
    pub best_ubar: f64,
    pub best_min_sol: f64,
}

/// Extracts 8-connected components of cells with `min_sol < threshold`,
/// sorted by best member value.
pub fn find_clusters(result: &ScanResult, threshold: f64) -> Vec<Cluster> {
    let ni = result.hbar.len();
    let nj = result.ubar.len();
    let below = |i: usize, j: usize| result.cell(i, j).min_sol < threshold;
    let mut visited = vec![false; ni * nj];
    let mut clusters = Vec::new();

    for i0 in 0..ni {
        for j0 in 0..nj {
            if visited[i0 * nj + j0] || !below(i0, j0) {
                continue;
            }
            let mut stack = vec![(i0, j0)];
            visited[i0 * nj + j0] = true;
            let mut members = Vec::new();
            while let Some((i, j)) = stack.pop() {
                members.push((i, j));
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let (ni2, nj2) = (i as i64 + di, j as i64 + dj);
                        if ni2 < 0 || nj2 < 0 || ni2 >= ni as i64 || nj2 >= nj as i64 {
                            continue;
                        }
                        let (i2, j2) = (ni2 as usize, nj2 as usize);
                        if !visited[i2 * nj + j2] && below(i2, j2) {
                            visited[i2 * nj + j2] = true;
                            stack.push((i2, j2));
                        }
                    }
                }
            }
            members.sort_unstable();

            let mut wsum = 0.0;
            let mut ch = 0.0;
            let mut cu = 0.0;
            let mut best = (f64::INFINITY, 0.0, 0.0);
            for &(i, j) in &members {
                let cell = result.cell(i, j);
                let w = 1.0 / cell.min_sol.max(1e-12);
                wsum += w;
                ch += w * result.hbar[i];
                cu += w * result.ubar[j];
                if cell.min_sol < best.0 {
                    best = (cell.min_sol, result.hbar[i], result.ubar[j]);
                }
            }
            clusters.push(Cluster {
                members,
                centroid: (ch / wsum, cu / wsum),
                best_hbar: best.1,
                best_ubar: best.2,
                best_min_sol: best.0,
            });
        }
    }
    clusters.sort_by(|a, b| a.best_min_sol.total_cmp(&b.best_min_sol));
    clusters
}

/// 1-D min-SOL profile along the Einstein axis `ubar = 0`.
pub fn einstein_slice(
    preset: &OrbitPreset,
    hbar_min: f64,
    hbar_max: f64,
    hbar_step: f64,
    config: &IntegratorConfig,
) -> Result<Vec<(f64, f64)>> {
    if !(hbar_step > 0.0) || !(hbar_min > 0.0) {
        return Err(Error::InvalidParameter("invalid hbar range".into()));
    }
    let hbars = ScanGrid::axis(hbar_min, hbar_max, hbar_step);
    Ok(hbars
        .par_iter()
        .map(|&hb| {
            let sol = match integrate(preset, hb, 0.0, config) {
                Ok(traj) => traj.min_sol,
                Err(_) => f64::INFINITY,
            };
            (hb, sol)
        })
        .collect())
}

/// Strict local minima of a slice profile, ignoring plateau noise above
/// `ceiling`.
pub fn slice_local_minima(profile: &[(f64, f64)], ceiling: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for k in 1..profile.len().saturating_sub(1) {
        let (_, prev) = profile[k - 1];
        let (h, cur) = profile[k];
        let (_, next) = profile[k + 1];
        if cur < prev && cur <= next && cur < ceiling {
            out.push((h, cur));
        }
    }
    out
}

/// Outcome of a local refinement around a seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineResult {
    pub hbar: f64,
    pub ubar: f64,
    pub min_sol: f64,
    /// False when the iteration budget ran out before the bracket shrank to
    /// tolerance.
    pub converged: bool,
}

/// Options for [`refine`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    /// Half-width of the initial bracket per coordinate.
    pub radius: f64,
    /// Bracket width below which a coordinate counts as converged.
    pub tol: f64,
    /// Alternating coordinate sweeps.
    pub sweeps: usize,
    /// Hard cap on objective evaluations.
    pub max_evals: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            radius: 0.05,
            tol: 1e-5,
            sweeps: 3,
            max_evals: 400,
        }
    }
}

/// Coordinate-wise golden-section descent of min-SOL from `seed`.
/// Never returns a worse value than the seed.
pub fn refine(
    preset: &OrbitPreset,
    seed: (f64, f64),
    config: &IntegratorConfig,
    opts: &RefineOptions,
) -> RefineResult {
    let ubar_bound = -preset.ubar_lower_bound();
    let mut evals = 0usize;
    let objective = |hb: f64, ub: f64, evals: &mut usize| -> f64 {
        *evals += 1;
        match integrate(preset, hb, ub, config) {
            Ok(traj) => traj.min_sol,
            Err(_) => f64::INFINITY,
        }
    };

    let (mut hb, mut ub) = seed;
    let mut best = objective(hb, ub, &mut evals);
    let (seed_hb, seed_ub, seed_val) = (hb, ub, best);
    let mut converged = true;

    const PHI: f64 = 0.618_033_988_749_894_9;
    for _ in 0..opts.sweeps {
        for coord in 0..2 {
            let center = if coord == 0 { hb } else { ub };
            let (mut lo, mut hi) = (center - opts.radius, center + opts.radius);
            if coord == 0 {
                lo = lo.max(1e-4);
            } else {
                lo = lo.max(-ubar_bound);
                hi = hi.min(ubar_bound);
            }
            let mut x1 = hi - PHI * (hi - lo);
            let mut x2 = lo + PHI * (hi - lo);
            let mut f1 = if coord == 0 {
                objective(x1, ub, &mut evals)
            } else {
                objective(hb, x1, &mut evals)
            };
            let mut f2 = if coord == 0 {
                objective(x2, ub, &mut evals)
            } else {
                objective(hb, x2, &mut evals)
            };
            while hi - lo > opts.tol {
                if evals >= opts.max_evals {
                    converged = false;
                    break;
                }
                if f1 <= f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - PHI * (hi - lo);
                    f1 = if coord == 0 {
                        objective(x1, ub, &mut evals)
                    } else {
                        objective(hb, x1, &mut evals)
                    };
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + PHI * (hi - lo);
                    f2 = if coord == 0 {
                        objective(x2, ub, &mut evals)
                    } else {
                        objective(hb, x2, &mut evals)
                    };
                }
            }
            let (xb, fb) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
            if fb < best {
                best = fb;
                if coord == 0 {
                    hb = xb;
                } else {
                    ub = xb;
                }
            }
        }
        if evals >= opts.max_evals {
            converged = false;
            break;
        }
    }

    if best <= seed_val {
        RefineResult {
            hbar: hb,
            ubar: ub,
            min_sol: best,
            converged,
        }
    } else {
        RefineResult {
            hbar: seed_hb,
            ubar: seed_ub,
            min_sol: seed_val,
            converged,
        }
    }
}
