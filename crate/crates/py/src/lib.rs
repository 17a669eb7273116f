//! Python bindings for the soliton-hunting lab.
//!
//! Exposes the preset catalog, trajectory integration, grid scans, slices,
//! refinement, the closed-form reference solutions, and the fixed-point
//! linearization as plain Python data (dicts, lists, tuples).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use solhunt::cli::TRAJECTORY_COLUMNS;
use solhunt::geometry::{preset_catalog, CollapsePattern, OrbitPreset};
use solhunt::integrator::{integrate, IntegratorConfig};
use solhunt::shooting::{
    einstein_slice, find_clusters, refine, scan, sol_metric, RefineOptions, ScanGrid,
};
use solhunt::warped::{
    lyapunov_bound, oracle, p_plus_linearization, OracleKind, WarpedFactor, WarpedPreset,
};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn get_preset(name: &str, epsilon: Option<f64>) -> PyResult<OrbitPreset> {
    let p = preset_catalog(name).map_err(err)?;
    match epsilon {
        Some(e) => p.with_epsilon(e).map_err(err),
        None => Ok(p),
    }
}

fn make_config(preset: &OrbitPreset, step: f64, tmax: Option<f64>) -> IntegratorConfig {
    let mut cfg = IntegratorConfig::for_epsilon(step, preset.epsilon);
    if let Some(t) = tmax {
        cfg.t_max = t;
    }
    cfg
}

fn preset_dict<'py>(py: Python<'py>, p: &OrbitPreset) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("name", &p.name)?;
    d.set_item("d1", p.d1)?;
    d.set_item("d2", p.d2)?;
    d.set_item("c_q", p.c_q)?;
    d.set_item("a2", p.a2)?;
    d.set_item("epsilon", p.epsilon)?;
    d.set_item("n", p.n())?;
    d.set_item(
        "collapse",
        match p.collapse {
            CollapsePattern::SameEnd => "same_end",
            CollapsePattern::OppositeEnd => "opposite_end",
        },
    )?;
    Ok(d)
}

/// Catalog preset constants as a dict; `epsilon` overrides the default.
#[pyfunction]
#[pyo3(signature = (name, epsilon=None))]
fn preset<'py>(py: Python<'py>, name: &str, epsilon: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
    preset_dict(py, &get_preset(name, epsilon)?)
}

/// Integrates one trajectory from singular-orbit data `(hbar, ubar)`.
///
/// Returns a dict with the termination label, closing-distance minimum,
/// turning time, winding angle, and the sampled rows under the same column
/// names as the CLI CSV output (undefined entries are NaN).
#[pyfunction]
#[pyo3(signature = (name, hbar, ubar, step=0.005, tmax=None, epsilon=None, record_every=1))]
#[allow(clippy::too_many_arguments)]
fn integrate_trajectory<'py>(
    py: Python<'py>,
    name: &str,
    hbar: f64,
    ubar: f64,
    step: f64,
    tmax: Option<f64>,
    epsilon: Option<f64>,
    record_every: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let p = get_preset(name, epsilon)?;
    let mut cfg = make_config(&p, step, tmax);
    cfg.record_every = record_every;
    let traj = integrate(&p, hbar, ubar, &cfg).map_err(err)?;

    let rows = PyList::empty(py);
    for (st, diag) in &traj.samples {
        let opt = |v: Option<f64>| v.unwrap_or(f64::NAN);
        let row = vec![
            st.t,
            st.f,
            st.fdot,
            st.h,
            st.hdot,
            st.u,
            st.udot,
            diag.xi,
            opt(diag.w),
            diag.e,
            diag.f,
            opt(diag.theta),
            opt(diag.g),
            opt(diag.hcal),
            opt(diag.q),
            opt(diag.lcal),
            diag.fcal,
            diag.s,
            diag.tr_l,
            diag.ham_residual,
            diag.normal_residual,
            sol_metric(st, p.collapse),
        ];
        rows.append(row)?;
    }
    let d = PyDict::new(py);
    d.set_item("termination", traj.termination.label())?;
    d.set_item("min_sol", traj.min_sol)?;
    d.set_item("argmin_sol_t", traj.argmin_sol_t)?;
    d.set_item("turning_time", traj.turning_time)?;
    d.set_item("winding", traj.winding)?;
    d.set_item("columns", TRAJECTORY_COLUMNS.to_vec())?;
    d.set_item("rows", rows)?;
    Ok(d)
}

/// Grid scan over `(hbar, ubar)` with cluster extraction.
#[pyfunction]
#[pyo3(signature = (name, hbar_range, ubar_range, step=0.005, tmax=None, epsilon=None, threshold=0.005))]
#[allow(clippy::too_many_arguments)]
fn scan_grid<'py>(
    py: Python<'py>,
    name: &str,
    hbar_range: (f64, f64, f64),
    ubar_range: (f64, f64, f64),
    step: f64,
    tmax: Option<f64>,
    epsilon: Option<f64>,
    threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = get_preset(name, epsilon)?;
    let cfg = make_config(&p, step, tmax);
    let grid = ScanGrid::new(
        hbar_range.0,
        hbar_range.1,
        hbar_range.2,
        ubar_range.0,
        ubar_range.1,
        ubar_range.2,
    )
    .map_err(err)?;
    let result = scan(&p, &grid, &cfg).map_err(err)?;
    let clusters = find_clusters(&result, threshold);

    let cl = PyList::empty(py);
    for c in &clusters {
        let e = PyDict::new(py);
        e.set_item("centroid", c.centroid)?;
        e.set_item("best", (c.best_hbar, c.best_ubar, c.best_min_sol))?;
        e.set_item("member_count", c.members.len())?;
        cl.append(e)?;
    }
    let min_sol: Vec<Vec<f64>> = (0..result.hbar.len())
        .map(|i| (0..result.ubar.len()).map(|j| result.cell(i, j).min_sol).collect())
        .collect();
    let d = PyDict::new(py);
    d.set_item("hbar", result.hbar.clone())?;
    d.set_item("ubar", result.ubar.clone())?;
    d.set_item("min_sol", min_sol)?;
    d.set_item("threshold", threshold)?;
    d.set_item("clusters", cl)?;
    Ok(d)
}

/// Min-SOL profile along the Einstein axis as a list of `(hbar, min_sol)`.
#[pyfunction]
#[pyo3(signature = (name, hbar_min, hbar_max, hbar_step, step=0.005, tmax=None, epsilon=None))]
fn slice_einstein_axis(
    name: &str,
    hbar_min: f64,
    hbar_max: f64,
    hbar_step: f64,
    step: f64,
    tmax: Option<f64>,
    epsilon: Option<f64>,
) -> PyResult<Vec<(f64, f64)>> {
    let p = get_preset(name, epsilon)?;
    let cfg = make_config(&p, step, tmax);
    einstein_slice(&p, hbar_min, hbar_max, hbar_step, &cfg).map_err(err)
}

/// Golden-section descent of min-SOL from a seed; returns
/// `(hbar, ubar, min_sol, converged)`.
#[pyfunction]
#[pyo3(signature = (name, hbar, ubar, step=0.005, tmax=None, epsilon=None, radius=0.05))]
fn refine_seed(
    name: &str,
    hbar: f64,
    ubar: f64,
    step: f64,
    tmax: Option<f64>,
    epsilon: Option<f64>,
    radius: f64,
) -> PyResult<(f64, f64, f64, bool)> {
    let p = get_preset(name, epsilon)?;
    let cfg = make_config(&p, step, tmax);
    let opts = RefineOptions {
        radius,
        ..RefineOptions::default()
    };
    let r = refine(&p, (hbar, ubar), &cfg, &opts);
    Ok((r.hbar, r.ubar, r.min_sol, r.converged))
}

/// Closed-form reference solution evaluated at `t`.
#[pyfunction]
#[pyo3(signature = (kind, factors, epsilon, t))]
fn oracle_sample<'py>(
    py: Python<'py>,
    kind: &str,
    factors: Vec<(u32, f64)>,
    epsilon: f64,
    t: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let kind = OracleKind::parse(kind).map_err(err)?;
    let preset = WarpedPreset::new(
        factors.iter().map(|&(d, l)| WarpedFactor::new(d, l)).collect(),
        epsilon,
    )
    .map_err(err)?;
    let s = oracle(&preset, kind, t).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("t", s.t)?;
    d.set_item("g", s.g)?;
    d.set_item("gdot", s.gdot)?;
    d.set_item("u", s.u)?;
    d.set_item("udot", s.udot)?;
    d.set_item("xi", s.xi)?;
    d.set_item("E", s.e)?;
    Ok(d)
}

/// Linearization at the warped-product equilibrium for dimension `n`.
#[pyfunction]
fn linearize<'py>(py: Python<'py>, n: u32) -> PyResult<Bound<'py, PyDict>> {
    let lin = p_plus_linearization(n).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("matrix", lin.matrix.to_vec())?;
    d.set_item("eigenvalues", lin.eigenvalues.to_vec())?;
    d.set_item("discriminant", lin.discriminant)?;
    d.set_item("is_focus", lin.is_focus)?;
    Ok(d)
}

/// Lower bound of the Lyapunov quantity for a warped product.
#[pyfunction]
fn lyapunov_lower_bound(factors: Vec<(u32, f64)>, epsilon: f64) -> PyResult<f64> {
    let preset = WarpedPreset::new(
        factors.iter().map(|&(d, l)| WarpedFactor::new(d, l)).collect(),
        epsilon,
    )
    .map_err(err)?;
    Ok(lyapunov_bound(&preset))
}

/// Squared closing distance of a state tuple
/// `(f, fdot, h, hdot, udot)` under a collapse pattern.
#[pyfunction]
fn closing_distance(state: (f64, f64, f64, f64, f64), pattern: &str) -> PyResult<f64> {
    let pat = match pattern {
        "same_end" => CollapsePattern::SameEnd,
        "opposite_end" => CollapsePattern::OppositeEnd,
        _ => return Err(PyValueError::new_err("pattern must be same_end or opposite_end")),
    };
    let st = solhunt::dynamics::SolitonState {
        t: 0.0,
        f: state.0,
        fdot: state.1,
        h: state.2,
        hdot: state.3,
        u: 0.0,
        udot: state.4,
    };
    Ok(sol_metric(&st, pat))
}

#[pymodule]
fn solhunt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(scan_grid, m)?)?;
    m.add_function(wrap_pyfunction!(slice_einstein_axis, m)?)?;
    m.add_function(wrap_pyfunction!(refine_seed, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_sample, m)?)?;
    m.add_function(wrap_pyfunction!(linearize, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(closing_distance, m)?)?;
    Ok(())
}
