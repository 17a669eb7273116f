//! Command implementations, run configuration, and data emission (CSV
//! trajectories/scans, JSON manifests and clusters, optional SVG scatter
//! plots).
//!
//! All numeric output is locale-independent with `.` as the decimal
//! separator; floats are rendered in the shortest decimal form that
//! round-trips, and undefined values appear as the literal `nan`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{preset_catalog, OrbitPreset};
use crate::integrator::{integrate, IntegratorConfig, Trajectory};
use crate::shooting::{
    einstein_slice, find_clusters, refine, scan, slice_local_minima, sol_metric, Cluster,
    RefineOptions, ScanGrid, ScanResult,
};
use crate::warped::{
    oracle, p_plus_linearization, warped_residuals, OracleKind, WarpedFactor, WarpedPreset,
};

/// Columns of a trajectory CSV, in emission order.
pub const TRAJECTORY_COLUMNS: &[&str] = &[
    "t", "f", "fdot", "h", "hdot", "u", "udot", "xi", "W", "E", "F", "theta", "G", "Hcal", "Q",
    "Lcal", "Fcal", "S", "trL", "ham_residual", "normal_residual", "sol",
];

/// Columns of a scan CSV, in emission order.
pub const SCAN_COLUMNS: &[&str] = &["hbar", "ubar", "min_sol", "argmin_t", "termination"];

/// Shortest round-trip decimal rendering; undefined values print as `nan`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt_float(v),
        None => "nan".to_string(),
    }
}

/// Renders a trajectory as CSV (LF line endings, comma delimiter).
pub fn trajectory_csv(preset: &OrbitPreset, traj: &Trajectory) -> String {
    let mut out = String::new();
    out.push_str(&TRAJECTORY_COLUMNS.join(","));
    out.push('\n');
    for (st, d) in &traj.samples {
        let sol = sol_metric(st, preset.collapse);
        let row = [
            fmt_float(st.t),
            fmt_float(st.f),
            fmt_float(st.fdot),
            fmt_float(st.h),
            fmt_float(st.hdot),
            fmt_float(st.u),
            fmt_float(st.udot),
            fmt_float(d.xi),
            fmt_opt(d.w),
            fmt_float(d.e),
            fmt_float(d.f),
            fmt_opt(d.theta),
            fmt_opt(d.g),
            fmt_opt(d.hcal),
            fmt_opt(d.q),
            fmt_opt(d.lcal),
            fmt_float(d.fcal),
            fmt_float(d.s),
            fmt_float(d.tr_l),
            fmt_float(d.ham_residual),
            fmt_float(d.normal_residual),
            fmt_float(sol),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Renders a scan result as CSV in `(i, j)` order.
pub fn scan_csv(result: &ScanResult) -> String {
    let mut out = String::new();
    out.push_str(&SCAN_COLUMNS.join(","));
    out.push('\n');
    for i in 0..result.hbar.len() {
        for j in 0..result.ubar.len() {
            let cell = result.cell(i, j);
            let row = [
                fmt_float(result.hbar[i]),
                fmt_float(result.ubar[j]),
                fmt_float(cell.min_sol),
                fmt_float(cell.argmin_t),
                cell.termination.label(),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}

/// Renders an Einstein-axis slice as CSV.
pub fn slice_csv(profile: &[(f64, f64)]) -> String {
    let mut out = String::from("hbar,min_sol\n");
    for (h, s) in profile {
        out.push_str(&format!("{},{}\n", fmt_float(*h), fmt_float(*s)));
    }
    out
}

#[derive(Debug, Serialize)]
struct ClusterReport {
    threshold: f64,
    cluster_count: usize,
    clusters: Vec<ClusterEntry>,
}

#[derive(Debug, Serialize)]
struct ClusterEntry {
    centroid_hbar: f64,
    centroid_ubar: f64,
    best_hbar: f64,
    best_ubar: f64,
    best_min_sol: f64,
    member_count: usize,
}

/// Renders extracted clusters as JSON.
pub fn clusters_json(clusters: &[Cluster], threshold: f64) -> String {
    let report = ClusterReport {
        threshold,
        cluster_count: clusters.len(),
        clusters: clusters
            .iter()
            .map(|c| ClusterEntry {
                centroid_hbar: c.centroid.0,
                centroid_ubar: c.centroid.1,
                best_hbar: c.best_hbar,
                best_ubar: c.best_ubar,
                best_min_sol: c.best_min_sol,
                member_count: c.members.len(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&report).expect("cluster report serializes");
    s.push('\n');
    s
}

/// Static SVG scatter of sub-threshold cells over the parameter rectangle.
pub fn scan_svg(result: &ScanResult, threshold: f64) -> String {
    let (w, h) = (720.0, 540.0);
    let margin = 60.0;
    let (h_lo, h_hi) = (result.grid.hbar_min, result.grid.hbar_max);
    let (u_lo, u_hi) = (result.grid.ubar_min, result.grid.ubar_max);
    let sx = |hbar: f64| margin + (hbar - h_lo) / (h_hi - h_lo).max(1e-12) * (w - 2.0 * margin);
    let sy = |ubar: f64| h - margin - (ubar - u_lo) / (u_hi - u_lo).max(1e-12) * (h - 2.0 * margin);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<rect x=\"{margin}\" y=\"{margin}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        w - 2.0 * margin,
        h - 2.0 * margin
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{} scan, SOL &lt; {}</text>\n",
        w / 2.0,
        result.preset.name,
        fmt_float(threshold)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">hbar</text>\n",
        w / 2.0,
        h - 15.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 {})\">ubar</text>\n",
        h / 2.0,
        h / 2.0
    ));
    for (val, x) in [(h_lo, sx(h_lo)), (h_hi, sx(h_hi))] {
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{}</text>\n",
            h - margin + 16.0,
            fmt_float(val)
        ));
    }
    for (val, y) in [(u_lo, sy(u_lo)), (u_hi, sy(u_hi))] {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{y}\" text-anchor=\"end\" font-size=\"10\">{}</text>\n",
            margin - 6.0,
            fmt_float(val)
        ));
    }
    for i in 0..result.hbar.len() {
        for j in 0..result.ubar.len() {
            if result.cell(i, j).min_sol < threshold {
                svg.push_str(&format!(
                    "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"steelblue\"/>\n",
                    sx(result.hbar[i]),
                    sy(result.ubar[j])
                ));
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Digest entry for one emitted file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run, plus digests of what it produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub preset: OrbitPreset,
    pub config: IntegratorConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<ScanGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ubar: Option<f64>,
    pub version: String,
    pub duration_seconds: f64,
    pub outputs: Vec<OutputDigest>,
    pub warnings: Vec<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_output(path: &Path, contents: &str) -> Result<OutputDigest> {
    fs::write(path, contents)?;
    Ok(OutputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(contents.as_bytes()),
    })
}

/// Run-configuration file: flat JSON with preset fields and integrator
/// settings. Explicit CLI flags take precedence over file values.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct FileConfig {
    /// Either a catalog name or a full preset object.
    pub preset: Option<serde_json::Value>,
    pub epsilon: Option<f64>,
    pub step: Option<f64>,
    pub tmax: Option<f64>,
    pub t0_factor: Option<f64>,
    pub record_every: Option<usize>,
    pub blowup_threshold: Option<f64>,
    pub threshold: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn preset(&self) -> Result<Option<OrbitPreset>> {
        match &self.preset {
            None => Ok(None),
            Some(serde_json::Value::String(name)) => Ok(Some(preset_catalog(name)?)),
            Some(value) => Ok(Some(serde_json::from_value(value.clone())?)),
        }
    }
}

/// Common run options shared by the integrate/scan/slice commands after flag
/// and config-file merging.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub preset: OrbitPreset,
    pub config: IntegratorConfig,
}

/// Merges CLI flags with an optional config file into a concrete preset and
/// integrator configuration. Flags win over file values.
#[allow(clippy::too_many_arguments)]
pub fn resolve_run(
    preset_flag: Option<&str>,
    config_path: Option<&Path>,
    epsilon: Option<f64>,
    step: Option<f64>,
    tmax: Option<f64>,
    t0_factor: Option<f64>,
    record_every: Option<usize>,
) -> Result<RunOptions> {
    let file = match config_path {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut preset = match preset_flag {
        Some(name) => preset_catalog(name)?,
        None => file
            .preset()?
            .ok_or_else(|| Error::InvalidParameter("missing --preset".into()))?,
    };
    if let Some(eps) = epsilon.or(file.epsilon) {
        preset = preset.with_epsilon(eps)?;
    }
    let step = step.or(file.step).unwrap_or(0.005);
    let t_max = tmax
        .or(file.tmax)
        .unwrap_or_else(|| IntegratorConfig::default_t_max(preset.epsilon));
    let mut config = IntegratorConfig::new(step, t_max);
    if let Some(tf) = t0_factor.or(file.t0_factor) {
        config.t0_factor = tf;
    }
    if let Some(re) = record_every.or(file.record_every) {
        config.record_every = re;
    }
    if let Some(bt) = file.blowup_threshold {
        config.blowup_threshold = bt;
    }
    Ok(RunOptions { preset, config })
}

fn manifest_path(explicit: Option<&Path>, base: &Path) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let mut os = base.as_os_str().to_owned();
            os.push(".manifest.json");
            PathBuf::from(os)
        }
    }
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Integrates one trajectory and emits its CSV plus a manifest.
pub fn cmd_integrate(
    run: &RunOptions,
    hbar: f64,
    ubar: f64,
    out: &Path,
    manifest_out: Option<&Path>,
) -> Result<Trajectory> {
    let started = Instant::now();
    let traj = integrate(&run.preset, hbar, ubar, &run.config)?;
    let digest = write_output(out, &trajectory_csv(&run.preset, &traj))?;
    let manifest = RunManifest {
        command: "integrate".into(),
        preset: run.preset.clone(),
        config: run.config,
        grid: None,
        threshold: None,
        hbar: Some(hbar),
        ubar: Some(ubar),
        version: env!("CARGO_PKG_VERSION").into(),
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs: vec![digest],
        warnings: vec![],
    };
    write_manifest(&manifest_path(manifest_out, out), &manifest)?;
    Ok(traj)
}

/// Scan command output: the result plus extracted clusters.
pub struct ScanOutput {
    pub result: ScanResult,
    pub clusters: Vec<Cluster>,
}

/// Runs a grid scan and emits scan CSV, cluster JSON, optional SVG, and a
/// manifest under `out_prefix`.
pub fn cmd_scan(
    run: &RunOptions,
    grid: &ScanGrid,
    threshold: f64,
    out_prefix: &str,
    svg: bool,
) -> Result<ScanOutput> {
    let started = Instant::now();
    let result = scan(&run.preset, grid, &run.config)?;
    let clusters = find_clusters(&result, threshold);

    let mut outputs = Vec::new();
    outputs.push(write_output(
        Path::new(&format!("{out_prefix}.scan.csv")),
        &scan_csv(&result),
    )?);
    outputs.push(write_output(
        Path::new(&format!("{out_prefix}.clusters.json")),
        &clusters_json(&clusters, threshold),
    )?);
    if svg {
        outputs.push(write_output(
            Path::new(&format!("{out_prefix}.svg")),
            &scan_svg(&result, threshold),
        )?);
    }
    let manifest = RunManifest {
        command: "scan".into(),
        preset: run.preset.clone(),
        config: run.config,
        grid: Some(result.grid),
        threshold: Some(threshold),
        hbar: None,
        ubar: None,
        version: env!("CARGO_PKG_VERSION").into(),
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs,
        warnings: result.warnings.clone(),
    };
    write_manifest(
        Path::new(&format!("{out_prefix}.manifest.json")),
        &manifest,
    )?;
    Ok(ScanOutput { result, clusters })
}

/// Einstein-axis slice with optional refinement of its local minima.
pub fn cmd_slice(
    run: &RunOptions,
    hbar_min: f64,
    hbar_max: f64,
    hbar_step: f64,
    out: &Path,
    refine_minima: bool,
) -> Result<Vec<(f64, f64)>> {
    let started = Instant::now();
    let profile = einstein_slice(&run.preset, hbar_min, hbar_max, hbar_step, &run.config)?;
    let mut outputs = vec![write_output(out, &slice_csv(&profile))?];
    if refine_minima {
        let minima = slice_local_minima(&profile, 1.0);
        let mut text = String::from("hbar,min_sol\n");
        for (h, _) in &minima {
            let r = refine(&run.preset, (*h, 0.0), &run.config, &RefineOptions::default());
            text.push_str(&format!("{},{}\n", fmt_float(r.hbar), fmt_float(r.min_sol)));
        }
        let mut os = out.as_os_str().to_owned();
        os.push(".minima.csv");
        outputs.push(write_output(Path::new(&os), &text)?);
    }
    let manifest = RunManifest {
        command: "slice".into(),
        preset: run.preset.clone(),
        config: run.config,
        grid: None,
        threshold: None,
        hbar: None,
        ubar: None,
        version: env!("CARGO_PKG_VERSION").into(),
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs,
        warnings: vec![],
    };
    write_manifest(&manifest_path(None, out), &manifest)?;
    Ok(profile)
}

/// Result of a closed-form verification run.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub oracle: String,
    pub samples: usize,
    pub max_ode_residual: f64,
    pub max_ham_residual: f64,
    /// Max deviation of the integrated trajectory from the closed form on the
    /// initial arc (smooth Gaussian with two factors only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_track_deviation: Option<f64>,
    pub residual_tol: f64,
    pub track_tol: f64,
    pub passed: bool,
}

/// Checks a closed-form solution against the field equations at `samples`
/// interior times, and (for the two-factor smooth Gaussian) against the
/// integrated trajectory on an initial arc.
pub fn cmd_verify(
    kind: OracleKind,
    factors: &[WarpedFactor],
    epsilon: f64,
    t_max: Option<f64>,
    samples: usize,
) -> Result<VerifyReport> {
    let preset = WarpedPreset::new(factors.to_vec(), epsilon)?;
    let n = preset.n() as f64;
    let residual_tol = 1e-10;
    let track_tol = 1e-4;

    // Sample strictly inside the domain, away from the endpoints.
    let t_hi = match kind {
        OracleKind::SphericalCone => {
            let alpha = (-epsilon / (2.0 * n)).sqrt();
            0.95 * std::f64::consts::PI / alpha
        }
        _ => t_max.unwrap_or(IntegratorConfig::default_t_max(epsilon) / 10.0),
    };
    let t_lo = 0.05 * t_hi;

    let mut max_ode = 0.0f64;
    let mut max_ham = 0.0f64;
    for k in 0..samples {
        let t = t_lo + (t_hi - t_lo) * k as f64 / (samples.max(2) - 1) as f64;
        let s = oracle(&preset, kind, t)?;
        let (tangential, normal, ham) = warped_residuals(&preset, &s);
        for r in tangential {
            max_ode = max_ode.max(r.abs());
        }
        max_ode = max_ode.max(normal.abs());
        max_ham = max_ham.max(ham.abs());
    }

    // Two-factor smooth Gaussian: also shoot from the matching initial data
    // and measure how long the closed form is tracked.
    let max_track = if kind == OracleKind::SmoothGaussian && preset.m() == 2 {
        let d1 = preset.factors[0].dim;
        let d2 = preset.factors[1].dim;
        let z_preset = OrbitPreset::new(
            "gaussian-check",
            d1,
            d2,
            preset.factors[1].lambda,
            0.0,
            epsilon,
            crate::geometry::CollapsePattern::SameEnd,
        )?;
        let hbar = (2.0 * preset.factors[1].lambda / -epsilon).sqrt();
        let ubar = -((d1 as f64) + 1.0) / 2.0;
        let mut cfg = IntegratorConfig::for_epsilon(0.005, epsilon);
        cfg.t_max = t_max.unwrap_or(0.5f64.max(20.0 * cfg.step));
        let traj = integrate(&z_preset, hbar, ubar, &cfg)?;
        let mut dev = 0.0f64;
        for (st, _) in traj.samples.iter().filter(|(st, _)| st.t <= 0.5) {
            let want = oracle(&preset, kind, st.t)?;
            dev = dev.max((st.f - want.g[0]).abs());
            dev = dev.max((st.h - want.g[1]).abs());
            dev = dev.max((st.u - want.u).abs());
        }
        Some(dev)
    } else {
        None
    };

    let passed = max_ode < residual_tol
        && max_ham < residual_tol
        && max_track.is_none_or(|d| d < track_tol);
    Ok(VerifyReport {
        oracle: format!("{kind:?}"),
        samples,
        max_ode_residual: max_ode,
        max_ham_residual: max_ham,
        max_track_deviation: max_track,
        residual_tol,
        track_tol,
        passed,
    })
}

/// Text report for the fixed-point linearization.
pub fn linearize_report(n: u32) -> Result<String> {
    let lin = p_plus_linearization(n)?;
    let mut s = String::new();
    s.push_str(&format!("n = {n}\n"));
    s.push_str(&format!(
        "matrix = [[{}, {}], [{}, {}]]\n",
        fmt_float(lin.matrix[0][0]),
        fmt_float(lin.matrix[0][1]),
        fmt_float(lin.matrix[1][0]),
        fmt_float(lin.matrix[1][1])
    ));
    for (k, (re, im)) in lin.eigenvalues.iter().enumerate() {
        s.push_str(&format!(
            "eigenvalue_{k} = {} {} {}i\n",
            fmt_float(*re),
            if *im < 0.0 { "-" } else { "+" },
            fmt_float(im.abs())
        ));
    }
    s.push_str(&format!("discriminant = {}\n", fmt_float(lin.discriminant)));
    s.push_str(&format!("is_focus = {}\n", lin.is_focus));
    Ok(s)
}

/// Parses a `lo:hi:step` range flag.
pub fn parse_range(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidParameter(format!(
            "expected lo:hi:step, got `{s}`"
        )));
    }
    let parse = |p: &str| {
        p.parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("bad number `{p}` in range `{s}`")))
    };
    Ok((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?))
}

/// Parses a factors flag `d:lambda,d:lambda,...`.
pub fn parse_factors(s: &str) -> Result<Vec<WarpedFactor>> {
    s.split(',')
        .map(|part| {
            let (d, l) = part.split_once(':').ok_or_else(|| {
                Error::InvalidParameter(format!("expected dim:lambda, got `{part}`"))
            })?;
            let dim: u32 = d
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad dimension `{d}`")))?;
            let lambda: f64 = l
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad lambda `{l}`")))?;
            Ok(WarpedFactor::new(dim, lambda))
        })
        .collect()
}

/// Formats a verification report as stable key = value lines.
pub fn verify_report_text(report: &VerifyReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("oracle = {}\n", report.oracle));
    s.push_str(&format!("samples = {}\n", report.samples));
    s.push_str(&format!(
        "max_ode_residual = {}\n",
        fmt_float(report.max_ode_residual)
    ));
    s.push_str(&format!(
        "max_ham_residual = {}\n",
        fmt_float(report.max_ham_residual)
    ));
    if let Some(d) = report.max_track_deviation {
        s.push_str(&format!("max_track_deviation = {}\n", fmt_float(d)));
    }
    s.push_str(&format!("passed = {}\n", report.passed));
    s
}
