//! Series initialization at the singular orbit, fixed-step RK4 propagation,
//! event detection, winding accumulation, and critical-point counting.
//!
//! A trajectory starts from the singular-orbit data
//! `(f, fdot, h, hdot, u, udot) = (0, 1, hbar, 0, ubar, 0)`, where the vector
//! field is singular, so propagation hands off at a small `t0` using a parity
//! power series in `t`. From there classical RK4 runs until the time horizon,
//! a metric collapse, or a blow-up.

use serde::{Deserialize, Serialize};

use crate::dynamics::{diagnostics, ham_residual, vector_field, DiagnosticsRecord, SolitonState, EINSTEIN_EPS};
use crate::error::{Error, Result};
use crate::geometry::OrbitPreset;
use crate::shooting::sol_metric;

/// Fixed-step integration parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// RK4 step.
    pub step: f64,
    /// Time horizon.
    pub t_max: f64,
    /// Any state component exceeding this magnitude terminates the run.
    pub blowup_threshold: f64,
    /// Series handoff time as a multiple of the step.
    pub t0_factor: f64,
    /// Keep every k-th sample (the final state is always kept).
    pub record_every: usize,
    /// Target for the constraint residual at the series handoff; the handoff
    /// time is tightened until met (floored at five steps).
    pub series_tol: f64,
    /// Stop early once the closing metric drops below this value.
    pub stop_below_sol: Option<f64>,
}

impl IntegratorConfig {
    pub fn new(step: f64, t_max: f64) -> Self {
        IntegratorConfig {
            step,
            t_max,
            blowup_threshold: 1e8,
            t0_factor: 10.0,
            record_every: 1,
            series_tol: 1e-6,
            stop_below_sol: None,
        }
    }

    /// Config with the default horizon for a given soliton constant.
    pub fn for_epsilon(step: f64, epsilon: f64) -> Self {
        Self::new(step, Self::default_t_max(epsilon))
    }

    /// Default horizon `50 / sqrt(-eps)`, matching the natural time scale of
    /// the shrinker. Recorded in run manifests.
    pub fn default_t_max(epsilon: f64) -> f64 {
        50.0 / (-epsilon).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step must be > 0 (got {})",
                self.step
            )));
        }
        if !(self.t_max > self.t0_factor * self.step) {
            return Err(Error::InvalidParameter(format!(
                "t_max = {} must exceed the series handoff t0 = {}",
                self.t_max,
                self.t0_factor * self.step
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig::new(0.005, 50.0)
    }
}

/// Why propagation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedTMax,
    Collapse(Factor),
    BlowUp,
    /// The closing metric dropped below the configured early-stop value.
    TargetHit,
    /// Integration could not start or proceed (used by scans so a bad cell
    /// never aborts a whole run).
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factor {
    /// The sphere factor of scale `f`.
    Fiber,
    /// The base factor of scale `h`.
    Base,
}

impl Termination {
    pub fn label(&self) -> String {
        match self {
            Termination::ReachedTMax => "reached_t_max".into(),
            Termination::Collapse(Factor::Fiber) => "collapse_fiber".into(),
            Termination::Collapse(Factor::Base) => "collapse_base".into(),
            Termination::BlowUp => "blow_up".into(),
            Termination::TargetHit => "target_hit".into(),
            Termination::Aborted => "aborted".into(),
        }
    }
}

/// Ordered samples of state plus diagnostics, with event data.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<(SolitonState, DiagnosticsRecord)>,
    pub termination: Termination,
    /// First zero of `xi` (secant-refined across the bracketing step), if the
    /// turning point was reached.
    pub turning_time: Option<f64>,
    /// Smallest value of the closing metric over `t > t0`.
    pub min_sol: f64,
    pub argmin_sol_t: f64,
    /// Total unwrapped change of the phase angle from `t0` to the end,
    /// accumulated every step; `None` on Einstein trajectories.
    pub winding: Option<f64>,
}

/// Number of even orders carried by the singular-orbit series.
const SERIES_ORDER: usize = 12;

/// Parity power series about the singular orbit in `s = t^2`:
/// `f = t * sum F_k s^k`, `h = sum H_k s^k`, `u = sum U_k s^k`, with
/// `F_0 = 1`, `H_0 = hbar`, `U_0 = ubar` from the smoothness conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSeries {
    pub f: Vec<f64>,
    pub h: Vec<f64>,
    pub u: Vec<f64>,
}

/// Truncated series helpers in the variable `s` (all vectors share length).
mod series_ops {
    pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = a.len();
        let mut out = vec![0.0; n];
        for (i, ai) in a.iter().enumerate() {
            if *ai == 0.0 {
                continue;
            }
            for (j, bj) in b.iter().enumerate().take(n - i) {
                out[i + j] += ai * bj;
            }
        }
        out
    }

    /// Reciprocal of a series with nonzero constant term.
    pub fn recip(a: &[f64]) -> Vec<f64> {
        let n = a.len();
        let mut out = vec![0.0; n];
        out[0] = 1.0 / a[0];
        for k in 1..n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += a[j] * out[k - j];
            }
            out[k] = -acc / a[0];
        }
        out
    }

    /// `d/ds` of a series (drops one order; result padded with a zero).
    pub fn deriv(a: &[f64]) -> Vec<f64> {
        let n = a.len();
        let mut out = vec![0.0; n];
        for k in 1..n {
            out[k - 1] = k as f64 * a[k];
        }
        out
    }

    /// Multiplication by `s` (shift up).
    pub fn shift_up(a: &[f64]) -> Vec<f64> {
        let n = a.len();
        let mut out = vec![0.0; n];
        out[1..n].copy_from_slice(&a[..(n - 1)]);
        out
    }

    /// Division by `s` for a series with vanishing constant term.
    pub fn shift_down(a: &[f64]) -> Vec<f64> {
        let n = a.len();
        let mut out = vec![0.0; n];
        out[..(n - 1)].copy_from_slice(&a[1..n]);
        out
    }

    pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
        a.iter().map(|v| c * v).collect()
    }

    pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }
}

/// Solves the singular-orbit series order by order.
///
/// In `s = t^2` the field equations become regular series identities; at each
/// order the next coefficient of `h`, then `u`, then `f` appears linearly
/// with denominators `2(m+1)(2m+1+d1)` (for `h`, `u`) and `2(2m+3)(m+d1)`
/// (for `f`), so one ordered sweep determines the whole expansion.
pub fn singular_series(preset: &OrbitPreset, hbar: f64, ubar: f64) -> SingularSeries {
    use series_ops::*;
    let n = SERIES_ORDER + 1;
    let d1 = preset.d1 as f64;
    let d2 = preset.d2 as f64;
    let eps = preset.epsilon;

    let mut f = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut u = vec![0.0; n];
    f[0] = 1.0;
    h[0] = hbar;
    u[0] = ubar;

    for m in 0..SERIES_ORDER {
        // fdot = F + 2 s F' as a series in s.
        let fdot = add(&f, &scale(&shift_up(&deriv(&f)), 2.0));
        let hp = deriv(&h);
        let up = deriv(&u);
        let inv_f = recip(&f);
        let inv_h = recip(&h);
        let f2 = mul(&f, &f);
        let inv_h2 = mul(&inv_h, &inv_h);
        let inv_h3 = mul(&inv_h2, &inv_h);
        let inv_h4 = mul(&inv_h2, &inv_h2);

        // h equation: 2H' + 4sH'' =
        //   4s(1-d2) H'^2/H - 2 d1 fdot H'/F + C_Q/H - 2 a2 s F^2/H^3
        //   + 4s U' H' + (eps/2) H.
        let rhs_h = {
            let t1 = scale(&shift_up(&mul(&mul(&hp, &hp), &inv_h)), 4.0 * (1.0 - d2));
            let t2 = scale(&mul(&mul(&fdot, &hp), &inv_f), -2.0 * d1);
            let t3 = scale(&inv_h, preset.c_q);
            let t4 = scale(&shift_up(&mul(&f2, &inv_h3)), -2.0 * preset.a2);
            let t5 = scale(&shift_up(&mul(&up, &hp)), 4.0);
            let t6 = scale(&h, eps / 2.0);
            add(&add(&add(&t1, &t2), &add(&t3, &t4)), &add(&t5, &t6))
        };
        h[m + 1] = rhs_h[m] / (2.0 * (m as f64 + 1.0) * (2.0 * m as f64 + 1.0 + d1));

        // u equation: 2U' + 4sU'' =
        //   -2 d1 U' fdot/F - 4s d2 U' H'/H + 4s U'^2 + eps U.
        let hp = deriv(&h);
        let rhs_u = {
            let t1 = scale(&mul(&mul(&up, &fdot), &inv_f), -2.0 * d1);
            let t2 = scale(&shift_up(&mul(&mul(&up, &hp), &inv_h)), -4.0 * d2);
            let t3 = scale(&shift_up(&mul(&up, &up)), 4.0);
            let t4 = scale(&u, eps);
            add(&add(&t1, &t2), &add(&t3, &t4))
        };
        // The H'(m) term above used the just-solved h coefficient; the u
        // equation has no such coupling at order m.
        u[m + 1] = rhs_u[m] / (2.0 * (m as f64 + 1.0) * (2.0 * m as f64 + 1.0 + d1));

        // f equation: 6F' + 4sF'' =
        //   (d1-1) [(1 - fdot^2)/s]/F - 2 d2 fdot H'/H + (d2/d1) a2 s F^3/H^4
        //   + 2 U' fdot + (eps/2) F.
        let up = deriv(&u);
        let rhs_f = {
            let mut one_minus = scale(&mul(&fdot, &fdot), -1.0);
            one_minus[0] += 1.0;
            let t1 = scale(&mul(&shift_down(&one_minus), &inv_f), d1 - 1.0);
            let t2 = scale(&mul(&mul(&fdot, &hp), &inv_h), -2.0 * d2);
            let t3 = scale(
                &shift_up(&mul(&mul(&f2, &f), &inv_h4)),
                d2 / d1 * preset.a2,
            );
            let t4 = scale(&mul(&up, &fdot), 2.0);
            let t5 = scale(&f, eps / 2.0);
            add(&add(&t1, &t2), &add(&add(&t3, &t4), &t5))
        };
        f[m + 1] = rhs_f[m] / (2.0 * (2.0 * m as f64 + 3.0) * (m as f64 + d1));
    }

    SingularSeries { f, h, u }
}

impl SingularSeries {
    /// Evaluates the series state at `t0`.
    pub fn eval(&self, t0: f64) -> SolitonState {
        let s = t0 * t0;
        let horner = |c: &[f64]| c.iter().rev().fold(0.0, |acc, &ck| acc * s + ck);
        // d/dt of a series in s = t^2 is 2t * d/ds.
        let horner_ds = |c: &[f64]| {
            c.iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * s + k as f64 * ck)
                / s
        };
        let fs = horner(&self.f);
        let hs = horner(&self.h);
        let us = horner(&self.u);
        let fps = horner_ds(&self.f);
        let hps = horner_ds(&self.h);
        let ups = horner_ds(&self.u);
        SolitonState {
            t: t0,
            f: t0 * fs,
            fdot: fs + 2.0 * s * fps,
            h: hs,
            hdot: 2.0 * t0 * hps,
            u: us,
            udot: 2.0 * t0 * ups,
        }
    }
}

/// State at the series handoff time for singular-orbit data `(hbar, ubar)`.
///
/// The handoff starts at `t0_factor * step` and is halved until the
/// constraint residual meets `series_tol`. Tightening is floored at five
/// steps: handing off closer to the singular orbit than that destabilizes the
/// first RK4 steps, which costs far more accuracy than any series truncation.
pub fn series_start(
    preset: &OrbitPreset,
    hbar: f64,
    ubar: f64,
    config: &IntegratorConfig,
) -> Result<SolitonState> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "hbar must be > 0 (got {hbar})"
        )));
    }
    let lower = preset.ubar_lower_bound();
    if !(ubar >= lower) {
        return Err(Error::InvalidParameter(format!(
            "ubar = {ubar} below the admissible bound {lower}"
        )));
    }
    const MIN_FACTOR: f64 = 5.0;
    let series = singular_series(preset, hbar, ubar);
    let mut factor = config.t0_factor.max(MIN_FACTOR);
    loop {
        let state = series.eval(factor * config.step);
        let ham = ham_residual(preset, &state)?;
        if ham.abs() <= config.series_tol || factor <= MIN_FACTOR {
            return Ok(state);
        }
        factor = (factor / 2.0).max(MIN_FACTOR);
    }
}

/// The RK4 update increment `(k1 + 2 k2 + 2 k3 + k4)/6 * step` with the
/// standard half-step stages.
fn rk4_increment<const N: usize, F>(
    field: &F,
    t: f64,
    y: &[f64; N],
    step: f64,
) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let axpy = |y: &[f64; N], k: &[f64; N], c: f64| {
        let mut out = *y;
        for i in 0..N {
            out[i] += c * k[i];
        }
        out
    };
    let half = step / 2.0;
    let k1 = field(t, y)?;
    let k2 = field(t + half, &axpy(y, &k1, half))?;
    let k3 = field(t + half, &axpy(y, &k2, half))?;
    let k4 = field(t + step, &axpy(y, &k3, step))?;
    let mut delta = [0.0; N];
    for i in 0..N {
        delta[i] = step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if !delta[i].is_finite() {
            return Err(Error::NonFinite { context: "rk4_step" });
        }
    }
    Ok(delta)
}

/// One classical RK4 step: `y1 = y0 + (k1 + 2 k2 + 2 k3 + k4)/6 * step` with
/// the standard half-step stages. Local error is `O(step^5)`.
pub fn rk4_step<const N: usize, F>(field: &F, t: f64, y: &[f64; N], step: f64) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let delta = rk4_increment(field, t, y, step)?;
    let mut out = *y;
    for i in 0..N {
        out[i] += delta[i];
        if !out[i].is_finite() {
            return Err(Error::NonFinite { context: "rk4_step" });
        }
    }
    Ok(out)
}

fn wrap_angle(mut d: f64) -> f64 {
    use std::f64::consts::PI;
    while d > PI {
        d -= 2.0 * PI;
    }
    while d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Integrates from series data at the singular orbit.
pub fn integrate(
    preset: &OrbitPreset,
    hbar: f64,
    ubar: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let start = series_start(preset, hbar, ubar, config)?;
    integrate_from(preset, start, config)
}

/// Integrates from an arbitrary valid state (used for closed-form seeds and
/// step-order studies).
///
/// Recorded samples carry the unwrapped phase angle (continuous along the
/// trajectory) rather than the principal value.
pub fn integrate_from(
    preset: &OrbitPreset,
    start: SolitonState,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let d1 = preset.d1 as f64;
    let d2 = preset.d2 as f64;
    let eps = preset.epsilon;
    let pattern = preset.collapse;
    let field = |t: f64, z: &[f64; 6]| vector_field(preset, &SolitonState::new(t, z));
    let tr_l = |z: &[f64; 6]| d1 * z[1] / z[0] + d2 * z[3] / z[2];

    fn record(
        samples: &mut Vec<(SolitonState, DiagnosticsRecord)>,
        preset: &OrbitPreset,
        t: f64,
        z: &[f64; 6],
        theta_unwrapped: Option<f64>,
    ) -> Result<()> {
        let st = SolitonState::new(t, z);
        let mut diag = diagnostics(preset, &st)?;
        if theta_unwrapped.is_some() {
            diag.theta = theta_unwrapped;
        }
        samples.push((st, diag));
        Ok(())
    }

    let mut samples = Vec::new();
    let mut t = start.t;
    let mut z = start.to_array();

    let e0 = eps * z[4];
    let einstein = e0.abs() < EINSTEIN_EPS && z[5].abs() < EINSTEIN_EPS;
    let theta0 = (eps * z[4]).atan2(z[5]);
    let mut winding = 0.0f64;
    let mut theta_prev = theta0;
    let unwrapped = |winding: f64| (!einstein).then_some(theta0 + winding);

    record(&mut samples, preset, t, &z, unwrapped(winding))?;
    let mut last_pushed = 0usize;
    let mut step_index = 0usize;

    let mut xi_prev = -z[5] + tr_l(&z);
    let mut turning_time = None;
    let mut min_sol = f64::INFINITY;
    let mut argmin_sol_t = t;

    // Long arcs end at a strongly unstable closing orbit, so the state update
    // uses compensated (Kahan) accumulation and the clock is recomputed from
    // the step index; otherwise amplified roundoff dominates the closing
    // distance.
    let mut comp = [0.0f64; 6];

    let termination = loop {
        if t >= config.t_max - 1e-12 {
            break Termination::ReachedTMax;
        }
        let (t_prev, z_prev) = (t, z);
        match rk4_increment(&field, t, &z, config.step) {
            Ok(delta) => {
                for i in 0..6 {
                    let y = delta[i] - comp[i];
                    let sum = z[i] + y;
                    comp[i] = (sum - z[i]) - y;
                    z[i] = sum;
                }
            }
            Err(e) => {
                if last_pushed != step_index {
                    record(&mut samples, preset, t_prev, &z_prev, unwrapped(winding))?;
                }
                break match e {
                    Error::Collapse { f, .. } => {
                        Termination::Collapse(if f <= 0.0 { Factor::Fiber } else { Factor::Base })
                    }
                    _ => Termination::BlowUp,
                };
            }
        }
        step_index += 1;
        t = start.t + step_index as f64 * config.step;

        if z.iter().any(|v| !v.is_finite()) || z.iter().any(|v| v.abs() > config.blowup_threshold)
        {
            if last_pushed != step_index - 1 {
                record(&mut samples, preset, t_prev, &z_prev, unwrapped(winding))?;
            }
            break Termination::BlowUp;
        }
        if z[0] <= 0.0 || z[2] <= 0.0 {
            if last_pushed != step_index - 1 {
                record(&mut samples, preset, t_prev, &z_prev, unwrapped(winding))?;
            }
            break Termination::Collapse(if z[0] <= 0.0 { Factor::Fiber } else { Factor::Base });
        }

        // Turning point: xi is strictly decreasing, so the first sign change
        // brackets its unique zero; one secant refinement.
        let xi = -z[5] + tr_l(&z);
        if turning_time.is_none() && xi_prev > 0.0 && xi <= 0.0 {
            turning_time = Some(t_prev + config.step * xi_prev / (xi_prev - xi));
        }
        xi_prev = xi;

        if !einstein {
            let theta = (eps * z[4]).atan2(z[5]);
            winding += wrap_angle(theta - theta_prev);
            theta_prev = theta;
        }

        let sol = sol_metric(&SolitonState::new(t, &z), pattern);
        if sol < min_sol {
            min_sol = sol;
            argmin_sol_t = t;
        }

        if step_index.is_multiple_of(config.record_every) {
            record(&mut samples, preset, t, &z, unwrapped(winding))?;
            last_pushed = step_index;
        }

        if let Some(thr) = config.stop_below_sol {
            if sol < thr {
                if last_pushed != step_index {
                    record(&mut samples, preset, t, &z, unwrapped(winding))?;
                    last_pushed = step_index;
                }
                break Termination::TargetHit;
            }
        }
    };

    // Final valid state is always recorded.
    if matches!(termination, Termination::ReachedTMax) && last_pushed != step_index {
        record(&mut samples, preset, t, &z, unwrapped(winding))?;
    }

    Ok(Trajectory {
        samples,
        termination,
        turning_time,
        min_sol,
        argmin_sol_t,
        winding: (!einstein).then_some(winding),
    })
}

/// Where to stop accumulating the winding angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindingSpan {
    /// Up to the (secant-refined) turning time.
    TurningPoint,
    /// Over the whole recorded trajectory.
    End,
}

/// Accumulated unwrapped phase-angle change along the recorded samples.
///
/// Returns `None` for Einstein trajectories, when the turning point was not
/// reached with `WindingSpan::TurningPoint`, or when the sampling is too
/// coarse to unwrap reliably (a sample-to-sample jump of `pi/2` or more).
pub fn winding_angle(traj: &Trajectory, span: WindingSpan) -> Option<f64> {
    let cutoff = match span {
        WindingSpan::TurningPoint => Some(traj.turning_time?),
        WindingSpan::End => None,
    };
    let mut total = 0.0;
    let mut prev: Option<(f64, f64)> = None; // (t, theta)
    for (st, diag) in &traj.samples {
        let theta = diag.theta?;
        if let Some((t_prev, th_prev)) = prev {
            let d = wrap_angle(theta - th_prev);
            if d.abs() >= std::f64::consts::FRAC_PI_2 {
                return None;
            }
            if let Some(tt) = cutoff {
                if st.t >= tt {
                    // Fractional contribution of the bracketing interval.
                    let frac = ((tt - t_prev) / (st.t - t_prev)).clamp(0.0, 1.0);
                    return Some(total + d * frac);
                }
            }
            total += d;
        }
        prev = Some((st.t, theta));
    }
    match span {
        WindingSpan::TurningPoint => None,
        WindingSpan::End => Some(total),
    }
}

/// Number of bracketed zeros of `udot` strictly inside the recorded arc.
/// Returns 0 for Einstein trajectories.
pub fn critical_point_count(traj: &Trajectory) -> usize {
    let mut count = 0;
    let mut prev_sign = 0i8;
    for (st, _) in &traj.samples {
        let sign = if st.udot > EINSTEIN_EPS {
            1
        } else if st.udot < -EINSTEIN_EPS {
            -1
        } else {
            0
        };
        if sign != 0 {
            if prev_sign != 0 && sign != prev_sign {
                count += 1;
            }
            prev_sign = sign;
        }
    }
    count
}
