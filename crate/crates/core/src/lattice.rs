//! Time integration of the FPU chain `ü_j = Φ'(u_{j+1} − u_j) − Φ'(u_j − u_{j−1})`
//! in distance/velocity form with free ends.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io;
use crate::potential::PotentialParams;
use crate::wave::WaveSolution;

/// Default step as a fraction of the stability bound at the profile peak.
pub const DEFAULT_DT_FRACTION: f64 = 0.01;

/// Sites kept free of the wave at both ends.
pub const EDGE_MARGIN: usize = 5;

#[derive(Clone, Debug)]
pub struct LatticeState {
    params: PotentialParams,
    /// `r_j = u_{j+1} − u_j`, one entry fewer than `v`.
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

/// Cubic Lagrange interpolation of grid samples, zero outside the grid.
fn interpolate(f: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = f.len();
    let pos = (x - x0) / h;
    if pos < 0.0 || pos > (n - 1) as f64 {
        return 0.0;
    }
    let i = (pos.floor() as isize).clamp(1, n as isize - 3) as usize;
    let t = pos - i as f64;
    let (a, b, c, d) = (f[i - 1], f[i], f[i + 1], f[i + 2]);
    let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    w0 * a + w1 * b + w2 * c + w3 * d
}

/// `R(x)` of a wave by cubic interpolation.
pub fn wave_distance(w: &WaveSolution, x: f64) -> f64 {
    interpolate(&w.r, -w.grid.half_width(), w.h(), x)
}

/// `V(x)` of a wave by cubic interpolation.
pub fn wave_velocity(w: &WaveSolution, x: f64) -> f64 {
    interpolate(&w.v, -w.grid.half_width(), w.h(), x)
}

/// Chain length and centre that hold the wave and its travel over
/// `distance` sites with [`EDGE_MARGIN`] sites to spare.
pub fn required_length(w: &WaveSolution, distance: f64) -> (usize, usize) {
    let support = w.grid.half_width().ceil() as usize + 1;
    let center = support + EDGE_MARGIN;
    let len = center + support + distance.ceil() as usize + EDGE_MARGIN + 1;
    (len, center)
}

impl LatticeState {
    pub fn zeros(params: PotentialParams, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::InvalidInput(
                "chain needs at least two particles".into(),
            ));
        }
        Ok(Self {
            params,
            r: vec![0.0; len - 1],
            v: vec![0.0; len],
            t: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn params(&self) -> &PotentialParams {
        &self.params
    }

    pub fn energy(&self) -> f64 {
        0.5 * self.v.iter().map(|v| v * v).sum::<f64>()
            + self
                .r
                .iter()
                .map(|&r| self.params.phi_unchecked(r))
                .sum::<f64>()
    }

    pub fn momentum(&self) -> f64 {
        self.v.iter().sum()
    }

    pub fn max_distance(&self) -> f64 {
        self.r.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// `(1/π)(1 − max r)^{(m+2)/2}`.
    pub fn dt_max(&self) -> f64 {
        dt_bound(self.params.m(), self.max_distance())
    }

    /// Largest magnitude among the [`EDGE_MARGIN`] sites at either end.
    pub fn edge_magnitude(&self) -> f64 {
        let k = EDGE_MARGIN.min(self.r.len());
        let n = self.r.len();
        let nv = self.v.len();
        self.r[..k]
            .iter()
            .chain(&self.r[n - k..])
            .chain(&self.v[..k])
            .chain(&self.v[nv - k..])
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    fn kick(&mut self, tau: f64) {
        let n = self.v.len();
        let mut prev = 0.0;
        for j in 0..n {
            let next = if j + 1 < n {
                self.params.dphi_unchecked(self.r[j])
            } else {
                0.0
            };
            self.v[j] += tau * (next - prev);
            prev = next;
        }
    }

    fn drift(&mut self, dt: f64, step: usize) -> Result<()> {
        for j in 0..self.r.len() {
            let r = self.r[j] + dt * (self.v[j + 1] - self.v[j]);
            if !(r < 1.0) {
                return Err(Error::Barrier { step, bond: j, r });
            }
            self.r[j] = r;
        }
        Ok(())
    }

    fn advance(&mut self, dt: f64, step: usize) -> Result<()> {
        self.kick(0.5 * dt);
        self.drift(dt, step)?;
        self.kick(0.5 * dt);
        self.t += dt;
        Ok(())
    }

    /// One kick-drift-kick leapfrog step.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        check_dt(self, dt)?;
        self.advance(dt, 0)
    }

    /// Writes columns `j, r, v`; the last site has no bond and reports `r = 0`.
    pub fn write_csv(&self, path: &Path, manifest_hash: Option<&str>) -> Result<()> {
        io::write_csv(
            path,
            manifest_hash,
            &["j", "r", "v"],
            (0..self.v.len())
                .map(|j| vec![j as f64, self.r.get(j).copied().unwrap_or(0.0), self.v[j]]),
        )
    }
}

/// Stability bound `(1/π)(1 − r_max)^{(m+2)/2}` from `max Φ'' = (1 − r_max)^{−m−2}`.
pub fn dt_bound(m: f64, r_max: f64) -> f64 {
    let gap = (1.0 - r_max.max(0.0)).max(0.0);
    gap.powf(0.5 * (m + 2.0)) / std::f64::consts::PI
}

fn check_dt(state: &LatticeState, dt: f64) -> Result<()> {
    let max = state.dt_max();
    if !(dt > 0.0 && dt <= max) {
        return Err(Error::InvalidInput(format!(
            "time step {dt:e} outside (0, {max:e}]"
        )));
    }
    Ok(())
}

/// Lattice initial data of a travelling wave centred at site `center`:
/// `r_j = R(j + 1/2 − center)`, `v_j = −√σ V(j − center)`.
pub fn init_from_wave(w: &WaveSolution, len: usize, center: usize) -> Result<LatticeState> {
    let support = w.grid.half_width().ceil() as usize + 1;
    if center < support + EDGE_MARGIN || center + support + EDGE_MARGIN >= len {
        return Err(Error::InvalidInput(format!(
            "chain of {len} sites centred at {center} cannot hold a wave of half-width {}",
            w.grid.half_width()
        )));
    }
    let mut state = LatticeState::zeros(w.params(), len)?;
    let c = w.speed();
    for j in 0..len {
        let x = j as f64 - center as f64;
        if j + 1 < len {
            state.r[j] = wave_distance(w, x + 0.5);
        }
        state.v[j] = -c * wave_velocity(w, x);
    }
    Ok(state)
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
    pub steps: usize,
    pub energy0: f64,
    /// Maximum of `|E(t) − E(0)|/E(0)` over the run.
    pub energy_drift: f64,
    /// `|Σv(T) − Σv(0)| / max(1, |Σv(0)|)`.
    pub momentum_drift: f64,
    /// Largest magnitude seen within [`EDGE_MARGIN`] sites of either end.
    pub edge_magnitude: f64,
}

/// Integrates to `t + horizon` in steps no larger than `dt`.
pub fn run(state: &mut LatticeState, horizon: f64, dt: f64) -> Result<RunSummary> {
    if !(horizon >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "horizon must be non-negative, got {horizon}"
        )));
    }
    check_dt(state, dt)?;
    let steps = (horizon / dt).ceil() as usize;
    let tau = if steps == 0 {
        0.0
    } else {
        horizon / steps as f64
    };
    let energy0 = state.energy();
    let p0 = state.momentum();
    let mut drift = 0.0_f64;
    let mut edge = state.edge_magnitude();
    let scale = if energy0 != 0.0 { energy0.abs() } else { 1.0 };
    let t0 = state.t;
    for s in 0..steps {
        state.advance(tau, s + 1)?;
        drift = drift.max((state.energy() - energy0).abs() / scale);
        edge = edge.max(state.edge_magnitude());
    }
    state.t = t0 + horizon;
    Ok(RunSummary {
        t_final: horizon,
        dt: tau,
        steps,
        energy0,
        energy_drift: drift,
        momentum_drift: (state.momentum() - p0).abs() / p0.abs().max(1.0),
        edge_magnitude: edge,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShapeFit {
    /// Optimal shift `s`.
    pub shift: f64,
    /// `max_j |r_j − R(j + 1/2 − center − s)| / max R`.
    pub error: f64,
    /// `s / t`.
    pub speed: f64,
}

fn shape_error_at(state: &LatticeState, w: &WaveSolution, center: usize, s: f64) -> f64 {
    state
        .r
        .iter()
        .enumerate()
        .map(|(j, &r)| (r - wave_distance(w, j as f64 + 0.5 - center as f64 - s)).abs())
        .fold(0.0, f64::max)
}

/// Shape error against the shifted profile, minimized over the shift by a
/// coarse scan around `√σ t` followed by golden-section search.
pub fn fit_shape(state: &LatticeState, w: &WaveSolution, center: usize) -> ShapeFit {
    let rmax = w.r.iter().cloned().fold(0.0, f64::max);
    let guess = w.speed() * state.t;
    let f = |s: f64| shape_error_at(state, w, center, s);
    let coarse = 0.05;
    let mut best = guess;
    let mut best_val = f(guess);
    for i in -40..=40 {
        let s = guess + i as f64 * coarse;
        let val = f(s);
        if val < best_val {
            best = s;
            best_val = val;
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (best - coarse, best + coarse);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-9 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let shift = 0.5 * (lo + hi);
    let error = f(shift).min(best_val) / rmax;
    ShapeFit {
        shift,
        error,
        speed: if state.t > 0.0 { shift / state.t } else { 0.0 },
    }
}

/// Run summary together with the shape comparison, as written to JSON.
#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    #[serde(flatten)]
    pub run: RunSummary,
    pub shape_error: f64,
    pub fitted_speed: f64,
    pub sigma_ref: f64,
    pub speed_ref: f64,
    pub shift: f64,
    pub len: usize,
    pub center: usize,
}

/// Propagates a wave over `transits / √σ` time units and compares the final
/// shape. The default step is [`DEFAULT_DT_FRACTION`] of the bound at the
/// profile peak `max R`, which every bond passes through as the wave moves.
pub fn simulate_wave(
    w: &WaveSolution,
    transits: f64,
    dt: Option<f64>,
) -> Result<(SimulationReport, LatticeState, LatticeState)> {
    let horizon = transits / w.speed();
    let (len, center) = required_length(w, transits);
    let mut state = init_from_wave(w, len, center)?;
    let initial = state.clone();
    let peak = w.r.iter().cloned().fold(0.0, f64::max);
    let dt = dt.unwrap_or(DEFAULT_DT_FRACTION * dt_bound(w.m, peak));
    let run = run(&mut state, horizon, dt)?;
    let fit = fit_shape(&state, w, center);
    Ok((
        SimulationReport {
            run,
            shape_error: fit.error,
            fitted_speed: fit.speed,
            sigma_ref: w.sigma,
            speed_ref: w.speed(),
            shift: fit.shift,
            len,
            center,
        },
        initial,
        state,
    ))
}
