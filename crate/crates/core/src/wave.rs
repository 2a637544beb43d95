//! Solitary-wave family by a normalized improvement iteration.
//!
//! Integrating the travelling-wave equations once gives the fixed-point form
//! `σV = A Φ'(A V)`, where `A` is the average over a unit box. For a fixed
//! norm `‖V‖₂ = 1 − δ` the map `V ↦ (1−δ) T(V)/‖T(V)‖₂`, `T = AΦ'(A·)`,
//! increases the potential energy `p = ∫Φ(AV)` and its fixed points are the
//! waves, with `σ` emerging as the multiplier.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io;
use crate::limit::{AsymptoticProfiles, LimitOde};
use crate::potential::PotentialParams;

/// Quadrature rule for the unit box average.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoxRule {
    /// Composite trapezoid rule.
    Trapezoid,
    /// Trapezoid rule with Gregory end corrections (fourth order).
    #[default]
    Gregory,
}

impl BoxRule {
    /// End weights `w_0, w_1, w_2` of the rule (interior weights are 1).
    pub fn end_weights(self) -> [f64; 3] {
        match self {
            BoxRule::Trapezoid => [0.5, 1.0, 1.0],
            BoxRule::Gregory => [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0],
        }
    }
}

/// Magnitude at the grid edge above which the box average warns.
const BOUNDARY_DECAY: f64 = 1e-14;

fn box_average_raw(v: &[f64], k: usize, h: f64, rule: BoxRule) -> Vec<f64> {
    let n = v.len();
    let [w0, w1, w2] = rule.end_weights();
    let mut out = vec![0.0; n];
    // Direct window sums keep the relative precision of exponentially small tails.
    out.par_chunks_mut(256)
        .enumerate()
        .for_each(|(chunk, dst)| {
            for (off, o) in dst.iter_mut().enumerate() {
                let i = chunk * 256 + off;
                let lo = i as isize - k as isize;
                let hi = i as isize + k as isize;
                let get = |j: isize| {
                    if j >= 0 && (j as usize) < n {
                        v[j as usize]
                    } else {
                        0.0
                    }
                };
                let mut s = 0.0;
                for j in lo.max(0)..=hi.min(n as isize - 1) {
                    s += v[j as usize];
                }
                s += (w0 - 1.0) * (get(lo) + get(hi))
                    + (w1 - 1.0) * (get(lo + 1) + get(hi - 1))
                    + (w2 - 1.0) * (get(lo + 2) + get(hi - 2));
                *o = h * s;
            }
        });
    out
}

/// Unit box average `(AV)(x) = ∫_{x−1/2}^{x+1/2} V` on the grid, with the
/// Gregory-corrected trapezoid rule. Samples beyond the grid count as zero.
pub fn box_average(v: &[f64], grid: &Grid) -> Vec<f64> {
    box_average_with(v, grid, BoxRule::default())
}

pub fn box_average_with(v: &[f64], grid: &Grid, rule: BoxRule) -> Vec<f64> {
    assert_eq!(v.len(), grid.len(), "vector does not match the grid");
    let edge = v[0].abs().max(v[v.len() - 1].abs());
    if edge > BOUNDARY_DECAY {
        log::warn!("box average input has magnitude {edge:e} at the grid boundary");
    }
    box_average_raw(v, grid.k(), grid.h(), rule)
}

pub(crate) fn l2_norm(v: &[f64], h: f64) -> f64 {
    (h * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

fn symmetrize(v: &mut [f64]) {
    let n = v.len();
    for i in 0..n / 2 {
        let s = 0.5 * (v[i] + v[n - 1 - i]);
        v[i] = s;
        v[n - 1 - i] = s;
    }
}

/// First node (counting outward from the centre) where an even profile grows.
fn unimodality_violation(v: &[f64], center: usize) -> Option<usize> {
    let vmax = v[center].abs().max(f64::MIN_POSITIVE);
    let tol = 1e-13 * vmax;
    (center..v.len() - 1).find(|&j| v[j + 1] > v[j] + tol || v[j + 1] < -tol)
}

/// A converged travelling wave `(R_δ, V_δ, σ_δ)` sampled on a grid.
#[derive(Clone, Debug)]
pub struct WaveSolution {
    pub m: f64,
    pub grid: Grid,
    pub rule: BoxRule,
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub sigma: f64,
    pub delta: f64,
    /// `ε_δ = 1 − R(0)`.
    pub eps: f64,
    /// `μ_δ = √(σ_δ ε_δ^(m+2))`.
    pub mu: f64,
    /// Potential energy `∫Φ(R)`.
    pub p: f64,
    /// Relative fixed-point residual `‖σV − AΦ'(AV)‖₂ / (σ‖V‖₂)`.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Serialize, Deserialize)]
struct GridMeta {
    #[serde(rename = "X")]
    x: f64,
    h: f64,
}

#[derive(Serialize, Deserialize)]
struct WaveMeta {
    m: f64,
    delta: f64,
    sigma: f64,
    eps: f64,
    mu: f64,
    p: f64,
    residual: f64,
    iterations: usize,
    grid: GridMeta,
    box_rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    manifest_sha256: Option<String>,
}

impl WaveSolution {
    pub fn params(&self) -> PotentialParams {
        PotentialParams::new(self.m).expect("validated at construction")
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    pub fn x(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    /// Wave speed `c = √σ`.
    pub fn speed(&self) -> f64 {
        self.sigma.sqrt()
    }

    pub fn v_norm(&self) -> f64 {
        l2_norm(&self.v, self.h())
    }

    /// FPU energy in the profile variables, `∫ ½V² + Φ(R)`.
    pub fn energy(&self) -> f64 {
        0.5 * self.v_norm().powi(2) + self.p
    }

    /// Energy of the lattice state carrying the wave, `∫ ½σV² + Φ(R)`.
    pub fn lattice_energy(&self) -> f64 {
        0.5 * self.sigma * self.v_norm().powi(2) + self.p
    }

    /// `Q_δ = Φ''(R_δ)` at every node.
    pub fn q(&self) -> Vec<f64> {
        let params = self.params();
        self.r.iter().map(|&r| params.ddphi_unchecked(r)).collect()
    }

    /// Base file name `wave_m{m}_d{delta}`.
    pub fn stem(&self) -> String {
        format!("wave_m{}_d{}", self.m, self.delta)
    }

    /// Writes `<stem>.csv` (columns `x, R, V`) and the `<stem>.json` sidecar.
    pub fn save(&self, dir: &Path, manifest_hash: Option<&str>) -> Result<(PathBuf, PathBuf)> {
        let csv = dir.join(format!("{}.csv", self.stem()));
        let json = dir.join(format!("{}.json", self.stem()));
        let x = self.x();
        io::write_csv(
            &csv,
            manifest_hash,
            &["x", "R", "V"],
            (0..x.len()).map(|i| vec![x[i], self.r[i], self.v[i]]),
        )?;
        let meta = WaveMeta {
            m: self.m,
            delta: self.delta,
            sigma: self.sigma,
            eps: self.eps,
            mu: self.mu,
            p: self.p,
            residual: self.residual,
            iterations: self.iterations,
            grid: GridMeta {
                x: self.grid.half_width(),
                h: self.grid.h(),
            },
            box_rule: format!("{:?}", self.rule),
            manifest_sha256: manifest_hash.map(str::to_string),
        };
        io::write_json(&json, &meta)?;
        Ok((csv, json))
    }

    /// Loads a wave written by [`save`](Self::save). `path` may name either
    /// the CSV file or the JSON sidecar.
    pub fn load(path: &Path) -> Result<Self> {
        let csv = path.with_extension("csv");
        let json = path.with_extension("json");
        let fmt = |reason: &str| Error::Format {
            path: json.display().to_string(),
            reason: reason.to_string(),
        };
        let value = io::read_json(&json)?;
        let meta: WaveMeta = serde_json::from_value(value).map_err(|e| fmt(&e.to_string()))?;
        let grid = Grid::from_spacing(meta.grid.x, meta.grid.h)?;
        PotentialParams::new(meta.m)?;
        let (header, rows) = io::read_csv(&csv)?;
        if header != ["x", "R", "V"] || rows.len() != grid.len() {
            return Err(Error::Format {
                path: csv.display().to_string(),
                reason: format!(
                    "expected columns x,R,V and {} rows, found {:?} and {}",
                    grid.len(),
                    header,
                    rows.len()
                ),
            });
        }
        let rule = match meta.box_rule.as_str() {
            "Trapezoid" => BoxRule::Trapezoid,
            _ => BoxRule::Gregory,
        };
        Ok(Self {
            m: meta.m,
            grid,
            rule,
            r: rows.iter().map(|r| r[1]).collect(),
            v: rows.iter().map(|r| r[2]).collect(),
            sigma: meta.sigma,
            delta: meta.delta,
            eps: meta.eps,
            mu: meta.mu,
            p: meta.p,
            residual: meta.residual,
            iterations: meta.iterations,
        })
    }
}

/// Computes the wave with norm `1 − δ` by the improvement iteration.
pub fn solve_wave(
    params: &PotentialParams,
    delta: f64,
    grid: &Grid,
    tol: f64,
    max_iter: usize,
) -> Result<WaveSolution> {
    solve_wave_with(params, delta, grid, tol, max_iter, BoxRule::default())
}

pub fn solve_wave_with(
    params: &PotentialParams,
    delta: f64,
    grid: &Grid,
    tol: f64,
    max_iter: usize,
    rule: BoxRule,
) -> Result<WaveSolution> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidInput(format!(
            "delta must lie in (0, 1/2), got {delta}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let h = grid.h();
    let k = grid.k();
    let c = grid.center();
    let norm = 1.0 - delta;

    // Indicator of [-1/2, 1/2] smoothed over 4h.
    let mut v: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|x| 0.5 * (1.0 - ((x.abs() - 0.5) / (4.0 * h)).tanh()))
        .collect();
    let s = norm / l2_norm(&v, h);
    v.iter_mut().for_each(|x| *x *= s);

    let mut p_prev = f64::NEG_INFINITY;
    let mut last_residual = f64::INFINITY;
    for iteration in 0..max_iter {
        let r = box_average_raw(&v, k, h, rule);
        let rmax = r[c];
        if rmax >= 1.0 {
            return Err(Error::Domain(format!(
                "distance profile reached {rmax} at iteration {iteration}"
            )));
        }
        let p: f64 = h * r.iter().map(|&x| params.phi_unchecked(x)).sum::<f64>();
        if p < p_prev * (1.0 - 1e-12) {
            return Err(Error::EnergyDecrease {
                iteration,
                before: p_prev,
                after: p,
            });
        }
        p_prev = p;

        let force: Vec<f64> = r.iter().map(|&x| params.dphi_unchecked(x)).collect();
        let t = box_average_raw(&force, k, h, rule);
        let t_norm = l2_norm(&t, h);
        let sigma = t_norm / norm;
        let residual = (h * v
            .iter()
            .zip(&t)
            .map(|(a, b)| (sigma * a - b).powi(2))
            .sum::<f64>())
        .sqrt()
            / (sigma * norm);

        let mut next: Vec<f64> = t.iter().map(|x| norm * x / t_norm).collect();
        symmetrize(&mut next);
        let step = (h * next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>())
        .sqrt()
            / norm;
        log::debug!("delta {delta}: iteration {iteration} residual {residual:e} step {step:e}");
        last_residual = residual;

        if residual <= tol && step <= tol {
            if let Some(node) =
                unimodality_violation(&v, c).or_else(|| unimodality_violation(&r, c))
            {
                return Err(Error::UnimodalityLost { iteration, node });
            }
            let edge = v[0].abs().max(v[v.len() - 1].abs());
            if edge > tol * v[c] {
                return Err(Error::BoundaryTruncation { magnitude: edge });
            }
            let mut r = r;
            symmetrize(&mut r);
            let eps = 1.0 - rmax;
            let m = params.m();
            return Ok(WaveSolution {
                m,
                grid: *grid,
                rule,
                r,
                v,
                sigma,
                delta,
                eps,
                mu: (sigma * eps.powf(m + 2.0)).sqrt(),
                p,
                residual,
                iterations: iteration,
            });
        }
        if let Some(node) = unimodality_violation(&next, c) {
            return Err(Error::UnimodalityLost { iteration, node });
        }
        v = next;
    }
    Err(Error::MaxIterations {
        iterations: max_iter,
        residual: last_residual,
    })
}

fn central_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for i in 2..n.saturating_sub(2) {
        d[i] = (8.0 * (f[i + 1] - f[i - 1]) - (f[i + 2] - f[i - 2])) / (12.0 * h);
    }
    if n >= 3 {
        d[1] = (f[2] - f[0]) / (2.0 * h);
        d[n - 2] = (f[n - 1] - f[n - 3]) / (2.0 * h);
        d[0] = (f[1] - f[0]) / h;
        d[n - 1] = (f[n - 1] - f[n - 2]) / h;
    }
    d
}

/// `(S₁, W₁) = (R', V')` by fourth-order central differences.
pub fn wave_derivatives(w: &WaveSolution) -> (Vec<f64>, Vec<f64>) {
    let h = w.h();
    (central_derivative(&w.r, h), central_derivative(&w.v, h))
}

/// Distances between a wave and the piecewise limit approximation at `ε_δ`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AsymptoticErrors {
    pub r_inf: f64,
    pub v_inf: f64,
    /// `ε⁻¹ |μ − μ̂|`.
    pub mu_scaled: f64,
    /// `εᵐ |σ − σ̂|`.
    pub sigma_scaled: f64,
    pub mu_hat: f64,
    pub sigma_hat: f64,
}

pub fn asymptotic_errors(w: &WaveSolution, ode: &LimitOde) -> Result<AsymptoticErrors> {
    let prof = AsymptoticProfiles::new(ode, w.eps)?;
    let x = w.x();
    let mut r_inf = 0.0_f64;
    let mut v_inf = 0.0_f64;
    for (i, &xi) in x.iter().enumerate() {
        r_inf = r_inf.max((w.r[i] - prof.r_hat(xi)).abs());
        v_inf = v_inf.max((w.v[i] - prof.v_hat(xi)).abs());
    }
    Ok(AsymptoticErrors {
        r_inf,
        v_inf,
        mu_scaled: (w.mu - prof.mu_hat).abs() / w.eps,
        sigma_scaled: w.eps.powf(w.m) * (w.sigma - prof.sigma_hat).abs(),
        mu_hat: prof.mu_hat,
        sigma_hat: prof.sigma_hat,
    })
}

/// One row of the non-degeneracy table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NondegeneracyRow {
    pub delta: f64,
    pub sigma: f64,
    /// `H = ∫ ½V² + Φ(R)`.
    pub energy: f64,
    /// `∫ ½σV² + Φ(R)`, the energy of the lattice state.
    pub lattice_energy: f64,
    pub dsigma: f64,
    pub dsigma_err: f64,
    pub denergy: f64,
    pub denergy_err: f64,
    pub dlattice_energy: f64,
    pub dlattice_energy_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NondegeneracyReport {
    pub rows: Vec<NondegeneracyRow>,
    /// σ decreases strictly along increasing δ.
    pub sigma_monotone: bool,
}

/// Relative finite-difference offset used by [`nondegeneracy`].
pub const ND_REL_STEP: f64 = 0.02;

/// Derivatives of σ and H in δ by local central differences at offsets
/// `±η, ±2η` with `η = δ/50`, Richardson-extrapolated. The reported error is
/// the difference between the two stencils.
pub fn nondegeneracy(
    params: &PotentialParams,
    grid: &Grid,
    deltas: &[f64],
) -> Result<NondegeneracyReport> {
    let mut sorted: Vec<f64> = deltas.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup();
    if sorted.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "non-degeneracy needs at least 3 distinct deltas, got {}",
            sorted.len()
        )));
    }
    const OFFSETS: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let jobs: Vec<(usize, usize, f64)> = sorted
        .iter()
        .enumerate()
        .flat_map(|(i, &d)| {
            OFFSETS
                .iter()
                .enumerate()
                .map(move |(j, &o)| (i, j, d * (1.0 + o * ND_REL_STEP)))
        })
        .collect();
    let solved: Vec<(usize, usize, f64, f64, f64)> = jobs
        .par_iter()
        .map(|&(i, j, d)| {
            let w = solve_wave(params, d, grid, 1e-11, 20_000)?;
            Ok((i, j, w.sigma, w.energy(), w.lattice_energy()))
        })
        .collect::<Result<_>>()?;

    let mut table = vec![[[0.0; 3]; 5]; sorted.len()];
    for (i, j, s, e, le) in solved {
        table[i][j] = [s, e, le];
    }
    let deriv = |f: &[[f64; 3]; 5], q: usize, eta: f64| {
        let d1 = (f[3][q] - f[1][q]) / (2.0 * eta);
        let d2 = (f[4][q] - f[0][q]) / (4.0 * eta);
        ((4.0 * d1 - d2) / 3.0, (d1 - d2).abs())
    };
    let rows: Vec<NondegeneracyRow> = sorted
        .iter()
        .zip(&table)
        .map(|(&delta, f)| {
            let eta = delta * ND_REL_STEP;
            let (dsigma, dsigma_err) = deriv(f, 0, eta);
            let (denergy, denergy_err) = deriv(f, 1, eta);
            let (dlattice_energy, dlattice_energy_err) = deriv(f, 2, eta);
            NondegeneracyRow {
                delta,
                sigma: f[2][0],
                energy: f[2][1],
                lattice_energy: f[2][2],
                dsigma,
                dsigma_err,
                denergy,
                denergy_err,
                dlattice_energy,
                dlattice_energy_err,
            }
        })
        .collect();
    let sigma_monotone = rows.windows(2).all(|w| w[1].sigma < w[0].sigma);
    if !sigma_monotone {
        log::warn!("sigma is not monotone in delta; suspect solver failure");
    }
    Ok(NondegeneracyReport {
        rows,
        sigma_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> Grid {
        Grid::new(4.0, 64).unwrap()
    }

    #[test]
    fn box_average_of_zero_is_zero() {
        let g = small_grid();
        let z = vec![0.0; g.len()];
        assert!(box_average(&z, &g).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn box_of_indicator_is_tent() {
        // Oracle: the exact convolution of two unit boxes is (1 − |x|)₊.
        let g = small_grid();
        for rule in [BoxRule::Trapezoid, BoxRule::Gregory] {
            let v: Vec<f64> = g
                .nodes()
                .iter()
                .map(|x| {
                    if x.abs() < 0.5 {
                        1.0
                    } else if x.abs() == 0.5 {
                        0.5
                    } else {
                        0.0
                    }
                })
                .collect();
            let r = box_average_with(&v, &g, rule);
            // the jumps of the indicator limit both rules to first order
            let tol = g.h();
            for (x, val) in g.nodes().iter().zip(&r) {
                assert!(
                    (val - (1.0 - x.abs()).max(0.0)).abs() <= tol,
                    "{rule:?} x={x}"
                );
            }
        }
    }

    #[test]
    fn gregory_is_exact_for_cubics() {
        let g = small_grid();
        let v: Vec<f64> = g
            .nodes()
            .iter()
            .map(|x| 1.0 + x - 2.0 * x * x + 0.5 * x.powi(3))
            .collect();
        let r = box_average_raw(&v, g.k(), g.h(), BoxRule::Gregory);
        let prim = |x: f64| x + x * x / 2.0 - 2.0 * x.powi(3) / 3.0 + x.powi(4) / 8.0;
        let c = g.center();
        for (i, ri) in r.iter().enumerate().take(c + 100).skip(c - 100) {
            let x = g.x(i);
            assert!((ri - (prim(x + 0.5) - prim(x - 0.5))).abs() < 1e-12);
        }
    }

    #[test]
    fn cauchy_schwarz_bound_holds() {
        let g = small_grid();
        let v: Vec<f64> = g
            .nodes()
            .iter()
            .map(|x| (-(x * x) * 3.0).exp() * (1.0 + x.sin()))
            .collect();
        let delta = 0.15;
        let s = (1.0 - delta) / l2_norm(&v, g.h());
        let v: Vec<f64> = v.iter().map(|x| x * s).collect();
        let r = box_average(&v, &g);
        assert!(r.iter().cloned().fold(f64::MIN, f64::max) <= 1.0 - delta);
    }

    #[test]
    fn solver_rejects_bad_delta() {
        let p = PotentialParams::new(2.0).unwrap();
        let g = small_grid();
        assert!(matches!(
            solve_wave(&p, 0.9, &g, 1e-8, 100),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            solve_wave(&p, 0.0, &g, 1e-8, 100),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            solve_wave(&p, 0.2, &g, 1e-8, 2),
            Err(Error::MaxIterations { .. })
        ));
    }

    #[test]
    fn converged_wave_invariants() {
        let p = PotentialParams::new(2.0).unwrap();
        let g = Grid::new(5.0, 64).unwrap();
        let w = solve_wave(&p, 0.2, &g, 1e-9, 1000).unwrap();
        assert!((w.v_norm() - 0.8).abs() < 1e-12);
        assert!(w.residual <= 1e-9);
        assert!(w.eps >= w.delta);
        assert!(w.sigma > 1.0);
        let n = w.v.len();
        for i in 0..n {
            assert_eq!(w.v[i], w.v[n - 1 - i]);
            assert!(w.v[i] >= 0.0 && w.r[i] >= 0.0);
        }
        assert!(unimodality_violation(&w.v, g.center()).is_none());
        let (s1, w1) = wave_derivatives(&w);
        assert_eq!(s1[g.center()], 0.0);
        assert!(s1.iter().sum::<f64>().abs() * g.h() < 1e-12);
        assert_eq!(w1[g.center()], 0.0);
    }

    #[test]
    fn save_and_load_round_trip() {
        let p = PotentialParams::new(2.0).unwrap();
        let g = Grid::new(6.0, 32).unwrap();
        let w = solve_wave(&p, 0.25, &g, 1e-9, 1000).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (csv, json) = w.save(dir.path(), Some("deadbeef")).unwrap();
        assert!(csv.ends_with("wave_m2_d0.25.csv"));
        let dir2 = tempfile::tempdir().unwrap();
        w.save(dir2.path(), Some("deadbeef")).unwrap();
        assert_eq!(
            std::fs::read(&csv).unwrap(),
            std::fs::read(dir2.path().join("wave_m2_d0.25.csv")).unwrap()
        );
        assert!(json.ends_with("wave_m2_d0.25.json"));
        let back = WaveSolution::load(&json).unwrap();
        assert_eq!(back.r, w.r);
        assert_eq!(back.v, w.v);
        assert_eq!(back.sigma, w.sigma);
        assert_eq!(back.grid, w.grid);
        assert!(WaveSolution::load(&dir.path().join("missing.csv")).is_err());
    }
}
