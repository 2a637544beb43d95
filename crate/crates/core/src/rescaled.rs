//! Rescaled kernel analysis.
//!
//! With `x̃ = x/ℓ` the weighted kernel equation becomes the fixed-point
//! problem `G̃ = H̃ ∗ Δ(Q̃ G̃)` with the Green function
//! `H̃(x̃) = −x̃ e^{ℓa x̃} χ(x̃ < 0)` of `(d/dx̃ − ℓa)²` and the transformed
//! Laplacian `ΔF(x̃) = e^{−a} F(x̃ + 1/ℓ) + e^{a} F(x̃ − 1/ℓ) − 2F(x̃)`.
//! As the energy grows, `Q̃ = ℓ²Q/σ` approaches
//! `P̃(x̃) = μ̄⁻² (1 + S̄(|x̃|/μ̄))^{−(m+2)}` and the kernel collapses onto the
//! odd solution `T_o = sign(x̃) S̄'(|x̃|/μ̄)/μ̄` of `T'' = −2P̃T`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io;
use crate::limit::LimitOde;
use crate::wave::WaveSolution;

/// `P̃(x̃)`.
pub fn p_tilde(ode: &LimitOde, xt: f64) -> Result<f64> {
    let mu = ode.mu_bar();
    let s = ode.s_bar(xt.abs() / mu)?;
    Ok((-(ode.m() + 2.0) * s.ln_1p()).exp() / (mu * mu))
}

pub fn build_p_tilde(ode: &LimitOde, xt: &[f64]) -> Result<Vec<f64>> {
    xt.iter().map(|&x| p_tilde(ode, x)).collect()
}

/// `(T_o(x̃), T_o'(x̃))` from the limit profile.
pub fn t_odd(ode: &LimitOde, xt: f64) -> Result<(f64, f64)> {
    let mu = ode.mu_bar();
    let xb = xt / mu;
    Ok((ode.sp_bar(xb)? / mu, ode.spp_bar(xb)? / (mu * mu)))
}

/// The even and odd solutions of `T'' = −2P̃T`, normalized by
/// `T_e' → 1` and `T_o → 1` as `x̃ → +∞`.
#[derive(Clone, Debug)]
pub struct TPair<'a> {
    ode: &'a LimitOde,
    step: f64,
    te: Vec<f64>,
    tep: Vec<f64>,
    pt: Vec<f64>,
    /// Limit slope of the unnormalized even shot from `(1, 0)`.
    pub raw_slope: f64,
}

/// Diagnostics of a [`TPair`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TPairChecks {
    pub te0: f64,
    pub to_prime0: f64,
    /// `max |T_o'' + 2P̃T_o|` on the shooting grid.
    pub certificate: f64,
    /// `max |W(x̃) − W(0)|` of the Wronskian `T_e T_o' − T_e' T_o`.
    pub wronskian_drift: f64,
    pub wronskian: f64,
    pub sup_te_affine: f64,
    pub sup_te_slope: f64,
    pub sup_to_slope: f64,
    /// `1 − T_o(x̃_max)`.
    pub to_tail: f64,
}

impl<'a> TPair<'a> {
    /// Shoots the even solution from `(1, 0)` on `[0, xt_max]` with RK4 and
    /// rescales it by the slope measured at `xt_max`.
    pub fn solve(ode: &'a LimitOde, xt_max: f64, step: f64) -> Result<Self> {
        if !(xt_max > 0.0 && step > 0.0) {
            return Err(Error::InvalidInput(
                "shooting range and step must be positive".into(),
            ));
        }
        let need = xt_max / ode.mu_bar();
        if need > ode.xbar_max() {
            return Err(Error::Range {
                arg: need,
                max: ode.xbar_max(),
            });
        }
        let n = (xt_max / step).ceil() as usize;
        let h = xt_max / n as f64;
        // P̃ at the nodes and midpoints.
        let pt_half: Vec<f64> = (0..=2 * n)
            .into_par_iter()
            .map(|j| p_tilde(ode, 0.5 * h * j as f64))
            .collect::<Result<_>>()?;
        let mut te = Vec::with_capacity(n + 1);
        let mut tep = Vec::with_capacity(n + 1);
        let (mut y, mut yp) = (1.0_f64, 0.0_f64);
        te.push(y);
        tep.push(yp);
        for i in 0..n {
            let (p0, p1, p2) = (pt_half[2 * i], pt_half[2 * i + 1], pt_half[2 * i + 2]);
            let k1 = (yp, -2.0 * p0 * y);
            let k2 = (yp + 0.5 * h * k1.1, -2.0 * p1 * (y + 0.5 * h * k1.0));
            let k3 = (yp + 0.5 * h * k2.1, -2.0 * p1 * (y + 0.5 * h * k2.0));
            let k4 = (yp + h * k3.1, -2.0 * p2 * (y + h * k3.0));
            y += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            yp += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            te.push(y);
            tep.push(yp);
        }
        let slope = yp;
        if slope.abs() < 1e-6 {
            return Err(Error::Integration(format!(
                "even shot has degenerate limit slope {slope:e}"
            )));
        }
        te.iter_mut().for_each(|v| *v /= slope);
        tep.iter_mut().for_each(|v| *v /= slope);
        let pt = pt_half.iter().step_by(2).copied().collect();
        Ok(Self {
            ode,
            step: h,
            te,
            tep,
            pt,
            raw_slope: slope,
        })
    }

    pub fn xt_max(&self) -> f64 {
        self.step * (self.te.len() - 1) as f64
    }

    fn locate(&self, ax: f64) -> Result<(usize, f64)> {
        if ax > self.xt_max() * (1.0 + 1e-14) {
            return Err(Error::Range {
                arg: ax,
                max: self.xt_max(),
            });
        }
        let pos = ax / self.step;
        let i = (pos.floor() as usize).min(self.te.len() - 2);
        Ok((i, pos - i as f64))
    }

    /// `(T_e, T_e')` at `x̃`, extended evenly.
    pub fn even(&self, xt: f64) -> Result<(f64, f64)> {
        let (i, t) = self.locate(xt.abs())?;
        let h = self.step;
        let te = hermite(
            t,
            h,
            self.te[i],
            self.te[i + 1],
            self.tep[i],
            self.tep[i + 1],
        );
        let d0 = -2.0 * self.pt[i] * self.te[i];
        let d1 = -2.0 * self.pt[i + 1] * self.te[i + 1];
        let tep = hermite(t, h, self.tep[i], self.tep[i + 1], d0, d1);
        Ok((te, xt.signum() * tep))
    }

    /// `(T_o, T_o')` at `x̃`.
    pub fn odd(&self, xt: f64) -> Result<(f64, f64)> {
        t_odd(self.ode, xt)
    }

    pub fn checks(&self) -> Result<TPairChecks> {
        let m = self.ode.m();
        let n = self.te.len();
        let h = self.step;
        let to: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| t_odd(self.ode, i as f64 * h))
            .collect::<Result<_>>()?;
        let w0 = self.te[0] * to[0].1 - self.tep[0] * to[0].0;
        let mut certificate = 0.0_f64;
        let mut drift = 0.0_f64;
        let (mut aff, mut sl, mut osl) = (0.0_f64, 0.0_f64, 0.0_f64);
        for i in 0..n {
            let x = i as f64 * h;
            let w = self.te[i] * to[i].1 - self.tep[i] * to[i].0;
            drift = drift.max((w - w0).abs());
            aff = aff.max((self.tep[i] * x - self.te[i]).abs());
            sl = sl.max(((self.tep[i] - 1.0) * x.powf(m)).abs());
            osl = osl.max((to[i].1 * x.powf(m)).abs());
            if i >= 2 && i + 2 < n {
                let d2 = (-to[i + 2].0 + 16.0 * to[i + 1].0 - 30.0 * to[i].0 + 16.0 * to[i - 1].0
                    - to[i - 2].0)
                    / (12.0 * h * h);
                certificate = certificate.max((d2 + 2.0 * self.pt[i] * to[i].0).abs());
            }
        }
        Ok(TPairChecks {
            te0: self.te[0],
            to_prime0: to[0].1,
            certificate,
            wronskian_drift: drift,
            wronskian: w0,
            sup_te_affine: aff,
            sup_te_slope: sl,
            sup_to_slope: osl,
            to_tail: 1.0 - to[n - 1].0,
        })
    }
}

fn hermite(t: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

/// Convolution with the Green function of `(d/dx̃ − b)²`, `b = δa`:
/// `(H̃ ∗ F)(x̃) = ∫_{ỹ>x̃} (ỹ − x̃) e^{b(x̃−ỹ)} F(ỹ) dỹ` on a uniform grid with
/// spacing `ht`. The integrand vanishes on the diagonal, so the trapezoid
/// rule reduces to a plain sum.
pub fn green_convolve(f: &[f64], delta: f64, a: f64, ht: f64) -> Vec<f64> {
    green_convolve_with_derivative(f, delta * a, ht).0
}

/// `(u, u')` with `u = H̃ ∗ F` for the rate `b`.
pub fn green_convolve_with_derivative(f: &[f64], b: f64, ht: f64) -> (Vec<f64>, Vec<f64>) {
    let n = f.len();
    let decay: Vec<f64> = (0..n).map(|d| (-b * d as f64 * ht).exp()).collect();
    let u: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            let mut dacc = -0.5 * f[i];
            for d in 1..n - i {
                let z = d as f64 * ht;
                acc += z * decay[d] * f[i + d];
                dacc += (b * z - 1.0) * decay[d] * f[i + d];
            }
            (ht * acc, ht * dacc)
        })
        .collect();
    u.into_iter().unzip()
}

/// `H̃(z)` for the rate `b`.
pub fn green_kernel(z: f64, b: f64) -> f64 {
    if z < 0.0 {
        -z * (b * z).exp()
    } else {
        0.0
    }
}

/// `ΔF = e^{−a}F(· + s) + e^{a}F(· − s) − 2F` with shift `s` in nodes;
/// samples beyond the vector count as zero.
pub fn transformed_laplacian(f: &[f64], shift: usize, a: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            let up = if i + shift < n { f[i + shift] } else { 0.0 };
            let dn = if i >= shift { f[i - shift] } else { 0.0 };
            (-a).exp() * up + a.exp() * dn - 2.0 * f[i]
        })
        .collect()
}

/// Maximum relative mismatch between `H̃ ∗ (ΔF)` and `(ΔH̃) ∗ F`, both summed
/// exactly on aligned grids (`F` padded by the shift on both sides).
pub fn commutation_error(f: &[f64], b: f64, a: f64, ht: f64, shift: usize) -> f64 {
    let n = f.len();
    let mut padded = vec![0.0; n + 2 * shift];
    padded[shift..shift + n].copy_from_slice(f);
    let lap = transformed_laplacian(&padded, shift, a);
    let l = shift as f64 * ht;
    let (ea, eb) = ((-a).exp(), a.exp());
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = (i + shift) as f64;
            let mut lhs = 0.0;
            for (j, &g) in lap.iter().enumerate() {
                lhs += green_kernel((xi - j as f64) * ht, b) * g;
            }
            let mut rhs = 0.0;
            for (j, &fj) in f.iter().enumerate() {
                let z = (i as f64 - j as f64) * ht;
                let dh = ea * green_kernel(z + l, b) + eb * green_kernel(z - l, b)
                    - 2.0 * green_kernel(z, b);
                rhs += dh * fj;
            }
            (ht * lhs, ht * rhs)
        })
        .collect();
    let scale = rows
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.0.abs()).max(r.1.abs()));
    let err = rows.iter().fold(0.0_f64, |m, r| m.max((r.0 - r.1).abs()));
    err / scale.max(f64::MIN_POSITIVE)
}

fn norm2(v: &[f64], h: f64) -> f64 {
    (h * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

fn norm1(v: &[f64], h: f64) -> f64 {
    h * v.iter().map(|x| x.abs()).sum::<f64>()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Empirical constants of the Green-function estimates at one δ.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GreenBoundRow {
    pub delta: f64,
    /// `(δ²‖u‖₂ + δ‖u'‖₂ + ‖u''‖₂) / ‖F‖₂`.
    pub c_sobolev: f64,
    /// `δ^{1/2} ‖u'‖_∞ / ‖F‖₂`.
    pub c_sup_l2: f64,
    /// `‖u'‖_∞ / ‖F‖₁`.
    pub c_sup_l1: f64,
    pub commutation_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GreenBoundReport {
    pub rows: Vec<GreenBoundRow>,
    /// Max over min across δ of each constant.
    pub ratios: [f64; 3],
    pub max_commutation_error: f64,
    pub uniform: bool,
}

/// Physical window and spacing of the test functions.
const BOUND_LEFT: f64 = -36.0;
const BOUND_RIGHT: f64 = 4.0;
const BOUND_NODES_PER_UNIT: usize = 64;

fn gaussian_family(seed: u64, trial: usize) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1000).wrapping_add(trial as u64));
    let count = rng.gen_range(1..=4);
    (0..count)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-3.0..1.0),
                rng.gen_range(0.15..1.0),
            )
        })
        .collect()
}

/// Constants of the Green-function bounds for seeded random test functions
/// `F(x̃) = f(δx̃)`, `f` a sum of Gaussians, at weight `a`.
pub fn green_bounds(deltas: &[f64], trials: usize, seed: u64, a: f64) -> Result<GreenBoundReport> {
    if deltas.is_empty() || trials == 0 {
        return Err(Error::InvalidInput(
            "need at least one delta and one trial".into(),
        ));
    }
    let n = ((BOUND_RIGHT - BOUND_LEFT) * BOUND_NODES_PER_UNIT as f64).round() as usize + 1;
    let h = 1.0 / BOUND_NODES_PER_UNIT as f64;
    let x: Vec<f64> = (0..n).map(|i| BOUND_LEFT + i as f64 * h).collect();
    let mut rows = Vec::new();
    for &delta in deltas {
        if !(delta > 0.0) {
            return Err(Error::InvalidInput(format!(
                "delta must be positive, got {delta}"
            )));
        }
        let ht = h / delta;
        let b = delta * a;
        let mut row = GreenBoundRow {
            delta,
            c_sobolev: 0.0,
            c_sup_l2: 0.0,
            c_sup_l1: 0.0,
            commutation_error: 0.0,
        };
        for trial in 0..trials {
            let fam = gaussian_family(seed, trial);
            let f: Vec<f64> = x
                .iter()
                .map(|&xi| {
                    fam.iter()
                        .map(|(amp, c, w)| amp * (-((xi - c) / w).powi(2)).exp())
                        .sum()
                })
                .collect();
            let f2 = norm2(&f, ht);
            let f1 = norm1(&f, ht);
            if f2 == 0.0 {
                continue;
            }
            let (u, up) = green_convolve_with_derivative(&f, b, ht);
            let upp: Vec<f64> = (0..n)
                .map(|i| f[i] + 2.0 * b * up[i] - b * b * u[i])
                .collect();
            let sob = delta * delta * norm2(&u, ht) + delta * norm2(&up, ht) + norm2(&upp, ht);
            row.c_sobolev = row.c_sobolev.max(sob / f2);
            row.c_sup_l2 = row.c_sup_l2.max(delta.sqrt() * norm_inf(&up) / f2);
            row.c_sup_l1 = row.c_sup_l1.max(norm_inf(&up) / f1);
            if trial == 0 {
                row.commutation_error = commutation_error(&f, b, a, ht, BOUND_NODES_PER_UNIT);
            }
        }
        rows.push(row);
    }
    let ratio = |g: fn(&GreenBoundRow) -> f64| {
        let vals: Vec<f64> = rows.iter().map(g).collect();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    };
    let ratios = [
        ratio(|r| r.c_sobolev),
        ratio(|r| r.c_sup_l2),
        ratio(|r| r.c_sup_l1),
    ];
    let max_commutation_error = rows.iter().map(|r| r.commutation_error).fold(0.0, f64::max);
    Ok(GreenBoundReport {
        uniform: ratios.iter().all(|&r| r <= 2.0),
        rows,
        ratios,
        max_commutation_error,
    })
}

/// Length used to rescale `x`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Scaling {
    /// `ℓ = μ_δ/μ̄`, the measured width of the inner layer.
    #[default]
    MeasuredWidth,
    /// `ℓ = δ`.
    Delta,
}

/// Rescaled kernel function and its fit against `(T_e, T_o)`.
#[derive(Clone, Debug)]
pub struct RescaledKernel {
    pub delta: f64,
    pub m: f64,
    pub a: f64,
    pub scaling: Scaling,
    pub ell: f64,
    pub ht: f64,
    pub center: usize,
    /// Nodes per shift by `1/ℓ`.
    pub shift: usize,
    pub xt: Vec<f64>,
    pub st: Vec<f64>,
    pub st_pp: Vec<f64>,
    pub gt: Vec<f64>,
    pub qt: Vec<f64>,
    pub pt: Vec<f64>,
    pub zt: Vec<f64>,
    pub te: Vec<f64>,
    pub to: Vec<f64>,
    pub c_e: f64,
    pub c_o: f64,
    pub normalization: f64,
    /// `sup_{Ĩ} |S̃ − c_e T_e − c_o T_o|`.
    pub sup_residual: f64,
    /// `max |G̃ − H̃∗Δ(Q̃G̃)| / max |G̃|`.
    pub fixed_point_residual: f64,
    pub z_inf: f64,
}

fn d1(f: &[f64], h: f64, i: usize) -> f64 {
    (8.0 * (f[i + 1] - f[i - 1]) - (f[i + 2] - f[i - 2])) / (12.0 * h)
}

fn d2(f: &[f64], h: f64, i: usize) -> f64 {
    (-(f[i + 2] + f[i - 2]) + 16.0 * (f[i + 1] + f[i - 1]) - 30.0 * f[i]) / (12.0 * h * h)
}

/// Rescales a kernel vector `G` (weight `a`, full grid) and fits it against
/// the limit solutions.
pub fn rescale_and_fit(
    wave: &WaveSolution,
    kernel: &[f64],
    tpair: &TPair<'_>,
    a: f64,
    scaling: Scaling,
) -> Result<RescaledKernel> {
    let grid: &Grid = &wave.grid;
    let n = grid.len();
    if kernel.len() != n {
        return Err(Error::InvalidInput(format!(
            "kernel vector has {} samples, grid has {n}",
            kernel.len()
        )));
    }
    let ode = tpair.ode;
    let m = wave.m;
    let ell = match scaling {
        Scaling::MeasuredWidth => wave.mu / ode.mu_bar(),
        Scaling::Delta => wave.delta,
    };
    let h = grid.h();
    let ht = h / ell;
    let c = grid.center();
    let shift = 2 * grid.k();
    let x = grid.nodes();
    let xt: Vec<f64> = x.iter().map(|v| v / ell).collect();

    let pt = build_p_tilde(ode, &xt)?;
    let q = wave.q();
    let qt: Vec<f64> = q.iter().map(|v| ell * ell / wave.sigma * v).collect();
    let zt: Vec<f64> = qt
        .iter()
        .zip(&pt)
        .map(|(a, b)| (a - b) * ell.powf(-(m + 2.0)))
        .collect();

    let mut gt = kernel.to_vec();
    let pg: Vec<f64> = gt.iter().zip(&pt).map(|(a, b)| a * b).collect();
    let nrm = gt[c].abs() + norm1(&pg, ht) + norm2(&pg, ht);
    if !(nrm > 0.0 && nrm.is_finite()) {
        return Err(Error::LinearAlgebra(
            "kernel vector cannot be normalized".into(),
        ));
    }
    gt.iter_mut().for_each(|v| *v /= nrm);
    let mut st: Vec<f64> = gt
        .iter()
        .zip(&x)
        .map(|(g, xi)| (-a * xi).exp() * g)
        .collect();

    let te_to: Vec<((f64, f64), (f64, f64))> = xt
        .par_iter()
        .map(|&v| Ok((tpair.even(v)?, tpair.odd(v)?)))
        .collect::<Result<_>>()?;
    let te: Vec<f64> = te_to.iter().map(|p| p.0 .0).collect();
    let to: Vec<f64> = te_to.iter().map(|p| p.1 .0).collect();
    let to_p0 = te_to[c].1 .1;

    let mut c_o = d1(&st, ht, c) / to_p0;
    let mut c_e = st[c] / te[c];
    if c_o < 0.0 {
        st.iter_mut().for_each(|v| *v = -*v);
        gt.iter_mut().for_each(|v| *v = -*v);
        c_o = -c_o;
        c_e = -c_e;
    }
    let mut st_pp = vec![0.0; n];
    for (i, v) in st_pp.iter_mut().enumerate().take(n - 2).skip(2) {
        *v = d2(&st, ht, i);
    }

    let half = grid.k();
    let sup_residual = (c - half..=c + half)
        .map(|i| (st[i] - c_e * te[i] - c_o * to[i]).abs())
        .fold(0.0, f64::max);

    let qg: Vec<f64> = qt.iter().zip(&gt).map(|(a, b)| a * b).collect();
    let rhs = green_convolve(&transformed_laplacian(&qg, shift, a), ell, a, ht);
    let fixed_point_residual = gt
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / norm_inf(&gt);

    let pg: Vec<f64> = gt.iter().zip(&pt).map(|(a, b)| a * b).collect();
    let normalization = gt[c].abs() + norm1(&pg, ht) + norm2(&pg, ht);
    let z_inf = norm_inf(&zt);
    Ok(RescaledKernel {
        delta: wave.delta,
        m,
        a,
        scaling,
        ell,
        ht,
        center: c,
        shift,
        xt,
        st,
        st_pp,
        gt,
        qt,
        pt,
        zt,
        te,
        to,
        c_e,
        c_o,
        normalization,
        sup_residual,
        fixed_point_residual,
        z_inf,
    })
}

impl RescaledKernel {
    /// Node range of `Ĩ = [−1/(2ℓ), 1/(2ℓ)]`.
    pub fn interval(&self) -> std::ops::RangeInclusive<usize> {
        let half = self.shift / 2;
        self.center - half..=self.center + half
    }

    /// Writes columns `xt, St, Te, To, Pt, Zt`.
    pub fn write_csv(&self, path: &Path, manifest_hash: Option<&str>) -> Result<()> {
        io::write_csv(
            path,
            manifest_hash,
            &["xt", "St", "Te", "To", "Pt", "Zt"],
            (0..self.xt.len()).map(|i| {
                vec![
                    self.xt[i], self.st[i], self.te[i], self.to[i], self.pt[i], self.zt[i],
                ]
            }),
        )
    }
}

/// Residuals of the asymptotic ODE replacement on `Ĩ`.
#[derive(Clone, Debug, Serialize)]
pub struct OdeResiduals {
    pub e0_sup: f64,
    pub eplus_sup: f64,
    pub e0_int0: f64,
    pub e0_int1: f64,
    pub eplus_int0: f64,
    pub eplus_int1: f64,
    /// `∫_Ĩ (|E₀| + |E₊|)`.
    pub int0: f64,
    /// `∫_Ĩ |x̃| (|E₀| + |E₊|)`.
    pub int1: f64,
    #[serde(skip)]
    pub e0: Vec<f64>,
    #[serde(skip)]
    pub eplus: Vec<f64>,
}

/// `E₀ = S̃'' + 2P̃S̃` and `E₊ = S̃''(· + 1/ℓ) − P̃S̃` on `Ĩ`.
pub fn asymptotic_ode_residuals(rk: &RescaledKernel) -> OdeResiduals {
    let range = rk.interval();
    let mut out = OdeResiduals {
        e0_sup: 0.0,
        eplus_sup: 0.0,
        e0_int0: 0.0,
        e0_int1: 0.0,
        eplus_int0: 0.0,
        eplus_int1: 0.0,
        int0: 0.0,
        int1: 0.0,
        e0: Vec::new(),
        eplus: Vec::new(),
    };
    for i in range {
        let e0 = rk.st_pp[i] + 2.0 * rk.pt[i] * rk.st[i];
        let ep = rk.st_pp[i + rk.shift] - rk.pt[i] * rk.st[i];
        let ax = rk.xt[i].abs();
        out.e0_sup = out.e0_sup.max(e0.abs());
        out.eplus_sup = out.eplus_sup.max(ep.abs());
        out.e0_int0 += rk.ht * e0.abs();
        out.e0_int1 += rk.ht * ax * e0.abs();
        out.eplus_int0 += rk.ht * ep.abs();
        out.eplus_int1 += rk.ht * ax * ep.abs();
        out.e0.push(e0);
        out.eplus.push(ep);
    }
    out.int0 = out.e0_int0 + out.eplus_int0;
    out.int1 = out.e0_int1 + out.eplus_int1;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::solve_limit_ode;

    fn ode() -> LimitOde {
        solve_limit_ode(2.0, 200.0, 2e-3).unwrap()
    }

    #[test]
    fn p_tilde_at_origin_and_parity() {
        let o = ode();
        assert!((p_tilde(&o, 0.0).unwrap() - 1.5).abs() < 1e-14);
        for &x in &[0.3, 2.0, 17.5] {
            assert_eq!(p_tilde(&o, x).unwrap(), p_tilde(&o, -x).unwrap());
        }
    }

    #[test]
    fn p_tilde_decay_exponent() {
        let o = ode();
        let xs = [20.0, 40.0, 80.0];
        let ys: Vec<f64> = xs.iter().map(|&x| p_tilde(&o, x).unwrap()).collect();
        let slope = crate::fit::loglog_slope(&xs, &ys).unwrap();
        assert!((slope + 4.0).abs() < 0.05, "slope {slope}");
        // S̄' → μ̄ gives x̃^{m+2} P̃ → μ̄^{-2}
        let lim = 80f64.powi(4) * ys[2];
        let target = o.mu_bar().powi(-2);
        assert!((lim / target - 1.0).abs() < 0.1, "{lim} {target}");
    }

    #[test]
    fn odd_solution_at_origin() {
        let o = ode();
        let (t, tp) = t_odd(&o, 0.0).unwrap();
        assert_eq!(t, 0.0);
        assert!((tp - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pair_certificate_and_wronskian() {
        let o = ode();
        let pair = TPair::solve(&o, 150.0, 2.5e-3).unwrap();
        let ch = pair.checks().unwrap();
        assert!(ch.certificate < 1e-6, "{ch:?}");
        assert!(ch.wronskian_drift < 1e-8, "{ch:?}");
        assert!((ch.te0 + 1.0).abs() < 0.05, "{ch:?}");
        assert!(ch.to_tail > 0.0 && ch.to_tail < 1e-3);
        let (te, tep) = pair.even(3.0).unwrap();
        let (te2, tep2) = pair.even(-3.0).unwrap();
        assert_eq!(te, te2);
        assert_eq!(tep, -tep2);
        assert!(pair.even(151.0).is_err());
    }

    #[test]
    fn green_function_property() {
        // (d/dx − b)² u = F, checked with fourth-order differences
        let b = 0.3;
        let ht = 0.01;
        let n = 2001;
        let f: Vec<f64> = (0..n)
            .map(|i| (-((i as f64 * ht - 10.0) / 1.5).powi(2)).exp())
            .collect();
        let u = green_convolve(&f, 0.3, 1.0, ht);
        let mut worst = 0.0_f64;
        for i in 400..1600 {
            let up = d1(&u, ht, i);
            let upp = d2(&u, ht, i);
            worst = worst.max((upp - 2.0 * b * up + b * b * u[i] - f[i]).abs());
        }
        assert!(worst < 1e-3, "{worst}");
        let coarse = {
            let ht = 0.02;
            let n = 1001;
            let f: Vec<f64> = (0..n)
                .map(|i| (-((i as f64 * ht - 10.0) / 1.5).powi(2)).exp())
                .collect();
            let u = green_convolve(&f, 0.3, 1.0, ht);
            (200..800)
                .map(|i| (d2(&u, ht, i) - 2.0 * b * d1(&u, ht, i) + b * b * u[i] - f[i]).abs())
                .fold(0.0, f64::max)
        };
        assert!(coarse / worst > 3.0, "{coarse} {worst}");
        assert!(green_convolve(&vec![0.0; 50], 0.1, 1.0, 0.1)
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn commutation_is_exact() {
        let ht = 0.05;
        let f: Vec<f64> = (0..600)
            .map(|i| (-((i as f64 * ht - 20.0) / 2.0).powi(2)).exp())
            .collect();
        assert!(commutation_error(&f, 0.1, 1.0, ht, 40) < 1e-13);
    }

    #[test]
    fn green_bound_constants_are_uniform_and_linear() {
        let r = green_bounds(&[0.2, 0.1, 0.05], 3, 7, 1.0).unwrap();
        assert!(r.uniform, "{r:?}");
        assert!(r.max_commutation_error < 1e-12);
        // doubling F doubles u, so the quotients are unchanged
        let ht = 0.1;
        let f: Vec<f64> = (0..300)
            .map(|i| (-(i as f64 * ht - 15.0).powi(2)).exp())
            .collect();
        let f2: Vec<f64> = f.iter().map(|v| 2.0 * v).collect();
        let (u, up) = green_convolve_with_derivative(&f, 0.1, ht);
        let (u2, up2) = green_convolve_with_derivative(&f2, 0.1, ht);
        for i in 0..f.len() {
            assert!((u2[i] - 2.0 * u[i]).abs() <= 1e-14 * u[i].abs().max(1.0));
            assert!((up2[i] - 2.0 * up[i]).abs() <= 1e-14 * up[i].abs().max(1.0));
        }
        assert!(green_bounds(&[], 3, 7, 1.0).is_err());
    }
}
