//! Limit profile of the high-energy asymptotics.
//!
//! The inner layer of the wave is governed by the initial-value problem
//!
//! ```text
//! S''(x) = 2/(m+1) · (1 + S(x))^-(m+1),   S(0) = S'(0) = 0,
//! ```
//!
//! whose first integral `S'² = μ̄² − 4/(m(m+1)) · (1+S)^-m` fixes the limit
//! slope `μ̄ = 2/√(m(m+1))`. The offset `κ̄ = ∫₀^∞ x S''(x) dx` of the affine
//! asymptote `S ≈ μ̄x − κ̄` enters the corrected length scale `μ̂_ε` of the
//! piecewise approximations `R̂_ε`, `V̂_ε`.

use crate::error::{Error, Result};

/// Drift of the first integral beyond which an integration is rejected.
const ENERGY_DRIFT_LIMIT: f64 = 1e-6;

/// Disagreement of the two κ̄ routes that triggers a divergence warning.
const KAPPA_ROUTE_TOLERANCE: f64 = 1e-4;

/// Slope of the affine asymptote of the limit profile.
pub fn mu_bar(m: f64) -> f64 {
    2.0 / (m * (m + 1.0)).sqrt()
}

fn limit_rhs(m: f64, s: f64) -> f64 {
    2.0 / (m + 1.0) * (-(m + 1.0) * s.ln_1p()).exp()
}

/// Both estimates of κ̄ and the tail correction used by the quadrature route.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct KappaEstimate {
    /// ∫₀^X x S'' dx by composite Simpson plus the analytic remainder.
    pub quadrature: f64,
    /// `X S'(X) − S(X)` extrapolated in X.
    pub by_parts: f64,
    /// Analytic remainder beyond `X`, included in `quadrature`.
    pub tail: f64,
    pub diverged: bool,
}

impl KappaEstimate {
    pub fn disagreement(&self) -> f64 {
        (self.quadrature - self.by_parts).abs()
    }
}

/// Tabulated solution of the limit initial-value problem on `[0, xbar_max]`.
#[derive(Clone, Debug)]
pub struct LimitOde {
    m: f64,
    step: f64,
    s: Vec<f64>,
    sp: Vec<f64>,
    mu_bar: f64,
    kappa: KappaEstimate,
    energy_drift: f64,
    richardson_error: f64,
}

fn rk4_limit(m: f64, step: f64, n: usize, mut on_step: impl FnMut(f64, f64)) -> (f64, f64) {
    let (mut s, mut v) = (0.0_f64, 0.0_f64);
    on_step(s, v);
    for _ in 0..n {
        let k1s = v;
        let k1v = limit_rhs(m, s);
        let k2s = v + 0.5 * step * k1v;
        let k2v = limit_rhs(m, s + 0.5 * step * k1s);
        let k3s = v + 0.5 * step * k2v;
        let k3v = limit_rhs(m, s + 0.5 * step * k2s);
        let k4s = v + step * k3v;
        let k4v = limit_rhs(m, s + step * k3s);
        s += step / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
        v += step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        on_step(s, v);
    }
    (s, v)
}

/// Integrates the limit problem with the classical fourth-order Runge–Kutta
/// method. The step is adjusted down so that `xbar_max` is hit exactly.
pub fn solve_limit_ode(m: f64, xbar_max: f64, step: f64) -> Result<LimitOde> {
    if !(m.is_finite() && m > 1.0) {
        return Err(Error::InvalidInput(format!("m must exceed 1, got {m}")));
    }
    if !(xbar_max.is_finite() && xbar_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "xbar_max must be positive, got {xbar_max}"
        )));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step must be positive, got {step}"
        )));
    }
    // An even number of steps keeps Simpson's rule and the Richardson
    // comparison at half resolution aligned with the table.
    let mut n = (xbar_max / step).round().max(2.0) as usize;
    n += n % 2;
    let h = xbar_max / n as f64;

    let mut s = Vec::with_capacity(n + 1);
    let mut sp = Vec::with_capacity(n + 1);
    rk4_limit(m, h, n, |a, b| {
        s.push(a);
        sp.push(b);
    });

    let mu = mu_bar(m);
    let c = 4.0 / (m * (m + 1.0));
    let mut energy_drift = 0.0_f64;
    for (&a, &b) in s.iter().zip(&sp) {
        let r = b * b - mu * mu + c * (-m * a.ln_1p()).exp();
        if !r.is_finite() {
            return Err(Error::Integration(format!(
                "non-finite state with step {h}"
            )));
        }
        energy_drift = energy_drift.max(r.abs());
    }
    if energy_drift > ENERGY_DRIFT_LIMIT {
        return Err(Error::Integration(format!(
            "first-integral drift {energy_drift:e} exceeds {ENERGY_DRIFT_LIMIT:e}; step {h} too large"
        )));
    }

    let (s_coarse, _) = rk4_limit(m, 2.0 * h, n / 2, |_, _| {});
    let richardson_error = (s[n] - s_coarse).abs() / 15.0;

    let mut ode = LimitOde {
        m,
        step: h,
        s,
        sp,
        mu_bar: mu,
        kappa: KappaEstimate {
            quadrature: f64::NAN,
            by_parts: f64::NAN,
            tail: f64::NAN,
            diverged: false,
        },
        energy_drift,
        richardson_error,
    };
    ode.kappa = ode.estimate_kappa();
    if ode.kappa.diverged {
        log::warn!(
            "kappa routes disagree by {:e} (quadrature {}, by parts {})",
            ode.kappa.disagreement(),
            ode.kappa.quadrature,
            ode.kappa.by_parts
        );
    }
    Ok(ode)
}

/// κ̄ of a solved limit problem, with both evaluation routes.
pub fn kappa_bar(ode: &LimitOde) -> KappaEstimate {
    ode.kappa
}

impl LimitOde {
    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn xbar_max(&self) -> f64 {
        self.step * (self.s.len() - 1) as f64
    }

    pub fn mu_bar(&self) -> f64 {
        self.mu_bar
    }

    pub fn kappa_bar(&self) -> f64 {
        self.kappa.quadrature
    }

    pub fn kappa_estimate(&self) -> KappaEstimate {
        self.kappa
    }

    /// Largest deviation from the first integral over the table.
    pub fn energy_drift(&self) -> f64 {
        self.energy_drift
    }

    /// Richardson estimate of the error of `S(xbar_max)`.
    pub fn richardson_error(&self) -> f64 {
        self.richardson_error
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// `(x̄, S̄, S̄')` at every tabulated node.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.s
            .iter()
            .zip(&self.sp)
            .enumerate()
            .map(|(i, (&s, &sp))| (i as f64 * self.step, s, sp))
    }

    /// Partial moment `∫₀^{x_n} x S''(x) dx` at node `n` (even), by Simpson.
    pub fn partial_moment(&self, n: usize) -> f64 {
        assert!(n.is_multiple_of(2) && n < self.s.len());
        let h = self.step;
        let f = |i: usize| i as f64 * h * limit_rhs(self.m, self.s[i]);
        let mut acc = f(0) + f(n);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 * f(i) } else { 2.0 * f(i) };
        }
        acc * h / 3.0
    }

    /// `∫_X^∞ x S'' dx` under the affine closure `1 + S ≈ μ̄x + 1 − κ`.
    pub fn tail_moment(&self, x: f64, kappa: f64) -> f64 {
        let m = self.m;
        let mu = self.mu_bar;
        let c = 1.0 - kappa;
        let u = mu * x + c;
        2.0 / (m + 1.0) / (mu * mu) * (u.powf(1.0 - m) / (m - 1.0) - c * u.powf(-m) / m)
    }

    fn estimate_kappa(&self) -> KappaEstimate {
        let n = self.s.len() - 1;
        let x = n as f64 * self.step;
        let by_parts_at = |i: usize| i as f64 * self.step * self.sp[i] - self.s[i];

        // f(X) = κ − A X^{1−m} − B X^{−m}, sampled at X, X/2, X/4.
        let by_parts = if n.is_multiple_of(4) && n >= 8 {
            let pts = [n, n / 2, n / 4];
            let mut rows = [[0.0; 4]; 3];
            for (row, &i) in rows.iter_mut().zip(&pts) {
                let xi = i as f64 * self.step;
                *row = [
                    1.0,
                    -xi.powf(1.0 - self.m),
                    -xi.powf(-self.m),
                    by_parts_at(i),
                ];
            }
            solve3(rows)[0]
        } else {
            by_parts_at(n)
        };

        let partial = self.partial_moment(n);
        // Seed the closure with the by-parts estimate, then iterate once.
        let mut kappa = partial + self.tail_moment(x, by_parts);
        let tail = self.tail_moment(x, kappa);
        kappa = partial + tail;
        let diverged = (kappa - by_parts).abs() > KAPPA_ROUTE_TOLERANCE;
        KappaEstimate {
            quadrature: kappa,
            by_parts,
            tail,
            diverged,
        }
    }

    fn locate(&self, xbar: f64) -> Result<(usize, f64)> {
        let max = self.xbar_max();
        if !(xbar.is_finite() && xbar <= max * (1.0 + 1e-14)) {
            return Err(Error::Range { arg: xbar, max });
        }
        let pos = (xbar / self.step).clamp(0.0, (self.s.len() - 1) as f64);
        let i = (pos.floor() as usize).min(self.s.len() - 2);
        Ok((i, pos - i as f64))
    }

    /// S̄ extended evenly to the whole line.
    pub fn s_bar(&self, xbar: f64) -> Result<f64> {
        let (i, t) = self.locate(xbar.abs())?;
        let h = self.step;
        Ok(hermite(
            t,
            h,
            self.s[i],
            self.s[i + 1],
            self.sp[i],
            self.sp[i + 1],
        ))
    }

    /// S̄' extended oddly to the whole line.
    pub fn sp_bar(&self, xbar: f64) -> Result<f64> {
        let (i, t) = self.locate(xbar.abs())?;
        let h = self.step;
        let d0 = limit_rhs(self.m, self.s[i]);
        let d1 = limit_rhs(self.m, self.s[i + 1]);
        Ok(xbar.signum() * hermite(t, h, self.sp[i], self.sp[i + 1], d0, d1))
    }

    /// S̄'' (even), evaluated through the differential equation.
    pub fn spp_bar(&self, xbar: f64) -> Result<f64> {
        Ok(limit_rhs(self.m, self.s_bar(xbar)?))
    }

    /// W̄(x̄) = (S̄'(x̄) + μ̄)/2.
    pub fn w_bar(&self, xbar: f64) -> Result<f64> {
        Ok(0.5 * (self.sp_bar(xbar)? + self.mu_bar))
    }

    /// T̄(x̄) = (S̄(x̄) + μ̄x̄ + κ̄)/2.
    pub fn t_bar(&self, xbar: f64) -> Result<f64> {
        Ok(0.5 * (self.s_bar(xbar)? + self.mu_bar * xbar + self.kappa_bar()))
    }

    /// Corrected inner length `μ̂_ε = μ̄ε / (1 + ε(κ̄ − 1))`.
    pub fn mu_hat(&self, eps: f64) -> f64 {
        self.mu_bar * eps / (1.0 + eps * (self.kappa_bar() - 1.0))
    }

    /// `σ̂_ε = ε^(−m−2) μ̂_ε²`.
    pub fn sigma_hat(&self, eps: f64) -> f64 {
        eps.powf(-self.m - 2.0) * self.mu_hat(eps).powi(2)
    }

    /// Table extent needed to evaluate the piecewise profiles at `eps`.
    pub fn required_xbar(&self, eps: f64) -> f64 {
        0.5 / self.mu_hat(eps)
    }
}

/// Cubic Hermite interpolation on `[0, h]` at fraction `t`.
fn hermite(t: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

/// Gaussian elimination with partial pivoting on an augmented 3×4 system.
fn solve3(mut a: [[f64; 4]; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot = a[col];
            for (k, v) in a[row].iter_mut().enumerate().skip(col) {
                *v -= f * pivot[k];
            }
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = a[row][3];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Piecewise high-energy approximation of the wave at a given ε.
#[derive(Clone, Copy, Debug)]
pub struct AsymptoticProfiles<'a> {
    ode: &'a LimitOde,
    pub eps: f64,
    pub mu_hat: f64,
    pub sigma_hat: f64,
}

impl<'a> AsymptoticProfiles<'a> {
    pub fn new(ode: &'a LimitOde, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidInput(format!(
                "eps must lie in (0, 1), got {eps}"
            )));
        }
        let need = ode.required_xbar(eps);
        if need > ode.xbar_max() {
            return Err(Error::Range {
                arg: need,
                max: ode.xbar_max(),
            });
        }
        Ok(Self {
            ode,
            eps,
            mu_hat: ode.mu_hat(eps),
            sigma_hat: ode.sigma_hat(eps),
        })
    }

    pub fn m(&self) -> f64 {
        self.ode.m()
    }

    pub fn r_hat(&self, x: f64) -> f64 {
        let ax = x.abs();
        let (eps, mu) = (self.eps, self.mu_hat);
        // Arguments stay within the table by construction.
        if ax < 0.5 {
            1.0 - eps - eps * self.ode.s_bar(ax / mu).unwrap()
        } else if ax < 1.5 {
            eps * self.ode.t_bar((1.0 - ax) / mu).unwrap()
        } else {
            0.0
        }
    }

    pub fn v_hat(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax < 1.0 {
            self.eps / self.mu_hat * self.ode.w_bar((0.5 - ax) / self.mu_hat).unwrap()
        } else {
            0.0
        }
    }
}

/// `(R̂_ε(x), V̂_ε(x))`.
pub fn eval_hat_profiles(ode: &LimitOde, eps: f64, x: f64) -> Result<(f64, f64)> {
    let p = AsymptoticProfiles::new(ode, eps)?;
    Ok((p.r_hat(x), p.v_hat(x)))
}

/// Branch mismatches of the piecewise approximation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceJumps {
    /// |R̂| jump at |x| = 1/2.
    pub r_half: f64,
    /// |R̂| jump at |x| = 3/2.
    pub r_three_halves: f64,
    /// |V̂| jump at |x| = 1.
    pub v_one: f64,
}

pub fn interface_jump(ode: &LimitOde, eps: f64) -> Result<InterfaceJumps> {
    let p = AsymptoticProfiles::new(ode, eps)?;
    let z = 0.5 / p.mu_hat;
    let inner = 1.0 - eps - eps * ode.s_bar(z)?;
    let outer = eps * ode.t_bar(z)?;
    Ok(InterfaceJumps {
        r_half: (inner - outer).abs(),
        r_three_halves: (eps * ode.t_bar(-z)?).abs(),
        v_one: (eps / p.mu_hat * ode.w_bar(-z)?).abs(),
    })
}
