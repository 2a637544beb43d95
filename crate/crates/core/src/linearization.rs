//! Linearization about a wave in exponentially weighted spaces.
//!
//! The linearized travelling-wave operator is
//!
//! ```text
//! L(S, W) = (S' − ∇W,  W' − σ⁻¹ ∇(Q S)),   ∇F(x) = F(x + 1/2) − F(x − 1/2),
//! ```
//!
//! with `Q = Φ''(R)`. Eliminating `W` and conjugating with the weight,
//! `G = e^{ax} S`, gives the second-order advance-delay equation
//!
//! ```text
//! (d/dx − a)² G − σ⁻¹ (e^{−a} (QG)(x+1) + e^{a} (QG)(x−1) − 2 QG) = 0,
//! ```
//!
//! whose kernel is spanned by `e^{ax} R'` for `0 < a < a_c`.

use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io;
use crate::linalg::{smallest_singular_values, smallest_singular_values_rect, SparseMatrix};
use crate::wave::{l2_norm, wave_derivatives, WaveSolution};

/// Critical weight: the positive root of `sinh(a/2)/(a/2) = c`.
pub fn a_crit(c: f64) -> Result<f64> {
    if !(c.is_finite() && c > 1.0) {
        return Err(Error::Domain(format!(
            "critical weight needs wave speed c > 1, got {c}"
        )));
    }
    let g = |a: f64| {
        let u = 0.5 * a;
        if u < 1e-4 {
            1.0 + u * u / 6.0 + u.powi(4) / 120.0 - c
        } else {
            u.sinh() / u - c
        }
    };
    let mut hi = 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..20 {
        let u = 0.5 * a;
        let dg = 0.5 * (u * u.cosh() - u.sinh()) / (u * u);
        let step = g(a) / dg;
        a -= step;
        if step.abs() <= 1e-16 * a {
            break;
        }
    }
    let residual = (0.5 * a).sinh() - 0.5 * c * a;
    if residual.abs() > 1e-13 * c * a.max(1.0) {
        return Err(Error::Domain(format!(
            "critical weight iteration stalled with residual {residual:e}"
        )));
    }
    Ok(a)
}

/// Spectral margin `b* = a − (2/c) sinh(a/2)`.
pub fn b_star(c: f64, a: f64) -> f64 {
    a - 2.0 / c * (0.5 * a).sinh()
}

/// Samples of the essential-spectrum curves `λ = P±(ik − a)`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumCurves {
    pub c: f64,
    pub a: f64,
    pub b_star: f64,
    /// Largest sampled real part over both curves.
    pub max_re: f64,
    /// Rows `(k, Re P₊, Im P₊, Re P₋, Im P₋)`.
    #[serde(skip)]
    pub samples: Vec<[f64; 5]>,
}

impl SpectrumCurves {
    pub fn write_csv(&self, path: &std::path::Path, manifest_hash: Option<&str>) -> Result<()> {
        io::write_csv(
            path,
            manifest_hash,
            &["k", "reP_plus", "imP_plus", "reP_minus", "imP_minus"],
            self.samples.iter().map(|r| r.to_vec()),
        )
    }
}

/// `P±(μ) = μ ± (2/c) sinh(μ/2)` along `μ = ik − a` for `k ∈ [−kmax, kmax]`.
/// With an odd `nk` the sample set contains `k = 0`.
pub fn essential_spectrum(c: f64, a: f64, kmax: f64, nk: usize) -> Result<SpectrumCurves> {
    if !(c > 1.0) {
        return Err(Error::Domain(format!("wave speed must exceed 1, got {c}")));
    }
    if !(a >= 0.0) || nk < 2 || !(kmax > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need a ≥ 0, kmax > 0 and nk ≥ 2 (a = {a}, kmax = {kmax}, nk = {nk})"
        )));
    }
    let (sh, ch) = ((0.5 * a).sinh(), (0.5 * a).cosh());
    let samples: Vec<[f64; 5]> = (0..nk)
        .map(|j| {
            let k = if 2 * j + 1 == nk {
                0.0
            } else {
                -kmax + 2.0 * kmax * j as f64 / (nk - 1) as f64
            };
            let (cs, sn) = ((0.5 * k).cos(), (0.5 * k).sin());
            // sinh((ik − a)/2) = −sinh(a/2) cos(k/2) + i cosh(a/2) sin(k/2)
            let re_s = -sh * cs;
            let im_s = ch * sn;
            [
                k,
                -a + 2.0 / c * re_s,
                k + 2.0 / c * im_s,
                -a - 2.0 / c * re_s,
                k - 2.0 / c * im_s,
            ]
        })
        .collect();
    let max_re = samples
        .iter()
        .map(|r| r[1].max(r[3]))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumCurves {
        c,
        a,
        b_star: b_star(c, a),
        max_re,
        samples,
    })
}

/// Data of the linearization about one wave in the space weighted by `e^{ax}`.
#[derive(Clone, Debug)]
pub struct LinearOperatorSpec<'w> {
    pub wave: &'w WaveSolution,
    pub a: f64,
    pub q: Vec<f64>,
    pub c: f64,
    pub a_c: f64,
}

impl<'w> LinearOperatorSpec<'w> {
    /// Rejects weights outside `[0, a_c)`.
    pub fn new(wave: &'w WaveSolution, a: f64) -> Result<Self> {
        let c = wave.speed();
        let a_c = a_crit(c)?;
        if !(a >= 0.0 && a < a_c) {
            return Err(Error::InvalidInput(format!(
                "weight a = {a} must lie in [0, a_c) with a_c = {a_c}"
            )));
        }
        Ok(Self {
            wave,
            a,
            q: wave.q(),
            c,
            a_c,
        })
    }

    /// Weight given as a fraction of the critical weight.
    pub fn with_fraction(wave: &'w WaveSolution, frac: f64) -> Result<Self> {
        let a_c = a_crit(wave.speed())?;
        Self::new(wave, frac * a_c)
    }

    pub fn grid(&self) -> &Grid {
        &self.wave.grid
    }
}

fn half_difference(f: &[f64], k: usize) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            let up = if i + k < n { f[i + k] } else { 0.0 };
            let dn = if i >= k { f[i - k] } else { 0.0 };
            up - dn
        })
        .collect()
}

fn derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (8.0 * (f[i + 1] - f[i - 1]) - (f[i + 2] - f[i - 2])) / (12.0 * h);
    }
    // one-sided fourth-order closures
    let fwd = |f: &[f64], i: usize, s: isize| {
        let at = |o: isize| f[(i as isize + s * o) as usize];
        s as f64 * (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4))
            / (12.0 * h)
    };
    for i in [0, 1] {
        d[i] = fwd(f, i, 1);
        d[n - 1 - i] = fwd(f, n - 1 - i, -1);
    }
    d
}

/// `L(S, W) = (S' − ∇W, W' − σ⁻¹∇(QS))` with fourth-order differences and
/// exact half-shifts; samples beyond the grid count as zero.
pub fn apply_l(spec: &LinearOperatorSpec<'_>, s: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let g = spec.grid();
    assert!(s.len() == g.len() && w.len() == g.len());
    let h = g.h();
    let k = g.k();
    let ds = derivative(s, h);
    let dw = derivative(w, h);
    let nw = half_difference(w, k);
    let qs: Vec<f64> = s.iter().zip(&spec.q).map(|(a, b)| a * b).collect();
    let nqs = half_difference(&qs, k);
    let sigma = spec.wave.sigma;
    let first = ds.iter().zip(&nw).map(|(a, b)| a - b).collect();
    let second = dw.iter().zip(&nqs).map(|(a, b)| a - b / sigma).collect();
    (first, second)
}

/// Residual of the translation mode `(R', V')` under [`apply_l`], in the
/// grid L² norm of both components.
pub fn translation_residual(spec: &LinearOperatorSpec<'_>) -> f64 {
    let (s1, w1) = wave_derivatives(spec.wave);
    let (a, b) = apply_l(spec, &s1, &w1);
    let h = spec.grid().h();
    (l2_norm(&a, h).powi(2) + l2_norm(&b, h).powi(2)).sqrt()
}

const D2: [(isize, f64); 5] = [
    (-2, -1.0 / 12.0),
    (-1, 16.0 / 12.0),
    (0, -30.0 / 12.0),
    (1, 16.0 / 12.0),
    (2, -1.0 / 12.0),
];

/// Matrix of the weighted second-order operator acting on `G = e^{ax}S`.
///
/// The grid is closed periodically on its first `N − 1` nodes (the node at
/// `+X` is identified with `−X`). `(d/dx − a)²` is discretized as the
/// conjugate of the fourth-order second difference, so the translation mode
/// is reproduced without weight-dependent boundary artefacts.
pub fn second_order_matrix(spec: &LinearOperatorSpec<'_>) -> SparseMatrix {
    let g = spec.grid();
    let n = g.len() - 1;
    let h = g.h();
    let shift = 2 * g.k();
    let (a, sigma) = (spec.a, spec.wave.sigma);
    let q = &spec.q;
    let wrap = |i: isize| i.rem_euclid(n as isize) as usize;
    let mut entries = Vec::with_capacity(8 * n);
    for i in 0..n {
        for &(o, c) in &D2 {
            entries.push((
                i,
                wrap(i as isize + o),
                c * (-a * o as f64 * h).exp() / (h * h),
            ));
        }
        entries.push((i, i, 2.0 * q[i] / sigma));
        let up = (i + shift) % n;
        entries.push((i, up, -(-a).exp() * q[up] / sigma));
        let dn = wrap(i as isize - shift as isize);
        entries.push((i, dn, -a.exp() * q[dn] / sigma));
    }
    SparseMatrix::from_triplets(n, n, entries)
}

/// Extension of right-half samples to the periodic grid by the parity rule
/// `G(−x) = ±e^{−2ax} G(x)` (`+` for even `S`, `−` for odd `S`).
pub fn parity_extension(grid: &Grid, a: f64, even: bool) -> SparseMatrix {
    let n = grid.len() - 1;
    let c = grid.center();
    let start = if even { c } else { c + 1 };
    let sign = if even { 1.0 } else { -1.0 };
    let mut entries = Vec::new();
    for (col, j) in (start..n).enumerate() {
        entries.push((j, col, 1.0));
        let mirror = 2 * c - j;
        if mirror != j {
            entries.push((mirror, col, sign * (-2.0 * a * grid.x(j)).exp()));
        }
    }
    SparseMatrix::from_triplets(n, n - start, entries)
}

#[derive(Clone, Copy, Debug)]
pub struct KernelScanOptions {
    /// Number of singular values computed.
    pub q: usize,
    pub iters: usize,
    pub seed: u64,
    /// A value counts as zero below `threshold · median`.
    pub threshold: f64,
    /// Also scan the even and odd restrictions.
    pub parity: bool,
}

impl Default for KernelScanOptions {
    fn default() -> Self {
        Self {
            q: 10,
            iters: 40,
            seed: 0,
            threshold: 1e-4,
            parity: true,
        }
    }
}

/// Outcome of a kernel scan.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub a: f64,
    pub c: f64,
    pub a_c: f64,
    pub b_star: f64,
    /// Ascending.
    pub singular_values: Vec<f64>,
    pub kernel_count: usize,
    /// Second over first singular value.
    pub gap_ratio: f64,
    /// Gap ratio below 10: the verdict needs a finer grid.
    pub inconclusive: bool,
    pub even_singular_values: Vec<f64>,
    pub odd_singular_values: Vec<f64>,
    pub even_subspace_min_sv: f64,
    pub odd_second_sv: f64,
    /// `|⟨v, e^{ax}R'⟩| / ‖e^{ax}R'‖` for the unit kernel vector `v`.
    pub kernel_correlation: f64,
    /// `‖M e^{ax}R'‖ / ‖e^{ax}R'‖`.
    pub translation_residual: f64,
    /// Kernel vector `G` on the full grid, unit Euclidean norm.
    #[serde(skip)]
    pub kernel_vector: Vec<f64>,
}

/// Number of leading values below `threshold · median` that are also
/// separated from their successor by a factor of 10.
pub fn count_kernel(values: &[f64], threshold: f64) -> usize {
    if values.is_empty() {
        return 0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    let mut count = 0;
    for j in 0..values.len() - 1 {
        if values[j] < threshold * median && values[j] < 0.1 * values[j + 1] {
            count = j + 1;
        }
    }
    count
}

fn mat_col(m: &Mat<f64>, k: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, k)]).collect()
}

/// Smallest singular values of the weighted second-order operator, the
/// kernel count and the kernel vector.
pub fn kernel_scan(
    spec: &LinearOperatorSpec<'_>,
    opts: &KernelScanOptions,
) -> Result<SpectralReport> {
    if !(spec.a > 0.0) {
        return Err(Error::InvalidInput(
            "kernel scan needs a positive weight".into(),
        ));
    }
    let grid = spec.grid();
    let m = second_order_matrix(spec);
    let full = smallest_singular_values(&m, opts.q, opts.iters, opts.seed)?;
    let values = full.values.clone();
    let kernel_count = count_kernel(&values, opts.threshold);
    let gap_ratio = values[1] / values[0];

    let n = m.nrows();
    let (s1, _) = wave_derivatives(spec.wave);
    let smax = s1.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let x = grid.nodes();
    // Samples at round-off level would be amplified by the weight.
    let g1: Vec<f64> = (0..n)
        .map(|i| {
            if s1[i].abs() > 1e-12 * smax {
                (spec.a * x[i]).exp() * s1[i]
            } else {
                0.0
            }
        })
        .collect();
    let g1_norm = g1.iter().map(|v| v * v).sum::<f64>().sqrt();
    let v0 = mat_col(&full.vectors, 0);
    let kernel_correlation = v0.iter().zip(&g1).map(|(a, b)| a * b).sum::<f64>().abs() / g1_norm;
    let mg1 = m.matvec(&g1);
    let translation_residual = mg1.iter().map(|v| v * v).sum::<f64>().sqrt() / g1_norm;

    let mut kernel_vector = v0;
    kernel_vector.push(kernel_vector[0]);

    let (even, odd) = if opts.parity {
        let scan = |even: bool| -> Result<Vec<f64>> {
            let b = m.mul(&parity_extension(grid, spec.a, even));
            Ok(smallest_singular_values_rect(&b, opts.q.min(6), opts.iters, opts.seed)?.values)
        };
        (scan(true)?, scan(false)?)
    } else {
        (Vec::new(), Vec::new())
    };
    let even_subspace_min_sv = even.first().copied().unwrap_or(f64::NAN);
    let odd_second_sv = odd.get(1).copied().unwrap_or(f64::NAN);

    Ok(SpectralReport {
        a: spec.a,
        c: spec.c,
        a_c: spec.a_c,
        b_star: b_star(spec.c, spec.a),
        singular_values: values,
        kernel_count,
        gap_ratio,
        inconclusive: gap_ratio < 10.0,
        even_singular_values: even,
        odd_singular_values: odd,
        even_subspace_min_sv,
        odd_second_sv,
        kernel_correlation,
        translation_residual,
        kernel_vector,
    })
}

/// Inverse of `∇` on functions decaying at `+∞`:
/// `W(x) = −Σ_{j≥0} F(x + 1/2 + j)`, truncated at the grid edge.
pub fn invert_nabla(f: &[f64], a: f64, grid: &Grid) -> Result<Vec<f64>> {
    if !(a > 0.0) {
        return Err(Error::InvalidInput(format!(
            "inverting the half difference needs a > 0, got {a}"
        )));
    }
    let n = grid.len();
    if f.len() != n {
        return Err(Error::InvalidInput("vector does not match the grid".into()));
    }
    let fmax = f.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let edge = f[n - 1].abs();
    if edge > 1e-12 * fmax {
        log::warn!("half-difference inverse truncated: |F| = {edge:e} at the right edge");
    }
    let k = grid.k();
    let mut w = vec![0.0; n];
    for i in (0..n).rev() {
        if i + k < n {
            // W(x) = −F(x + 1/2) + W(x + 1)
            let next = if i + 2 * k < n { w[i + 2 * k] } else { 0.0 };
            w[i] = -f[i + k] + next;
        }
    }
    Ok(w)
}

/// The half difference `∇W(x) = W(x + 1/2) − W(x − 1/2)`.
pub fn nabla_half(w: &[f64], grid: &Grid) -> Vec<f64> {
    half_difference(w, grid.k())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialParams;
    use crate::wave::solve_wave;
    use proptest::prelude::*;

    #[test]
    fn critical_weight_at_sinh_one() {
        let a = a_crit(1.0_f64.sinh()).unwrap();
        assert!((a - 2.0).abs() < 1e-12);
        assert!(a_crit(2.0).unwrap() > a_crit(1.5).unwrap());
        assert!(a_crit(1.0 + 1e-8).unwrap() < 1e-3);
        assert!(matches!(a_crit(1.0), Err(Error::Domain(_))));
        assert!(matches!(a_crit(0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn margin_formula_values() {
        assert!((b_star(2.0, 1.0) - (1.0 - 0.5_f64.sinh())).abs() < 1e-15);
        assert!((b_star(2.0, 1.0) - 0.4789047).abs() < 1e-6);
        assert_eq!(b_star(3.0, 0.0), 0.0);
        let c = 4.0;
        assert!(b_star(c, a_crit(c).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn sampled_curves_attain_the_margin() {
        let s = essential_spectrum(2.0, 1.0, 20.0, 2001).unwrap();
        assert!((s.max_re + s.b_star).abs() < 1e-10);
        let row0 = s.samples.iter().find(|r| r[0] == 0.0).unwrap();
        assert!((row0[3] + s.b_star).abs() < 1e-15);
        let flat = essential_spectrum(3.0, 0.0, 10.0, 101).unwrap();
        assert!(flat.samples.iter().all(|r| r[1] == 0.0 && r[3] == 0.0));
        assert_eq!(flat.b_star, 0.0);
    }

    proptest! {
        #[test]
        fn margin_positive_inside_the_window(c in 1.01f64..30.0, frac in 0.01f64..0.99) {
            let a = frac * a_crit(c).unwrap();
            prop_assert!(b_star(c, a) > 0.0);
        }
    }

    #[test]
    fn nabla_inverse_of_indicator() {
        let g = Grid::new(4.0, 32).unwrap();
        let f: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&x| if x > -0.5 && x <= 0.5 { 1.0 } else { 0.0 })
            .collect();
        let w = invert_nabla(&f, 0.5, &g).unwrap();
        let x = g.nodes();
        for i in 0..g.len() - g.k() {
            let expected = if x[i] <= 0.0 { -1.0 } else { 0.0 };
            assert_eq!(w[i], expected, "x = {}", x[i]);
        }
        let back = nabla_half(&w, &g);
        for i in g.k()..g.len() - g.k() {
            assert_eq!(back[i], f[i]);
        }
        assert!(invert_nabla(&f, 0.0, &g).is_err());
        assert!(invert_nabla(&vec![0.0; g.len()], 1.0, &g)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn nabla_round_trip_on_gaussian() {
        let g = Grid::new(6.0, 32).unwrap();
        let w0: Vec<f64> = g.nodes().iter().map(|x| (-x * x).exp()).collect();
        let back = invert_nabla(&nabla_half(&w0, &g), 1.0, &g).unwrap();
        for i in 0..g.len() - g.k() {
            assert!((back[i] - w0[i]).abs() < 1e-12, "{i} {} {}", back[i], w0[i]);
        }
    }

    fn test_wave() -> WaveSolution {
        let p = PotentialParams::new(2.0).unwrap();
        solve_wave(&p, 0.2, &Grid::new(6.0, 64).unwrap(), 1e-12, 1000).unwrap()
    }

    #[test]
    fn apply_l_is_linear_and_kills_zero() {
        let w = test_wave();
        let spec = LinearOperatorSpec::with_fraction(&w, 0.5).unwrap();
        let z = vec![0.0; w.grid.len()];
        let (a, b) = apply_l(&spec, &z, &z);
        assert!(a.iter().chain(&b).all(|&v| v == 0.0));
        let (s1, w1) = wave_derivatives(&w);
        let (a1, b1) = apply_l(&spec, &s1, &w1);
        let s2: Vec<f64> = s1.iter().map(|v| 2.5 * v).collect();
        let w2: Vec<f64> = w1.iter().map(|v| 2.5 * v).collect();
        let (a2, b2) = apply_l(&spec, &s2, &w2);
        for i in 0..a1.len() {
            assert!((a2[i] - 2.5 * a1[i]).abs() <= 1e-12 * (1.0 + a1[i].abs()));
            assert!((b2[i] - 2.5 * b1[i]).abs() <= 1e-12 * (1.0 + b1[i].abs()));
        }
    }

    #[test]
    fn apply_l_parity_bookkeeping() {
        // without weight L maps even pairs to odd pairs
        let w = test_wave();
        let spec = LinearOperatorSpec::new(&w, 0.0).unwrap();
        let x = w.grid.nodes();
        let s: Vec<f64> = x.iter().map(|x| (-x * x).exp()).collect();
        let ww: Vec<f64> = x.iter().map(|x| x * x * (-x * x).exp()).collect();
        let (a, b) = apply_l(&spec, &s, &ww);
        let n = a.len();
        let scale = a.iter().chain(&b).fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            assert!((a[i] + a[n - 1 - i]).abs() <= 1e-8 * scale);
            assert!((b[i] + b[n - 1 - i]).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn weight_window_is_enforced() {
        let w = test_wave();
        let a_c = a_crit(w.speed()).unwrap();
        assert!(LinearOperatorSpec::new(&w, a_c).is_err());
        assert!(LinearOperatorSpec::new(&w, -0.1).is_err());
        assert!(LinearOperatorSpec::new(&w, 0.99 * a_c).is_ok());
    }

    #[test]
    fn zero_potential_gives_invertible_weighted_square() {
        let w = test_wave();
        let mut spec = LinearOperatorSpec::with_fraction(&w, 0.5).unwrap();
        spec.q.iter_mut().for_each(|q| *q = 0.0);
        let m = second_order_matrix(&spec);
        let s = smallest_singular_values(&m, 3, 20, 0).unwrap();
        // (d/dx − a)² on a periodic grid of length 2X: symbol (ik − a)², |·| ≥ a²
        assert!(s.values[0] > 0.5 * spec.a * spec.a);
    }

    #[test]
    fn symbol_of_constant_coefficient_operator() {
        let p = PotentialParams::new(2.0).unwrap();
        let wave = solve_wave(&p, 0.2, &Grid::new(6.0, 256).unwrap(), 1e-10, 1000).unwrap();
        let g = wave.grid;
        let (sigma, a, k) = (4.0, 0.1, 1.0);
        let mut w2 = wave.clone();
        w2.sigma = sigma;
        let mut spec = LinearOperatorSpec::new(&w2, a).unwrap();
        spec.q.iter_mut().for_each(|q| *q = 1.0);
        let m = second_order_matrix(&spec);
        let n = g.len() - 1;
        let x = g.nodes();
        let re: Vec<f64> = (0..n).map(|i| (k * x[i]).cos()).collect();
        let im: Vec<f64> = (0..n).map(|i| (k * x[i]).sin()).collect();
        let (mr, mi) = (m.matvec(&re), m.matvec(&im));
        // (ik − a)² − σ⁻¹(e^{−a+ik} + e^{a−ik} − 2)
        let sym_re = a * a - k * k - ((-a).exp() * k.cos() + a.exp() * k.cos() - 2.0) / sigma;
        let sym_im = -2.0 * a * k - ((-a).exp() * k.sin() - a.exp() * k.sin()) / sigma;
        // compare away from the periodic seam
        let c = g.center();
        for i in c - 1024..c + 1024 {
            let pr = sym_re * re[i] - sym_im * im[i];
            let pi = sym_re * im[i] + sym_im * re[i];
            assert!(
                (mr[i] - pr).abs() < 1e-9 && (mi[i] - pi).abs() < 1e-9,
                "i = {i} {} {pr} {} {pi}",
                mr[i],
                mi[i]
            );
        }
    }
}
