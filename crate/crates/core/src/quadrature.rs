//! Adaptive cubature over polar polydiscs, tensor trapezoid rules on tori and
//! a 1-D Gauss–Kronrod integrator for radial reductions.
//!
//! The multidimensional integrator applies the degree-7 Genz–Malik rule with
//! its embedded degree-5 rule on each cell; the difference of the two is the
//! cell's error estimate. Refinement proceeds in deterministic batches: the
//! cells are ranked by (unresolved layer, error, index) and the top batch is
//! bisected along the axis with the largest fourth difference. Children are
//! stored at fixed positions, so serial and parallel runs are bitwise equal.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the number of complex variables an integrand may use.
pub const MAX_COMPLEX_DIM: usize = 8;
/// Upper bound on the number of layer ratios an integrand may report.
pub const MAX_LAYERS: usize = 8;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Complex-valued integrand on `ℂ^n`, integrated against Lebesgue measure.
pub trait Integrand: Sync {
    fn dim(&self) -> usize;

    /// Number of transition layers `|f_j|²/ε_j` reported by [`Integrand::eval`].
    fn n_layers(&self) -> usize {
        0
    }

    /// Value at `z`; writes the current layer ratios into `layers[..n_layers()]`.
    fn eval(&self, z: &[Complex64], layers: &mut [f64]) -> Complex64;
}

/// Wraps a plain closure as an [`Integrand`] without layers.
pub struct FnIntegrand<F> {
    dim: usize,
    f: F,
}

impl<F> FnIntegrand<F>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnIntegrand { dim, f }
    }
}

impl<F> Integrand for FnIntegrand<F>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, z: &[Complex64], _layers: &mut [f64]) -> Complex64 {
        (self.f)(z)
    }
}

/// Real-box integrand used by the cubature core.
pub trait BoxIntegrand: Sync {
    fn dim(&self) -> usize;
    fn n_layers(&self) -> usize {
        0
    }
    fn eval(&self, x: &[f64], layers: &mut [f64]) -> Complex64;
}

/// Product of polar discs `{|z_j| ≤ R_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationDomain {
    pub radii: Vec<f64>,
}

impl IntegrationDomain {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || radii.len() > MAX_COMPLEX_DIM {
            return Err(Error::InvalidArgument(format!(
                "domain dimension {} unsupported",
                radii.len()
            )));
        }
        if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument(
                "domain radii must be positive".into(),
            ));
        }
        Ok(IntegrationDomain { radii })
    }

    pub fn polydisc(n: usize, radius: f64) -> Result<Self> {
        Self::new(vec![radius; n])
    }

    pub fn dim(&self) -> usize {
        self.radii.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
    /// Uniform initial pieces per axis.
    pub init_subdiv: usize,
    /// Extra geometric (factor 1/4) initial pieces towards `ρ = 0` on radial axes.
    pub radial_grading: usize,
    /// Enforce at least four cells across each transition layer.
    pub resolve_layers: bool,
    pub parallel: bool,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            rel_tol: 1e-4,
            abs_tol: 1e-10,
            max_evals: 20_000_000,
            init_subdiv: 2,
            radial_grading: 0,
            resolve_layers: true,
            parallel: true,
        }
    }
}

impl QuadratureOptions {
    pub fn with_tol(rel_tol: f64, abs_tol: f64) -> Self {
        QuadratureOptions {
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }

    /// Checks tolerances and that the initial polar grid over `dim` real
    /// axes (half radial, half angular) fits the budget.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.init_subdiv == 0 {
            return Err(Error::InvalidArgument(
                "init_subdiv must be at least 1".into(),
            ));
        }
        let radial = dim / 2;
        let cells = ((self.init_subdiv + self.radial_grading) as f64).powi(radial as i32)
            * (self.init_subdiv as f64).powi((dim - radial) as i32);
        if (self.max_evals as f64) < cells * GenzMalik::n_points(dim) as f64 {
            return Err(Error::InvalidArgument(
                "max_evals is smaller than the initial grid".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub n_evals: usize,
    pub converged: bool,
    pub wall_seconds: f64,
}

impl PairingResult {
    pub fn exact(value: Complex64) -> Self {
        PairingResult {
            value,
            error_estimate: 0.0,
            n_evals: 0,
            converged: true,
            wall_seconds: 0.0,
        }
    }

    /// Scales the value (and the error by `|c|`).
    pub fn scaled(mut self, c: Complex64) -> Self {
        self.value *= c;
        self.error_estimate *= c.norm();
        self
    }

    pub fn negated(self) -> Self {
        PairingResult {
            value: -self.value,
            ..self
        }
    }
}

/// Neumaier-compensated complex sum in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = Complex64>>(it: I) -> Complex64 {
    let (mut sr, mut cr, mut si, mut ci) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for v in it {
        neumaier(&mut sr, &mut cr, v.re);
        neumaier(&mut si, &mut ci, v.im);
    }
    Complex64::new(sr + cr, si + ci)
}

pub fn compensated_sum_real<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for v in it {
        neumaier(&mut s, &mut c, v);
    }
    s + c
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

struct GenzMalik;

const LAMBDA2: f64 = 0.358_568_582_800_318_1; // sqrt(9/70)
const LAMBDA4: f64 = 0.948_683_298_050_513_8; // sqrt(9/10)
const LAMBDA5: f64 = 0.688_247_201_611_685_3; // sqrt(9/19)

impl GenzMalik {
    fn n_points(d: usize) -> usize {
        1 + 4 * d + 2 * d * (d - 1) + (1usize << d)
    }

    fn weights(d: usize) -> ([f64; 5], [f64; 4]) {
        let n = d as f64;
        let w7 = [
            (12824.0 - 9120.0 * n + 400.0 * n * n) / 19683.0,
            980.0 / 6561.0,
            (1820.0 - 400.0 * n) / 19683.0,
            200.0 / 19683.0,
            6859.0 / 19683.0 / (1u64 << d) as f64,
        ];
        let w5 = [
            (729.0 - 950.0 * n + 50.0 * n * n) / 729.0,
            245.0 / 486.0,
            (265.0 - 100.0 * n) / 1458.0,
            25.0 / 729.0,
        ];
        (w7, w5)
    }
}

#[derive(Debug, Clone)]
struct Cell {
    center: Vec<f64>,
    half: Vec<f64>,
    value: Complex64,
    err: f64,
    split_axis: usize,
    unresolved: bool,
}

struct CellEvaluator<'a, G: BoxIntegrand> {
    g: &'a G,
    d: usize,
    w7: [f64; 5],
    w5: [f64; 4],
    resolve_layers: bool,
}

struct LayerSpan {
    lo: [f64; MAX_LAYERS],
    hi: [f64; MAX_LAYERS],
    last: [f64; MAX_LAYERS],
    nonzero: bool,
}

impl<'a, G: BoxIntegrand> CellEvaluator<'a, G> {
    fn new(g: &'a G, resolve_layers: bool) -> Self {
        let d = g.dim();
        let (w7, w5) = GenzMalik::weights(d);
        CellEvaluator {
            g,
            d,
            w7,
            w5,
            resolve_layers,
        }
    }

    #[inline]
    fn sample(&self, x: &[f64], span: &mut LayerSpan) -> Complex64 {
        let mut layers = [0.0f64; MAX_LAYERS];
        let nl = self.g.n_layers();
        let v = self.g.eval(x, &mut layers[..nl]);
        if self.resolve_layers {
            span.nonzero |= v.re != 0.0 || v.im != 0.0;
            for j in 0..nl {
                let l = layers[j].log10().clamp(-1.25, 1.25);
                let l = if l.is_nan() { -1.25 } else { l };
                span.lo[j] = span.lo[j].min(l);
                span.hi[j] = span.hi[j].max(l);
                span.last[j] = l;
            }
        }
        v
    }

    fn eval(&self, center: Vec<f64>, half: Vec<f64>) -> Cell {
        let d = self.d;
        let mut span = LayerSpan {
            lo: [f64::INFINITY; MAX_LAYERS],
            hi: [f64::NEG_INFINITY; MAX_LAYERS],
            last: [0.0; MAX_LAYERS],
            nonzero: false,
        };
        let nl = self.g.n_layers();
        let mut layer_axis = 0;
        let mut layer_var = 0.0f64;
        let mut x = center.clone();
        let f0 = self.sample(&x, &mut span);
        let mut s2 = ZERO;
        let mut s3 = ZERO;
        let mut best_axis = 0;
        let mut best_diff = -1.0f64;
        let ratio = (LAMBDA2 / LAMBDA4) * (LAMBDA2 / LAMBDA4);
        for i in 0..d {
            let c = center[i];
            x[i] = c + LAMBDA2 * half[i];
            let a = self.sample(&x, &mut span);
            x[i] = c - LAMBDA2 * half[i];
            let b = self.sample(&x, &mut span);
            x[i] = c + LAMBDA4 * half[i];
            let e = self.sample(&x, &mut span);
            let upper = span.last;
            x[i] = c - LAMBDA4 * half[i];
            let f = self.sample(&x, &mut span);
            x[i] = c;
            let var = (0..nl)
                .map(|j| (upper[j] - span.last[j]).abs())
                .fold(0.0, f64::max);
            if var > layer_var {
                layer_var = var;
                layer_axis = i;
            }
            s2 += a + b;
            s3 += e + f;
            let diff = ((a + b - 2.0 * f0) - ratio * (e + f - 2.0 * f0)).norm();
            // near-ties go to the wider axis, then the lower index
            let better = diff > best_diff * (1.0 + 1e-12);
            let tie = !better && diff >= best_diff * (1.0 - 1e-12) && half[i] > half[best_axis];
            if better || tie {
                best_axis = i;
                best_diff = best_diff.max(diff);
            }
        }
        let mut s4 = ZERO;
        for i in 0..d {
            for j in i + 1..d {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    x[i] = center[i] + si * LAMBDA4 * half[i];
                    x[j] = center[j] + sj * LAMBDA4 * half[j];
                    s4 += self.sample(&x, &mut span);
                }
                x[i] = center[i];
                x[j] = center[j];
            }
        }
        let mut s5 = ZERO;
        for mask in 0..(1usize << d) {
            for i in 0..d {
                let s = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                x[i] = center[i] + s * LAMBDA5 * half[i];
            }
            s5 += self.sample(&x, &mut span);
        }
        let vol: f64 = half.iter().map(|h| 2.0 * h).product();
        let i7 = (f0 * self.w7[0]
            + s2 * self.w7[1]
            + s3 * self.w7[2]
            + s4 * self.w7[3]
            + s5 * self.w7[4])
            * vol;
        let i5 = (f0 * self.w5[0] + s2 * self.w5[1] + s3 * self.w5[2] + s4 * self.w5[3]) * vol;
        let mut err = (i7 - i5).norm();
        if !err.is_finite() || !i7.re.is_finite() || !i7.im.is_finite() {
            err = f64::INFINITY;
        }
        let unresolved = self.resolve_layers
            && span.nonzero
            && (0..nl).any(|j| span.hi[j] - span.lo[j] > 0.5 + 1e-12);
        let split_axis = if unresolved && layer_var > 0.0 {
            layer_axis
        } else {
            best_axis
        };
        Cell {
            center,
            half,
            value: i7,
            err,
            split_axis,
            unresolved,
        }
    }
}

/// Adaptive cubature over the real box `[lo, hi]`, given by per-axis breakpoints.
pub fn integrate_box<G: BoxIntegrand>(
    g: &G,
    breakpoints: &[Vec<f64>],
    opts: &QuadratureOptions,
) -> Result<PairingResult> {
    let start = Instant::now();
    let d = g.dim();
    if !(2..=2 * MAX_COMPLEX_DIM).contains(&d) {
        return Err(Error::InvalidArgument(format!(
            "cubature dimension {d} unsupported (need 2..=16)"
        )));
    }
    if g.n_layers() > MAX_LAYERS {
        return Err(Error::InvalidArgument("too many layers".into()));
    }
    if breakpoints.len() != d
        || breakpoints
            .iter()
            .any(|b| b.len() < 2 || b.windows(2).any(|w| !(w[1] > w[0])))
    {
        return Err(Error::InvalidArgument(
            "breakpoints must be increasing, two or more per axis".into(),
        ));
    }
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    let ev = CellEvaluator::new(g, opts.resolve_layers);
    let npts = GenzMalik::n_points(d);

    // tensor product of the initial pieces, last axis fastest
    let mut boxes: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new())];
    for b in breakpoints {
        let mut next = Vec::with_capacity(boxes.len() * (b.len() - 1));
        for (c, h) in &boxes {
            for w in b.windows(2) {
                let mut c2 = c.clone();
                let mut h2 = h.clone();
                c2.push(0.5 * (w[0] + w[1]));
                h2.push(0.5 * (w[1] - w[0]));
                next.push((c2, h2));
            }
        }
        boxes = next;
    }
    if boxes.len() * npts > opts.max_evals {
        return Err(Error::InvalidArgument(
            "max_evals is smaller than the initial grid".into(),
        ));
    }
    let eval_all = |items: Vec<(Vec<f64>, Vec<f64>)>| -> Vec<Cell> {
        if opts.parallel && items.len() > 1 {
            items.into_par_iter().map(|(c, h)| ev.eval(c, h)).collect()
        } else {
            items.into_iter().map(|(c, h)| ev.eval(c, h)).collect()
        }
    };
    let mut cells = eval_all(boxes);
    let mut evals = cells.len() * npts;

    let mut best: Option<(Complex64, f64)> = None;
    let mut converged = false;
    let mut last;
    loop {
        let total = compensated_sum(cells.iter().map(|c| c.value));
        let err = compensated_sum_real(cells.iter().map(|c| c.err));
        let unresolved = cells.iter().filter(|c| c.unresolved).count();
        last = (total, err);
        if best.is_none_or(|(_, e)| err < e) {
            best = Some((total, err));
        }
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= tol && unresolved == 0 {
            converged = true;
            break;
        }
        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.sort_by(|&a, &b| {
            let (ca, cb) = (&cells[a], &cells[b]);
            cb.unresolved
                .cmp(&ca.unresolved)
                .then(cb.err.total_cmp(&ca.err))
                .then(a.cmp(&b))
        });
        let batch = (cells.len() / 16).max(1).max(unresolved.min(cells.len()));
        if evals + 2 * batch * npts > opts.max_evals {
            break;
        }
        let chosen = &order[..batch];
        let mut children = Vec::with_capacity(2 * batch);
        for &i in chosen {
            let c = &cells[i];
            let ax = c.split_axis;
            let h = 0.5 * c.half[ax];
            let mut half = c.half.clone();
            half[ax] = h;
            let mut left = c.center.clone();
            left[ax] -= h;
            let mut right = c.center.clone();
            right[ax] += h;
            children.push((left, half.clone()));
            children.push((right, half));
        }
        let mut evaluated = eval_all(children).into_iter();
        for &i in chosen {
            cells[i] = evaluated.next().expect("left child");
            cells.push(evaluated.next().expect("right child"));
        }
        evals += 2 * batch * npts;
    }
    let (value, error_estimate) = if converged {
        last
    } else {
        best.unwrap_or(last)
    };
    Ok(PairingResult {
        value,
        error_estimate,
        n_evals: evals,
        converged,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

struct PolarAdapter<'a, G: Integrand + ?Sized> {
    g: &'a G,
}

impl<'a, G: Integrand + ?Sized> BoxIntegrand for PolarAdapter<'a, G> {
    fn dim(&self) -> usize {
        2 * self.g.dim()
    }

    fn n_layers(&self) -> usize {
        self.g.n_layers()
    }

    #[inline]
    fn eval(&self, x: &[f64], layers: &mut [f64]) -> Complex64 {
        let n = self.g.dim();
        let mut z = [ZERO; MAX_COMPLEX_DIM];
        let mut jac = 1.0;
        for j in 0..n {
            let (rho, theta) = (x[2 * j], x[2 * j + 1]);
            z[j] = Complex64::from_polar(rho, theta);
            jac *= rho;
        }
        if jac == 0.0 {
            layers.iter_mut().for_each(|l| *l = 0.0);
            return ZERO;
        }
        self.g.eval(&z[..n], layers) * jac
    }
}

/// Per-axis initial breakpoints for a polar domain.
pub fn polar_breakpoints(domain: &IntegrationDomain, opts: &QuadratureOptions) -> Vec<Vec<f64>> {
    let m = opts.init_subdiv.max(1);
    let mut out = Vec::with_capacity(2 * domain.dim());
    for &r in &domain.radii {
        let mut rho: Vec<f64> = (0..=m).map(|k| r * k as f64 / m as f64).collect();
        let first = rho[1];
        let graded: Vec<f64> = (1..=opts.radial_grading)
            .rev()
            .map(|k| first * 0.25f64.powi(k as i32))
            .collect();
        rho.splice(1..1, graded);
        out.push(rho);
        out.push((0..=m).map(|k| 2.0 * PI * k as f64 / m as f64).collect());
    }
    out
}

/// `∫_d g dLebesgue` in polar coordinates `(ρ_j, θ_j)` with Jacobian `Π ρ_j`.
pub fn integrate_adaptive<G: Integrand + ?Sized>(
    g: &G,
    domain: &IntegrationDomain,
    opts: &QuadratureOptions,
) -> Result<PairingResult> {
    if g.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: g.dim(),
        });
    }
    opts.validate(2 * domain.dim())?;
    integrate_box(&PolarAdapter { g }, &polar_breakpoints(domain, opts), opts)
}

/// Tensor trapezoid rule on the torus `{|z_j| = radii[j]}`: returns
/// `Σ g(z(θ)) · (2π/m)^n ≈ ∫ g dθ_1 … dθ_n`.
pub fn integrate_torus<F>(g: F, radii: &[f64], m: usize) -> Result<Complex64>
where
    F: Fn(&[Complex64]) -> Complex64,
{
    if m == 0 {
        return Err(Error::InvalidArgument(
            "need at least one point per angle".into(),
        ));
    }
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidArgument(
            "torus radii must be positive".into(),
        ));
    }
    let n = radii.len();
    let h = 2.0 * PI / m as f64;
    let roots: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(1.0, h * k as f64))
        .collect();
    let mut idx = vec![0usize; n];
    let mut z = vec![ZERO; n];
    let mut sum = (0.0, 0.0, 0.0, 0.0);
    loop {
        for j in 0..n {
            z[j] = roots[idx[j]] * radii[j];
        }
        let v = g(&z);
        neumaier(&mut sum.0, &mut sum.1, v.re);
        neumaier(&mut sum.2, &mut sum.3, v.im);
        let mut k = n;
        loop {
            if k == 0 {
                let w = h.powi(n as i32);
                return Ok(Complex64::new(sum.0 + sum.1, sum.2 + sum.3) * w);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
        }
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut gsum = fc * GK_WG[3];
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            gsum += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - gsum) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of a real function on `[a, b]`.
/// Returns `(value, error_estimate, converged)`.
pub fn integrate_1d<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> (f64, f64, bool) {
    if a == b {
        return (0.0, 0.0, true);
    }
    let mut segs = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..2000 {
        let total = compensated_sum_real(segs.iter().map(|s| s.2 .0));
        let err = compensated_sum_real(segs.iter().map(|s| s.2 .1));
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return (total, err, true);
        }
        let (i, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1).then(y.0.cmp(&x.0)))
            .expect("nonempty");
        let (lo, hi, _) = segs[i];
        let mid = 0.5 * (lo + hi);
        segs[i] = (lo, mid, gk15(&f, lo, mid));
        segs.push((mid, hi, gk15(&f, mid, hi)));
    }
    let total = compensated_sum_real(segs.iter().map(|s| s.2 .0));
    let err = compensated_sum_real(segs.iter().map(|s| s.2 .1));
    (total, err, false)
}
