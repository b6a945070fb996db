//! Regularized residue-current pairings: smooth kernel regularizations,
//! tube integrals, analytic continuation in λ, principal values on
//! parametrized curves, Bochner–Martinelli regularizations and restrictions
//! to coordinate hyperplanes.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::{permutation_sign, volume_constant, HoloMap, TestForm};
use crate::kernels::Kernel;
use crate::poly::ComplexPolynomial;
use crate::quadrature::{
    integrate_adaptive, integrate_torus, Integrand, IntegrationDomain, PairingResult,
    QuadratureOptions, MAX_COMPLEX_DIM, MAX_LAYERS,
};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// How the factors `f_j` are regularized.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    /// `χ_j(|f_j|²/ε_j)`.
    Kernels { kernels: Vec<Kernel>, eps: Vec<f64> },
    /// `|f_j|^{2λ_j}`.
    Powers { lambda: Vec<f64> },
}

/// Restriction to the coordinate hyperplane `{z_k = s}`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Embedding {
    coord: usize,
    value: Complex64,
}

/// Top-degree coefficient of `∂̄χ_1 ∧ … ∧ ∂̄χ_p · χ_{p+1} ⋯ χ_q / f^ℓ ∧ φ`,
/// as a function on the integration space.
#[derive(Debug, Clone)]
pub struct RegularizedIntegrand {
    map: HoloMap,
    reg: Regularizer,
    form: TestForm,
    /// `∂f_j/∂z_c` for the residue rows, columns in `complement(I)` order.
    derivs: Vec<Vec<ComplexPolynomial>>,
    prefactor: Complex64,
    embedding: Option<Embedding>,
}

impl RegularizedIntegrand {
    pub fn new(map: &HoloMap, form: &TestForm, reg: Regularizer) -> Result<Self> {
        Self::build(map, form, reg, None)
    }

    fn build(
        map: &HoloMap,
        form: &TestForm,
        reg: Regularizer,
        embedding: Option<Embedding>,
    ) -> Result<Self> {
        let n_space = map.dim() - usize::from(embedding.is_some());
        if form.dim() != n_space {
            return Err(Error::DimensionMismatch {
                expected: n_space,
                got: form.dim(),
            });
        }
        if n_space > MAX_COMPLEX_DIM {
            return Err(Error::InvalidArgument(format!(
                "dimension {n_space} exceeds {MAX_COMPLEX_DIM}"
            )));
        }
        let (p, q) = (map.p(), map.q());
        if p > n_space {
            return Err(Error::FormDegree {
                expected: 0,
                got: form.anti_indices().len(),
            });
        }
        if form.anti_indices().len() != n_space - p {
            return Err(Error::FormDegree {
                expected: n_space - p,
                got: form.anti_indices().len(),
            });
        }
        if q > MAX_LAYERS {
            return Err(Error::InvalidArgument(format!(
                "at most {MAX_LAYERS} factors supported"
            )));
        }
        match &reg {
            Regularizer::Kernels { kernels, eps } => {
                if kernels.len() != q {
                    return Err(Error::DimensionMismatch {
                        expected: q,
                        got: kernels.len(),
                    });
                }
                if eps.len() != q {
                    return Err(Error::DimensionMismatch {
                        expected: q,
                        got: eps.len(),
                    });
                }
                if eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
                    return Err(Error::InvalidArgument("ε must be positive".into()));
                }
                for (j, k) in kernels.iter().enumerate() {
                    k.validate()?;
                    if j < p && !k.is_smooth() {
                        return Err(Error::NotDifferentiable);
                    }
                    if let Some(order) = k.vanishing_order() {
                        if order < map.powers()[j] {
                            return Err(Error::VanishingOrder {
                                order: order.to_string(),
                                requested: map.powers()[j],
                            });
                        }
                    }
                }
            }
            Regularizer::Powers { lambda } => {
                if lambda.len() != q {
                    return Err(Error::DimensionMismatch {
                        expected: q,
                        got: lambda.len(),
                    });
                }
                if lambda.iter().any(|&l| !(l > 0.0)) {
                    return Err(Error::InvalidArgument("λ must be positive".into()));
                }
            }
        }
        // columns of the residue rows, as ambient coordinate indices
        let to_ambient = |c: usize| match embedding {
            Some(e) if c >= e.coord => c + 1,
            _ => c,
        };
        let complement = form.complement();
        let mut derivs = Vec::with_capacity(p);
        for f in &map.components()[..p] {
            derivs.push(
                complement
                    .iter()
                    .map(|&c| f.dz(to_ambient(c)))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let prefactor = volume_constant(n_space) * form.wedge_sign();
        Ok(RegularizedIntegrand {
            map: map.clone(),
            reg,
            form: form.clone(),
            derivs,
            prefactor,
            embedding,
        })
    }

    pub fn map(&self) -> &HoloMap {
        &self.map
    }

    pub fn form(&self) -> &TestForm {
        &self.form
    }

    /// Integration domain covering the support of the test form.
    pub fn domain(&self) -> IntegrationDomain {
        IntegrationDomain::polydisc(self.form.dim(), self.form.bump.r1)
            .expect("bump radius is positive")
    }

    #[inline]
    fn ambient_point(&self, y: &[Complex64], buf: &mut [Complex64; MAX_COMPLEX_DIM + 1]) -> usize {
        match self.embedding {
            None => {
                buf[..y.len()].copy_from_slice(y);
                y.len()
            }
            Some(e) => {
                buf[..e.coord].copy_from_slice(&y[..e.coord]);
                buf[e.coord] = e.value;
                buf[e.coord + 1..=y.len()].copy_from_slice(&y[e.coord..]);
                y.len() + 1
            }
        }
    }

    /// Coefficient at `y` (integration-space point) w.r.t. Lebesgue measure.
    pub fn value(&self, y: &[Complex64]) -> Complex64 {
        let mut layers = [0.0; MAX_LAYERS];
        self.eval_with_layers(y, &mut layers)
    }

    fn eval_with_layers(&self, y: &[Complex64], layers: &mut [f64]) -> Complex64 {
        let coeff = self.form.coefficient(y);
        let mut zbuf = [ZERO; MAX_COMPLEX_DIM + 1];
        let nz = self.ambient_point(y, &mut zbuf);
        let z = &zbuf[..nz];
        let (p, q) = (self.map.p(), self.map.q());
        let powers = self.map.powers();

        let mut fv = [ZERO; MAX_LAYERS];
        for (j, f) in self.map.components().iter().enumerate() {
            fv[j] = f.eval_unchecked(z);
        }
        // scalar weights for the residue rows and the remaining factors
        let mut row_scale = [ZERO; MAX_LAYERS];
        let mut tail = ONE;
        let mut zero = coeff == ZERO;
        match &self.reg {
            Regularizer::Kernels { kernels, eps } => {
                for j in 0..q {
                    let w = fv[j].norm_sqr() / eps[j];
                    if j < layers.len() {
                        layers[j] = w;
                    }
                    if zero {
                        continue;
                    }
                    let ell = powers[j];
                    if j < p {
                        let a = kernels[j].derivative_unchecked(w) / eps[j];
                        row_scale[j] = scaled_by_power(a, fv[j], ell - 1);
                    } else {
                        tail *= scaled_by_power(kernels[j].eval(w), fv[j], ell);
                    }
                }
            }
            Regularizer::Powers { lambda } => {
                for j in 0..q {
                    if zero {
                        break;
                    }
                    let r2 = fv[j].norm_sqr();
                    if r2 == 0.0 {
                        zero = true;
                        break;
                    }
                    let ell = powers[j];
                    let l = lambda[j];
                    if j < p {
                        row_scale[j] = scaled_by_power(l * r2.powf(l - 1.0), fv[j], ell - 1);
                    } else {
                        tail *= scaled_by_power(r2.powf(l), fv[j], ell);
                    }
                }
            }
        }
        if zero || tail == ZERO {
            return ZERO;
        }
        let mut m = [[ZERO; MAX_COMPLEX_DIM]; MAX_COMPLEX_DIM];
        for j in 0..p {
            for (c, d) in self.derivs[j].iter().enumerate() {
                m[j][c] = row_scale[j] * d.eval_unchecked(z).conj();
            }
        }
        let det = antisymmetric_det(&mut m, p);
        coeff * det * tail * self.prefactor
    }
}

/// `a / f^ℓ`, with `0` whenever `a` is `0` (removable singularity).
#[inline]
fn scaled_by_power(a: f64, f: Complex64, ell: u32) -> Complex64 {
    if a == 0.0 {
        return ZERO;
    }
    if ell == 0 {
        return Complex64::new(a, 0.0);
    }
    if f == ZERO {
        return ZERO;
    }
    let v = Complex64::new(a, 0.0) / f.powu(ell);
    if v.re.is_finite() && v.im.is_finite() {
        v
    } else {
        ZERO
    }
}

fn row_cmp(a: &[Complex64], b: &[Complex64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Determinant of the leading `p × p` block, computed on the rows in a
/// canonical order so that any row transposition flips the sign exactly.
fn antisymmetric_det(
    m: &mut [[Complex64; MAX_COMPLEX_DIM]; MAX_COMPLEX_DIM],
    p: usize,
) -> Complex64 {
    match p {
        0 => return ONE,
        1 => return m[0][0],
        _ => {}
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| row_cmp(&m[i][..p], &m[j][..p]).then(i.cmp(&j)));
    let sign = permutation_sign(&order);
    let mut a: Vec<[Complex64; MAX_COMPLEX_DIM]> = order.iter().map(|&i| m[i]).collect();
    if p == 2 {
        return (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * sign;
    }
    let mut det = Complex64::new(sign, 0.0);
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&i, &j| {
                a[i][col]
                    .norm()
                    .total_cmp(&a[j][col].norm())
                    .then(j.cmp(&i))
            })
            .expect("nonempty");
        if a[piv][col] == ZERO {
            return ZERO;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..p {
            let factor = a[r][col] / a[col][col];
            for c in col..p {
                let v = a[col][c];
                a[r][c] -= factor * v;
            }
        }
    }
    det
}

impl Integrand for RegularizedIntegrand {
    fn dim(&self) -> usize {
        self.form.dim()
    }

    fn n_layers(&self) -> usize {
        match self.reg {
            Regularizer::Kernels { .. } => self.map.q(),
            Regularizer::Powers { .. } => 0,
        }
    }

    #[inline]
    fn eval(&self, z: &[Complex64], layers: &mut [f64]) -> Complex64 {
        self.eval_with_layers(z, layers)
    }
}

/// Builds the regularized integrand for kernels `χ_j` and parameters `ε_j`.
pub fn assemble_integrand(
    f: &HoloMap,
    phi: &TestForm,
    kernels: &[Kernel],
    eps: &[f64],
) -> Result<RegularizedIntegrand> {
    RegularizedIntegrand::new(
        f,
        phi,
        Regularizer::Kernels {
            kernels: kernels.to_vec(),
            eps: eps.to_vec(),
        },
    )
}

/// Adaptive integral of the regularized pairing at the given ε.
pub fn pair_regularized(
    f: &HoloMap,
    phi: &TestForm,
    kernels: &[Kernel],
    eps: &[f64],
    opts: &QuadratureOptions,
) -> Result<PairingResult> {
    let g = assemble_integrand(f, phi, kernels, eps)?;
    integrate_regularized(&g, f.components(), phi.bump.r1, eps, opts)
}

fn integrate_regularized(
    g: &RegularizedIntegrand,
    components: &[ComplexPolynomial],
    r: f64,
    eps: &[f64],
    opts: &QuadratureOptions,
) -> Result<PairingResult> {
    if let Some(h) = quadratic_fibre(components) {
        let domain = IntegrationDomain::new(vec![r, fibre_radius(&h, r)])?;
        let fibered = FiberedIntegrand { inner: g, h };
        return integrate_adaptive(&fibered, &domain, &graded_for(opts, &domain, eps));
    }
    let domain = g.domain();
    integrate_adaptive(g, &domain, &graded_for(opts, &domain, eps))
}

/// `h` when the map is planar with second factor `z₂² + h(z₁)`.
fn quadratic_fibre(components: &[ComplexPolynomial]) -> Option<ComplexPolynomial> {
    let [_, f2] = components else { return None };
    if f2.dim() != 2 || !f2.is_holomorphic() {
        return None;
    }
    let h = f2 - &ComplexPolynomial::var(2, 1).pow(2);
    h.terms().iter().all(|t| t.holo[1] == 0).then_some(h)
}

/// Bound on `|z₂² + h(z₁)|` over the ball of radius `r`.
fn fibre_radius(h: &ComplexPolynomial, r: f64) -> f64 {
    let g = |rho: f64| {
        r * r - rho * rho
            + h.terms()
                .iter()
                .map(|t| t.coeff.norm() * rho.powi(t.holo[0] as i32))
                .sum::<f64>()
    };
    let lip = 2.0 * r
        + h.terms()
            .iter()
            .map(|t| t.coeff.norm() * t.holo[0] as f64 * r.powi(t.holo[0] as i32 - 1).max(1.0))
            .sum::<f64>();
    let n = 2000;
    let step = r / n as f64;
    (0..=n).map(|k| g(k as f64 * step)).fold(0.0, f64::max) + lip * step
}

/// Adds geometric radial breakpoints down to `0.1·√ε_min` so the initial
/// mesh sees the thinnest transition layer.
fn graded_for(
    opts: &QuadratureOptions,
    domain: &IntegrationDomain,
    eps: &[f64],
) -> QuadratureOptions {
    let emin = eps
        .iter()
        .cloned()
        .filter(|e| *e > 0.0)
        .fold(f64::INFINITY, f64::min);
    let rmax = domain.radii.iter().cloned().fold(0.0, f64::max);
    let mut out = opts.clone();
    if emin.is_finite() && rmax > 0.0 {
        let first = rmax / opts.init_subdiv.max(1) as f64;
        let levels = ((first / (0.1 * emin.sqrt())).ln() / 4f64.ln())
            .ceil()
            .clamp(0.0, 60.0) as usize;
        out.radial_grading = out.radial_grading.max(levels);
    }
    out
}

/// Coordinates `(z, u)` with `u = w² + h(z)` for planar maps whose second
/// component is `z₂² + h(z₁)`: the transition layer of `f₂` becomes a polar
/// annulus. The two roots `±w` are summed with the Jacobian `1/|2w|²`.
struct FiberedIntegrand<'a> {
    inner: &'a RegularizedIntegrand,
    h: ComplexPolynomial,
}

impl Integrand for FiberedIntegrand<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn n_layers(&self) -> usize {
        self.inner.n_layers()
    }

    fn eval(&self, x: &[Complex64], layers: &mut [f64]) -> Complex64 {
        let (z, u) = (x[0], x[1]);
        let w = (u - self.h.eval_unchecked(&[z, ZERO])).sqrt();
        let jac = 4.0 * w.norm_sqr();
        let a = self.inner.eval_with_layers(&[z, w], layers);
        if jac == 0.0 {
            return ZERO;
        }
        let mut other = [0.0; MAX_LAYERS];
        let b = self
            .inner
            .eval_with_layers(&[z, -w], &mut other[..layers.len()]);
        (a + b) / jac
    }
}

/// `c_p = (−1)^{p(p−1)/2} (p−1)! / √p`.
pub fn bochner_martinelli_constant(p: usize) -> f64 {
    let sign = if (p * p.saturating_sub(1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    let fact: f64 = (1..p).map(|k| k as f64).product();
    sign * fact / (p as f64).sqrt()
}

/// Bochner–Martinelli regularization
/// `∂̄χ(|f|²/ε) ∧ c_p Σ_j (−1)^{j−1} f̄_j ∧_{k≠j} df̄_k / |f|^{2p}`, which
/// collapses to `c_p χ'(|f|²/ε) / (ε |f|^{2p−2}) · df̄_1 ∧ … ∧ df̄_p`.
#[derive(Debug, Clone)]
pub struct BochnerMartinelliIntegrand {
    map: HoloMap,
    form: TestForm,
    kernel: Kernel,
    eps: f64,
    derivs: Vec<Vec<ComplexPolynomial>>,
    prefactor: Complex64,
}

impl Integrand for BochnerMartinelliIntegrand {
    fn dim(&self) -> usize {
        self.form.dim()
    }

    fn n_layers(&self) -> usize {
        1
    }

    fn eval(&self, z: &[Complex64], layers: &mut [f64]) -> Complex64 {
        let p = self.map.p();
        let r2: f64 = self
            .map
            .components()
            .iter()
            .map(|f| f.eval_unchecked(z).norm_sqr())
            .sum();
        let w = r2 / self.eps;
        layers[0] = w;
        let coeff = self.form.coefficient(z);
        if coeff == ZERO {
            return ZERO;
        }
        let d = self.kernel.derivative_unchecked(w);
        if d == 0.0 {
            return ZERO;
        }
        let radial = if p == 1 {
            d / self.eps
        } else {
            if r2 == 0.0 {
                return ZERO;
            }
            d / (self.eps * r2.powi(p as i32 - 1))
        };
        let mut m = [[ZERO; MAX_COMPLEX_DIM]; MAX_COMPLEX_DIM];
        for j in 0..p {
            for (c, dp) in self.derivs[j].iter().enumerate() {
                m[j][c] = dp.eval_unchecked(z).conj();
            }
        }
        let det = antisymmetric_det(&mut m, p);
        coeff * det * radial * self.prefactor
    }
}

pub fn pair_bochner_martinelli(
    f: &HoloMap,
    phi: &TestForm,
    eps: f64,
    kernel: Kernel,
    opts: &QuadratureOptions,
) -> Result<PairingResult> {
    let (p, q, n) = (f.p(), f.q(), f.dim());
    if p != q {
        return Err(Error::InvalidArgument(
            "Bochner–Martinelli pairing needs p = q".into(),
        ));
    }
    if p == 0 || p > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ p ≤ n, got p = {p}"
        )));
    }
    if phi.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: phi.dim(),
        });
    }
    if phi.anti_indices().len() != n - p {
        return Err(Error::FormDegree {
            expected: n - p,
            got: phi.anti_indices().len(),
        });
    }
    if !kernel.is_smooth() {
        return Err(Error::NotDifferentiable);
    }
    kernel.validate()?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let complement = phi.complement();
    let derivs = f
        .components()
        .iter()
        .map(|fj| {
            complement
                .iter()
                .map(|&c| fj.dz(c))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let prefactor = volume_constant(n) * phi.wedge_sign() * bochner_martinelli_constant(p);
    let g = BochnerMartinelliIntegrand {
        map: f.clone(),
        form: phi.clone(),
        kernel,
        eps,
        derivs,
        prefactor,
    };
    let domain = IntegrationDomain::polydisc(n, phi.bump.r1)?;
    integrate_adaptive(&g, &domain, &graded_for(opts, &domain, &[eps]))
}

/// Deterministic sample points in the polydisc of the given radius.
fn sample_points(n: usize, radius: f64, count: usize) -> Vec<Vec<Complex64>> {
    // low-discrepancy additive recurrence, fixed seed
    let alpha: Vec<f64> = (0..2 * n)
        .map(|k| ((k + 2) as f64).sqrt().fract())
        .collect();
    (1..=count)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let u = (i as f64 * alpha[2 * j]).fract();
                    let v = (i as f64 * alpha[2 * j + 1]).fract();
                    Complex64::from_polar(radius * (0.1 + 0.9 * u), 2.0 * PI * v)
                })
                .collect()
        })
        .collect()
}

/// Pulls the regularized form of `f` back to `{z_coord = s}` and pairs it
/// with the test form `φ_Y` on the hyperplane.
pub fn restrict_and_pair(
    f: &HoloMap,
    coord: usize,
    s: Complex64,
    phi_y: &TestForm,
    kernels: &[Kernel],
    eps: &[f64],
    opts: &QuadratureOptions,
) -> Result<PairingResult> {
    let n = f.dim();
    if coord >= n {
        return Err(Error::IndexOutOfRange {
            index: coord,
            dim: n,
        });
    }
    let p = f.p();
    if p > n - 1 {
        return Err(Error::DegenerateRestriction(format!(
            "{p} residue factors on a hyperplane of dimension {}",
            n - 1
        )));
    }
    let restricted: Vec<ComplexPolynomial> = f
        .components()
        .iter()
        .map(|c| c.restrict(coord, s))
        .collect::<Result<_>>()?;
    if let Some(j) = restricted.iter().position(|c| c.is_zero()) {
        return Err(Error::DegenerateRestriction(format!(
            "f{} vanishes identically on the hyperplane",
            j + 1
        )));
    }
    if p > 0 {
        // generic rank of the restricted Jacobian of the residue factors
        let jac: Vec<Vec<ComplexPolynomial>> = restricted[..p]
            .iter()
            .map(|c| (0..n - 1).map(|k| c.dz(k)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let full_rank = sample_points(n - 1, phi_y.bump.r1, 16).iter().any(|y| {
            let m = DMatrix::from_fn(2 * p, 2 * (n - 1), |r, c| {
                let v = jac[r / 2][c / 2].eval_unchecked(y);
                // real 2×2 block of multiplication by v
                match (r % 2, c % 2) {
                    (0, 0) | (1, 1) => v.re,
                    (0, 1) => -v.im,
                    _ => v.im,
                }
            });
            m.rank(1e-10 * m.norm().max(1e-300)) == 2 * p
        });
        if !full_rank {
            return Err(Error::DegenerateRestriction(
                "residue factors are dependent on the hyperplane".into(),
            ));
        }
    }
    let reg = Regularizer::Kernels {
        kernels: kernels.to_vec(),
        eps: eps.to_vec(),
    };
    let g = RegularizedIntegrand::build(f, phi_y, reg, Some(Embedding { coord, value: s }))?;
    integrate_regularized(&g, &restricted, phi_y.bump.r1, eps, opts)
}

fn orientation_sign(n: usize) -> f64 {
    if (n * n.saturating_sub(1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Which tube cycles [`pair_tube`] can parametrize.
#[derive(Debug, Clone, PartialEq)]
pub enum TubeKind {
    /// `f_j = z_{σ(j)}^{a_j}` with `p = q = n`.
    Monomial {
        coords: Vec<usize>,
        exponents: Vec<u32>,
    },
    /// `f = (z₁⁴, z₁² + z₂² + z₁³)` in `ℂ²`.
    PassareTsikh,
}

/// `(z₁⁴, z₁² + z₂² + z₁³)` with both factors carrying residues.
pub fn passare_tsikh_map() -> HoloMap {
    HoloMap::parse(2, &["z1^4", "z1^2+z2^2+z1^3"], 2).expect("static map parses")
}

pub fn classify_tube(f: &HoloMap) -> Result<TubeKind> {
    let n = f.dim();
    if f.p() != f.q() {
        return Err(Error::UnsupportedMap("tube integrals need p = q".into()));
    }
    let pt = passare_tsikh_map();
    if f.components() == pt.components() {
        return Ok(TubeKind::PassareTsikh);
    }
    if f.p() != n {
        return Err(Error::UnsupportedMap("monomial tubes need p = n".into()));
    }
    let mut coords = Vec::with_capacity(n);
    let mut exponents = Vec::with_capacity(n);
    for c in f.components() {
        let t = match c.terms() {
            [t] if t.coeff == ONE => t,
            _ => {
                return Err(Error::UnsupportedMap(format!(
                    "{c} is not a coordinate power"
                )))
            }
        };
        let nonzero: Vec<usize> = (0..n).filter(|&k| t.holo[k] > 0).collect();
        match nonzero[..] {
            [k] if !coords.contains(&k) => {
                coords.push(k);
                exponents.push(t.holo[k]);
            }
            _ => {
                return Err(Error::UnsupportedMap(format!(
                    "{c} is not a power of a fresh coordinate"
                )))
            }
        }
    }
    Ok(TubeKind::Monomial { coords, exponents })
}

/// Tube integral `∫_{|f_j|² = ε_j} φ / (f_1^{ℓ_1} ⋯ f_p^{ℓ_p})` with `m` points per angle.
///
/// The cycle is oriented by `d arg f_1 ∧ … ∧ d arg f_p` times `(−1)^{n(n−1)/2}`,
/// so that `f = (z)`, `φ = b dz` gives `+2πi`. The error estimate compares
/// against the rule with `m/2` points.
pub fn pair_tube(f: &HoloMap, phi: &TestForm, eps: &[f64], m: usize) -> Result<PairingResult> {
    let start = Instant::now();
    let n = f.dim();
    if phi.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: phi.dim(),
        });
    }
    if !phi.anti_indices().is_empty() {
        return Err(Error::FormDegree {
            expected: 0,
            got: phi.anti_indices().len(),
        });
    }
    if eps.len() != f.q() {
        return Err(Error::DimensionMismatch {
            expected: f.q(),
            got: eps.len(),
        });
    }
    if eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    if m < 4 {
        return Err(Error::InvalidArgument(
            "need at least 4 points per angle".into(),
        ));
    }
    let kind = classify_tube(f)?;
    let eval = |m: usize| -> Result<Complex64> {
        match &kind {
            TubeKind::Monomial { coords, exponents } => {
                monomial_tube(f, phi, eps, coords, exponents, m)
            }
            TubeKind::PassareTsikh => passare_tsikh_tube(f, phi, eps, m),
        }
    };
    let fine = eval(m)?;
    let coarse = eval(m / 2)?;
    Ok(PairingResult {
        value: fine,
        error_estimate: (fine - coarse).norm(),
        n_evals: m.pow(n as u32) + (m / 2).pow(n as u32),
        converged: true,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn monomial_tube(
    f: &HoloMap,
    phi: &TestForm,
    eps: &[f64],
    coords: &[usize],
    exponents: &[u32],
    m: usize,
) -> Result<Complex64> {
    let n = f.dim();
    let mut radii = vec![0.0; n];
    let mut total_power = vec![0u32; n];
    for j in 0..n {
        let k = coords[j];
        radii[k] = eps[j].powf(1.0 / (2.0 * exponents[j] as f64));
        total_power[k] = exponents[j] * f.powers()[j];
    }
    let sign = orientation_sign(n) * permutation_sign(coords);
    let v = integrate_torus(
        |z| {
            // dz_k = i z_k dθ_k
            let mut den = ONE;
            for k in 0..n {
                den *= z[k].powu(total_power[k] - 1);
            }
            phi.coefficient(z) / den * Complex64::i().powu(n as u32)
        },
        &radii,
        m,
    )?;
    Ok(v * sign)
}

/// Parametrizes the cycle by `z = ε₁^{1/8} e^{iθ}`, `g = √ε₂ e^{iϕ}` and
/// sums over both roots of `w² = g − z² − z³`; with `dz ∧ dw = dz ∧ dg / (2w)`
/// the two roots combine into `(ψ(z, w) − ψ(z, −w)) / (2w)`.
fn passare_tsikh_tube(f: &HoloMap, phi: &TestForm, eps: &[f64], m: usize) -> Result<Complex64> {
    let rz = eps[0].powf(0.125);
    let rg = eps[1].sqrt();
    let (l1, l2) = (f.powers()[0], f.powers()[1]);
    let h = 2.0 * PI / m as f64;
    let zs: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(rz, h * k as f64))
        .collect();
    let gs: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(rg, h * k as f64))
        .collect();
    let scale = rz.max(rg.sqrt());
    let mut rows = Vec::with_capacity(m);
    for &z in &zs {
        let z2 = z * z;
        let zpow = z2 * z * z.powu(4 * (l1 - 1));
        let mut acc = Vec::with_capacity(m);
        for &g in &gs {
            let w = (g - z2 - z2 * z).sqrt();
            if w.norm() < 1e-10 * scale {
                return Err(Error::BranchCollision(w.norm()));
            }
            let plus = phi.coefficient(&[z, w]);
            let minus = phi.coefficient(&[z, -w]);
            acc.push((plus - minus) / (2.0 * w) * (-1.0) / (zpow * g.powu(l2 - 1)));
        }
        rows.push(crate::quadrature::compensated_sum(acc));
    }
    Ok(crate::quadrature::compensated_sum(rows) * h * h * orientation_sign(2))
}

/// λ grid, fit degree and per-factor weights `t_j` (λ_j = t_j λ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationOptions {
    pub lambda_grid: Vec<f64>,
    pub fit_degree: usize,
    /// Empty means all weights equal one.
    pub weights: Vec<f64>,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            lambda_grid: geometric_grid(0.1, 0.7, 10),
            fit_degree: 4,
            weights: Vec::new(),
        }
    }
}

pub fn geometric_grid(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| start * ratio.powi(k as i32)).collect()
}

/// Least-squares polynomial fit of `values` against `lambdas`, evaluated at 0.
///
/// The error estimate combines the fit's residual standard error with the
/// propagated quadrature errors; an ill-conditioned design marks the result
/// as not converged.
pub fn extrapolate_to_zero(
    lambdas: &[f64],
    values: &[PairingResult],
    degree: usize,
) -> Result<PairingResult> {
    let n = lambdas.len();
    if n != values.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: values.len(),
        });
    }
    if n < degree + 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} λ points for degree {degree}",
            degree + 2
        )));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument("λ grid must be positive".into()));
    }
    let lmax = lambdas.iter().cloned().fold(0.0, f64::max);
    let v = DMatrix::from_fn(n, degree + 1, |i, k| (lambdas[i] / lmax).powi(k as i32));
    let svd = v.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    let well_conditioned = cond < 1e12;
    let pinv = svd
        .pseudo_inverse(smax * 1e-14)
        .map_err(|e| Error::IllConditioned(e.to_string()))?;
    let yr = DVector::from_iterator(n, values.iter().map(|r| r.value.re));
    let yi = DVector::from_iterator(n, values.iter().map(|r| r.value.im));
    let (cr, ci) = (&pinv * &yr, &pinv * &yi);
    let res_r = &yr - &v * &cr;
    let res_i = &yi - &v * &ci;
    let dof = (n - degree - 1).max(1) as f64;
    let sigma = ((res_r.norm_squared() + res_i.norm_squared()) / dof).sqrt();
    let row0 = pinv.row(0);
    let propagated: f64 = (0..n)
        .map(|i| row0[i].abs() * values[i].error_estimate)
        .sum();
    Ok(PairingResult {
        value: Complex64::new(cr[0], ci[0]),
        error_estimate: sigma * row0.norm() + propagated,
        n_evals: values.iter().map(|r| r.n_evals).sum(),
        converged: well_conditioned && values.iter().all(|r| r.converged),
        wall_seconds: values.iter().map(|r| r.wall_seconds).sum(),
    })
}

fn continuation_weights(copts: &ContinuationOptions, q: usize) -> Result<Vec<f64>> {
    if copts.weights.is_empty() {
        return Ok(vec![1.0; q]);
    }
    if copts.weights.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: copts.weights.len(),
        });
    }
    if copts.weights.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument(
            "continuation weights must be positive".into(),
        ));
    }
    Ok(copts.weights.clone())
}

/// `Γ(λ) = ∫ Π|f_j|^{2λ t_j} ∂̄ … / f^ℓ ∧ φ` on the λ grid, extrapolated to λ = 0.
pub fn pair_analytic_continuation(
    f: &HoloMap,
    phi: &TestForm,
    copts: &ContinuationOptions,
    opts: &QuadratureOptions,
) -> Result<PairingResult> {
    let t = continuation_weights(copts, f.q())?;
    if copts.lambda_grid.len() < copts.fit_degree + 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} λ points",
            copts.fit_degree + 2
        )));
    }
    let mut values = Vec::with_capacity(copts.lambda_grid.len());
    for &lambda in &copts.lambda_grid {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument("λ grid must be positive".into()));
        }
        let reg = Regularizer::Powers {
            lambda: t.iter().map(|tj| tj * lambda).collect(),
        };
        let g = RegularizedIntegrand::new(f, phi, reg)?;
        values.push(integrate_adaptive(&g, &g.domain(), opts)?);
    }
    extrapolate_to_zero(&copts.lambda_grid, &values, copts.fit_degree)
}

/// Image of a holomorphic polynomial chart `π: ℂ^m → ℂ^N` over `|t_k| ≤ radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametrizedVariety {
    param_dim: usize,
    chart: Vec<ComplexPolynomial>,
    radius: f64,
}

impl ParametrizedVariety {
    pub fn new(param_dim: usize, chart: Vec<ComplexPolynomial>, radius: f64) -> Result<Self> {
        if param_dim == 0 || param_dim > MAX_COMPLEX_DIM {
            return Err(Error::InvalidArgument(format!(
                "parameter dimension {param_dim} unsupported"
            )));
        }
        if chart.is_empty() {
            return Err(Error::InvalidArgument(
                "chart needs at least one component".into(),
            ));
        }
        if let Some(c) = chart.iter().find(|c| c.dim() != param_dim) {
            return Err(Error::DimensionMismatch {
                expected: param_dim,
                got: c.dim(),
            });
        }
        if chart.iter().any(|c| !c.is_holomorphic()) {
            return Err(Error::InvalidArgument("chart must be holomorphic".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(
                "parameter radius must be positive".into(),
            ));
        }
        Ok(ParametrizedVariety {
            param_dim,
            chart,
            radius,
        })
    }

    /// The cusp `t ↦ (t², t³)`.
    pub fn cusp(radius: f64) -> Self {
        let t = ComplexPolynomial::var(1, 0);
        ParametrizedVariety::new(1, vec![t.pow(2), t.pow(3)], radius).expect("cusp chart is valid")
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.chart.len()
    }

    pub fn chart(&self) -> &[ComplexPolynomial] {
        &self.chart
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Ambient test form `ψ b(|z|) dz̄_B ∧ dz_A` of bidegree `(m, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientForm {
    pub psi: ComplexPolynomial,
    pub bump: crate::form::RadialBump,
    pub holo_indices: Vec<usize>,
    pub anti_indices: Vec<usize>,
}

struct VarietyIntegrand<'a> {
    v: &'a ParametrizedVariety,
    h: &'a ComplexPolynomial,
    form: &'a AmbientForm,
    jac_a: Vec<Vec<ComplexPolynomial>>,
    jac_b: Vec<Vec<ComplexPolynomial>>,
    lambda: f64,
    volc: Complex64,
}

impl Integrand for VarietyIntegrand<'_> {
    fn dim(&self) -> usize {
        self.v.param_dim
    }

    fn eval(&self, t: &[Complex64], _layers: &mut [f64]) -> Complex64 {
        let mut zbuf = [ZERO; 2 * MAX_COMPLEX_DIM];
        let nz = self.v.chart.len();
        for (k, c) in self.v.chart.iter().enumerate() {
            zbuf[k] = c.eval_unchecked(t);
        }
        let z = &zbuf[..nz];
        let b = self.form.bump.eval_at(z);
        if b == 0.0 {
            return ZERO;
        }
        let hv = self.h.eval_unchecked(z);
        let r2 = hv.norm_sqr();
        if r2 == 0.0 {
            return ZERO;
        }
        let m = self.v.param_dim;
        let det_of = |jac: &[Vec<ComplexPolynomial>]| {
            let mut mat = [[ZERO; MAX_COMPLEX_DIM]; MAX_COMPLEX_DIM];
            for (r, row) in jac.iter().enumerate() {
                for (c, d) in row.iter().enumerate() {
                    mat[r][c] = d.eval_unchecked(t);
                }
            }
            antisymmetric_det(&mut mat, m)
        };
        let pull = det_of(&self.jac_a) * det_of(&self.jac_b).conj();
        self.form.psi.eval_unchecked(z) * b * pull * r2.powf(self.lambda) / hv * self.volc
    }
}

/// `∫_V |h|^{2λ} φ / h` on the chart, continued to λ = 0.
pub fn pair_pv_on_variety(
    v: &ParametrizedVariety,
    h: &ComplexPolynomial,
    phi: &AmbientForm,
    copts: &ContinuationOptions,
    opts: &QuadratureOptions,
) -> Result<PairingResult> {
    let (m, nn) = (v.param_dim, v.ambient_dim());
    if h.dim() != nn {
        return Err(Error::DimensionMismatch {
            expected: nn,
            got: h.dim(),
        });
    }
    if !h.is_holomorphic() {
        return Err(Error::InvalidArgument("h must be holomorphic".into()));
    }
    if phi.psi.dim() != nn {
        return Err(Error::DimensionMismatch {
            expected: nn,
            got: phi.psi.dim(),
        });
    }
    for set in [&phi.holo_indices, &phi.anti_indices] {
        if set.len() != m {
            return Err(Error::FormDegree {
                expected: m,
                got: set.len(),
            });
        }
        if let Some(&k) = set.iter().find(|&&k| k >= nn) {
            return Err(Error::IndexOutOfRange { index: k, dim: nn });
        }
    }
    let jac = |set: &[usize]| -> Result<Vec<Vec<ComplexPolynomial>>> {
        set.iter()
            .map(|&a| (0..m).map(|k| v.chart[a].dz(k)).collect())
            .collect()
    };
    let (jac_a, jac_b) = (jac(&phi.holo_indices)?, jac(&phi.anti_indices)?);
    let domain = IntegrationDomain::polydisc(m, v.radius)?;
    let mut values = Vec::with_capacity(copts.lambda_grid.len());
    for &lambda in &copts.lambda_grid {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument("λ grid must be positive".into()));
        }
        let g = VarietyIntegrand {
            v,
            h,
            form: phi,
            jac_a: jac_a.clone(),
            jac_b: jac_b.clone(),
            lambda,
            volc: volume_constant(m),
        };
        values.push(integrate_adaptive(&g, &domain, opts)?);
    }
    extrapolate_to_zero(&copts.lambda_grid, &values, copts.fit_degree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::RadialBump;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn determinant_matches_cofactor_expansion_and_flips_exactly() {
        let rows = [
            [c(1.0, 2.0), c(-0.5, 0.1), c(3.0, 0.0)],
            [c(0.2, -1.0), c(2.0, 2.0), c(0.0, 1.0)],
            [c(-1.0, 0.3), c(0.7, 0.0), c(1.5, -0.5)],
        ];
        let mut m = [[ZERO; MAX_COMPLEX_DIM]; MAX_COMPLEX_DIM];
        for i in 0..3 {
            m[i][..3].copy_from_slice(&rows[i]);
        }
        let r = rows;
        let expect = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        let d = antisymmetric_det(&mut m.clone(), 3);
        assert!((d - expect).norm() < 1e-13);
        m.swap(0, 2);
        let swapped = antisymmetric_det(&mut m, 3);
        assert_eq!(swapped, -d);
    }

    #[test]
    fn one_variable_integrand_closed_form() {
        let b = RadialBump::new(0.5, 1.0).unwrap();
        let f = HoloMap::parse(1, &["z1"], 1).unwrap();
        let psi = ComplexPolynomial::parse("1 + z1*zb1", 1).unwrap();
        let phi = TestForm::top(psi.clone(), b);
        let eps = 1e-3;
        let g = assemble_integrand(&f, &phi, &[Kernel::rational(1)], &[eps]).unwrap();
        for z in [c(0.01, 0.02), c(0.3, -0.1), c(0.0, 0.0), c(-0.6, 0.5)] {
            let r2 = z.norm_sqr();
            let expect = psi.eval_unchecked(&[z]) * b.eval(z.norm()) * eps
                / ((r2 + eps) * (r2 + eps))
                * c(0.0, 2.0);
            assert!(
                (g.value(&[z]) - expect).norm() < 1e-12 * (1.0 + expect.norm()),
                "z={z}"
            );
        }
    }

    #[test]
    fn dbar_of_regularized_reciprocal_by_finite_differences() {
        // ∂̄(z̄/(|z|²+ε)) = ε/(|z|²+ε)², the coefficient the integrand uses
        let eps = 0.05;
        let u = |z: Complex64| z.conj() / (z.norm_sqr() + eps);
        let z = c(0.17, -0.08);
        let h = 1e-6;
        let dx = (u(z + h) - u(z - h)) / (2.0 * h);
        let dy = (u(z + c(0.0, h)) - u(z - c(0.0, h))) / (2.0 * h);
        let dbar = (dx + c(0.0, 1.0) * dy) * 0.5;
        let expect = eps / ((z.norm_sqr() + eps) * (z.norm_sqr() + eps));
        assert!((dbar - expect).norm() < 1e-6);
    }

    #[test]
    fn empty_map_integrand_is_plain_form() {
        let b = RadialBump::new(0.5, 1.0).unwrap();
        let f = HoloMap::simple(2, vec![], 0).unwrap();
        let psi = ComplexPolynomial::parse("z1 + zb2", 2).unwrap();
        let phi = TestForm::volume(psi.clone(), b);
        let g = assemble_integrand(&f, &phi, &[], &[]).unwrap();
        let z = [c(0.1, 0.2), c(-0.3, 0.05)];
        let expect = psi.eval_unchecked(&z) * b.eval_at(&z) * volume_constant(2);
        assert!((g.value(&z) - expect).norm() < 1e-15);
    }

    #[test]
    fn validation_errors() {
        let b = RadialBump::new(0.5, 1.0).unwrap();
        let f = HoloMap::parse(2, &["z1", "z2"], 2).unwrap();
        let top = TestForm::top(ComplexPolynomial::one(2), b);
        let k = [Kernel::rational(1); 2];
        let wrong_degree = TestForm::new(ComplexPolynomial::one(2), b, vec![0]).unwrap();
        assert!(matches!(
            assemble_integrand(&f, &wrong_degree, &k, &[1e-3; 2]),
            Err(Error::FormDegree { .. })
        ));
        assert!(matches!(
            assemble_integrand(&f, &top, &[Kernel::Sharp, Kernel::rational(1)], &[1e-3; 2]),
            Err(Error::NotDifferentiable)
        ));
        let f2 = f.with_powers(vec![2, 1]).unwrap();
        assert!(matches!(
            assemble_integrand(&f2, &top, &k, &[1e-3; 2]),
            Err(Error::VanishingOrder { .. })
        ));
        assert!(assemble_integrand(
            &f2,
            &top,
            &[Kernel::rational(2), Kernel::rational(1)],
            &[1e-3; 2]
        )
        .is_ok());
        assert!(assemble_integrand(&f, &top, &k, &[1e-3, 0.0]).is_err());
        assert!(assemble_integrand(&f, &top, &k[..1], &[1e-3]).is_err());
    }

    #[test]
    fn extrapolation_recovers_polynomials() {
        let grid = geometric_grid(0.5, 0.7, 8);
        let vals: Vec<PairingResult> = grid
            .iter()
            .map(|&l| PairingResult::exact(c(1.0 + 2.0 * l - l * l * l, -0.5 + l * l)))
            .collect();
        let r = extrapolate_to_zero(&grid, &vals, 3).unwrap();
        assert!((r.value - c(1.0, -0.5)).norm() < 1e-12);
        assert!(r.converged);
        assert!(extrapolate_to_zero(&grid[..4], &vals[..4], 3).is_err());
    }

    #[test]
    fn bochner_martinelli_constants() {
        assert_eq!(bochner_martinelli_constant(1), 1.0);
        assert!((bochner_martinelli_constant(2) + 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((bochner_martinelli_constant(3) + 2.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tube_classification() {
        let f = HoloMap::parse(2, &["z2^3", "z1"], 2).unwrap();
        assert_eq!(
            classify_tube(&f).unwrap(),
            TubeKind::Monomial {
                coords: vec![1, 0],
                exponents: vec![3, 1]
            }
        );
        assert_eq!(
            classify_tube(&passare_tsikh_map()).unwrap(),
            TubeKind::PassareTsikh
        );
        let g = HoloMap::parse(2, &["z1+z2", "z2"], 2).unwrap();
        assert!(matches!(classify_tube(&g), Err(Error::UnsupportedMap(_))));
        let h = HoloMap::parse(2, &["z1", "z1^2"], 2).unwrap();
        assert!(classify_tube(&h).is_err());
    }
}
