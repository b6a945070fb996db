//! Ground-truth values for coordinate-power residue currents, principal
//! values of monomials, and the blow-up chart example.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::{volume_constant, HoloMap, RadialBump, TestForm};
use crate::poly::ComplexPolynomial;
use crate::quadrature::{integrate_1d, integrate_torus, PairingResult};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const RADIAL_TOL: f64 = 1e-13;

/// `f_j = z_j^{a_j}` on coordinates `0..p`, followed by principal-value
/// factors `1/z_k^{c_k}` on coordinates `p..p+m`. Remaining coordinates are free.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialResidueSpec {
    pub dim: usize,
    pub residue_powers: Vec<u32>,
    #[serde(default)]
    pub pv_powers: Vec<u32>,
}

impl MonomialResidueSpec {
    pub fn new(dim: usize, residue_powers: Vec<u32>, pv_powers: Vec<u32>) -> Result<Self> {
        if residue_powers.len() + pv_powers.len() > dim {
            return Err(Error::InvalidArgument(format!(
                "{} residue and {} principal-value coordinates exceed dimension {dim}",
                residue_powers.len(),
                pv_powers.len()
            )));
        }
        if residue_powers.iter().chain(&pv_powers).any(|&a| a == 0) {
            return Err(Error::InvalidArgument(
                "monomial powers must be positive".into(),
            ));
        }
        Ok(MonomialResidueSpec {
            dim,
            residue_powers,
            pv_powers,
        })
    }

    /// Pure residue spec `(z_1^{a_1}, …, z_p^{a_p})` in dimension `n`.
    pub fn residues(dim: usize, powers: Vec<u32>) -> Result<Self> {
        Self::new(dim, powers, Vec::new())
    }

    pub fn p(&self) -> usize {
        self.residue_powers.len()
    }

    /// The matching map: residue components `z_j^{a_j}` with power 1, then
    /// principal-value components `z_k` with power `c_k`.
    pub fn to_holomap(&self) -> HoloMap {
        let p = self.p();
        let mut comps = Vec::new();
        let mut powers = Vec::new();
        for (j, &a) in self.residue_powers.iter().enumerate() {
            comps.push(ComplexPolynomial::var(self.dim, j).pow(a));
            powers.push(1);
        }
        for (k, &c) in self.pv_powers.iter().enumerate() {
            comps.push(ComplexPolynomial::var(self.dim, p + k));
            powers.push(c);
        }
        HoloMap::new(self.dim, comps, p, powers).expect("monomial spec yields a valid map")
    }
}

fn orientation_sign(n: usize) -> f64 {
    if (n * n.saturating_sub(1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `Γ(m/2)` for a positive integer `m`.
fn gamma_half(m: u64) -> f64 {
    if m.is_multiple_of(2) {
        (1..m / 2).map(|k| k as f64).product()
    } else {
        // Γ(k + 1/2) = √π · Π_{j<k} (j + 1/2)
        let k = (m - 1) / 2;
        PI.sqrt() * (0..k).map(|j| j as f64 + 0.5).product::<f64>()
    }
}

/// `∫_0^∞ r^e b(r) dr`, exact on `[0, r0]` and adaptive on `[r0, r1]`.
fn radial_moment(bump: &RadialBump, e: i64) -> f64 {
    let head = bump.r0.powi((e + 1) as i32) / (e + 1) as f64;
    let (tail, _, _) = integrate_1d(
        |r| r.powi(e as i32) * bump.eval(r),
        bump.r0,
        bump.r1,
        RADIAL_TOL,
        1e-15,
    );
    head + tail
}

/// `∫_{ℂ^d} Π_k ρ_k^{e_k} b(|ρ|) dLebesgue` with angular factors already integrated out.
fn radial_product_moment(bump: &RadialBump, exps: &[u64]) -> f64 {
    let d = exps.len();
    if d == 0 {
        return bump.eval(0.0);
    }
    // in ℝ_+^d: Π ρ_k^{m_k} dρ with m_k = e_k + 1, split into r and the positive orthant
    let m: Vec<u64> = exps.iter().map(|&e| e + 1).collect();
    let num: f64 = m.iter().map(|&mk| gamma_half(mk + 1)).product();
    let den = 2f64.powi(d as i32 - 1) * gamma_half(m.iter().map(|&mk| mk + 1).sum());
    let total: u64 = m.iter().sum();
    (2.0 * PI).powi(d as i32) * num / den * radial_moment(bump, total as i64 + d as i64 - 1)
}

/// Exact pairing of the residue current of `spec` (times its principal values)
/// with the test form `φ = ψ b dz̄_I ∧ dz`.
pub fn ch_monomial_pairing(spec: &MonomialResidueSpec, phi: &TestForm) -> Result<Complex64> {
    let n = spec.dim;
    if phi.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: phi.dim(),
        });
    }
    let p = spec.p();
    if phi.anti_indices().len() != n - p {
        return Err(Error::FormDegree {
            expected: n - p,
            got: phi.anti_indices().len(),
        });
    }
    if phi.anti_indices().iter().any(|&k| k < p) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let d = n - p;
    let npv = spec.pv_powers.len();
    let mut acc = Complex64::new(0.0, 0.0);
    'terms: for t in phi.psi.terms() {
        for j in 0..p {
            if t.anti[j] != 0 || t.holo[j] + 1 != spec.residue_powers[j] {
                continue 'terms;
            }
        }
        let mut exps = Vec::with_capacity(d);
        for k in p..n {
            let c = if k - p < npv {
                spec.pv_powers[k - p] as i64
            } else {
                0
            };
            let (a, b) = (t.holo[k] as i64, t.anti[k] as i64);
            if a - b != c {
                continue 'terms;
            }
            exps.push((2 * b) as u64);
        }
        acc += t.coeff * radial_product_moment(&phi.bump, &exps);
    }
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    Ok(acc
        * two_pi_i.powu(p as u32)
        * Complex64::new(0.0, 2.0).powu(d as u32)
        * orientation_sign(n))
}

/// Independent evaluation for `p = n` via iterated Cauchy integrals on the
/// torus `|z_j| = radius` with `m` points per angle.
pub fn ch_torus_oracle(
    spec: &MonomialResidueSpec,
    phi: &TestForm,
    radius: f64,
    m: usize,
) -> Result<Complex64> {
    let n = spec.dim;
    if spec.p() != n {
        return Err(Error::InvalidArgument("torus oracle needs p = n".into()));
    }
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
    if radius * (n as f64).sqrt() >= phi.bump.r0 {
        return Err(Error::InvalidArgument(
            "torus must lie where the bump equals one".into(),
        ));
    }
    let a = spec.residue_powers.clone();
    let v = integrate_torus(
        |z| {
            // ψ/z^a · Π dz_j  with dz_j = i z_j dθ_j
            let mut den = Complex64::new(1.0, 0.0);
            for (zj, &aj) in z.iter().zip(&a) {
                den *= zj.powu(aj - 1);
            }
            phi.coefficient(z) / den * I.powu(n as u32)
        },
        &vec![radius; n],
        m,
    )?;
    Ok(v * orientation_sign(n))
}

/// Principal value `⟨1/z^k, ψ b dz̄ ∧ dz⟩` in one variable.
pub fn pv_monomial(k: u32, phi: &TestForm) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "principal-value power must be at least 1".into(),
        ));
    }
    if phi.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: phi.dim(),
        });
    }
    if phi.anti_indices() != [0] {
        return Err(Error::FormDegree {
            expected: 1,
            got: phi.anti_indices().len(),
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for t in phi.psi.terms() {
        let (a, b) = (t.holo[0] as i64, t.anti[0] as i64);
        if a - b == k as i64 {
            acc += t.coeff * radial_moment(&phi.bump, a + b - k as i64 + 1);
        }
    }
    Ok(acc * 2.0 * PI * volume_constant(1))
}

/// Chart value of the blow-up example together with its iterated-limit reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupDemo {
    pub value: PairingResult,
    /// `(2πi)² · ⟨1/z₃, φ(0,0,·) dz̄₃ ∧ dz₃⟩`.
    pub reference: Complex64,
}

/// Contribution of the chart `(w₁, w₁w₂, w₃)` to the regularized pairing of
/// `f = (z₁, z₂, z₃)` (two residue factors, one principal value, all with
/// `χ(t) = t/(1+t)`) against `φ₀(z₃) b(|z|)`, with the chart cut off by
/// `b_cut(|w₂|)`, `b_cut = bump(1, 2)`.
pub fn blowup_chart_demo(
    phi0: &ComplexPolynomial,
    bump: RadialBump,
    eps: [f64; 3],
) -> Result<BlowupDemo> {
    if phi0.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: phi0.dim(),
        });
    }
    if eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let start = std::time::Instant::now();
    let [e1, e2, e3] = eps;
    let cut = RadialBump::new(1.0, 2.0)?;
    let terms: Vec<(Complex64, i32)> = phi0
        .terms()
        .iter()
        .filter(|t| t.holo[0] == t.anti[0] + 1)
        .map(|t| (t.coeff, t.anti[0] as i32))
        .collect();
    let tol = 1e-9;
    let lo = -45.0f64;
    let r_max = bump.r1.ln();
    // log-radial variables u_k = ln ρ_k, so every ε-layer has unit width
    let inner = |rho1: f64, rho2: f64| -> (f64, f64) {
        let s12 = rho1 * rho1 * (1.0 + rho2 * rho2);
        let mut re = 0.0;
        let mut im = 0.0;
        for &(c, beta) in &terms {
            let (v, _, _) = integrate_1d(
                |u3| {
                    let r3 = u3.exp();
                    let b = bump.eval((s12 + r3 * r3).sqrt());
                    if b == 0.0 {
                        return 0.0;
                    }
                    r3.powi(2 * beta + 2) / (r3 * r3 + e3) * b * r3 * r3
                },
                lo,
                r_max,
                tol,
                1e-13,
            );
            re += c.re * v;
            im += c.im * v;
        }
        (re, im)
    };
    let layer12 = |rho1: f64, rho2: f64| -> f64 {
        let a = rho1 * rho1 + e1;
        let g = rho1 * rho1 * rho2 * rho2 + e2;
        (e1 / (a * a)) * (e2 * rho1 * rho1 / (g * g)) * cut.eval(rho2) * rho1 * rho2
    };
    let integrate_component = |pick: fn((f64, f64)) -> f64| -> (f64, f64) {
        let (v, err, _) = integrate_1d(
            |u1| {
                let r1 = u1.exp();
                let (v2, _, _) = integrate_1d(
                    |u2| {
                        let r2 = u2.exp();
                        let w = layer12(r1, r2);
                        if w == 0.0 {
                            return 0.0;
                        }
                        w * pick(inner(r1, r2)) * r2
                    },
                    lo,
                    cut.r1.ln(),
                    tol,
                    1e-12 * e1 * r1 / ((r1 * r1 + e1) * (r1 * r1 + e1)),
                );
                v2 * r1
            },
            lo,
            r_max,
            tol,
            1e-12,
        );
        (v, err)
    };
    let (re, err_re) = if terms.iter().any(|t| t.0.re != 0.0) {
        integrate_component(|x| x.0)
    } else {
        (0.0, 0.0)
    };
    let (im, err_im) = if terms.iter().any(|t| t.0.im != 0.0) {
        integrate_component(|x| x.1)
    } else {
        (0.0, 0.0)
    };
    let pref = Complex64::new(0.0, -8.0) * (2.0 * PI).powi(3);
    let value = PairingResult {
        value: Complex64::new(re, im) * pref,
        error_estimate: (err_re.hypot(err_im)) * pref.norm(),
        n_evals: 0,
        converged: true,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let reference = Complex64::new(0.0, 2.0 * PI).powu(2)
        * pv_monomial(1, &TestForm::volume(phi0.clone(), bump))?;
    Ok(BlowupDemo { value, reference })
}
