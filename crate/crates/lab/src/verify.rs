use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use residue_core::oracle::{
    ch_monomial_pairing, ch_torus_oracle, pv_monomial, MonomialResidueSpec,
};
use residue_core::pairings::{
    pair_analytic_continuation, pair_bochner_martinelli, pair_regularized, restrict_and_pair,
    ContinuationOptions,
};
use residue_core::{
    Complex64, ComplexPolynomial, HoloMap, Kernel, QuadratureOptions, RadialBump, TestForm,
};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

pub const SUITES: [&str; 5] = ["kernels", "oracle", "convergence", "bm", "restriction"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyEntry {
    pub suite: String,
    pub property: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub entries: Vec<VerifyEntry>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

fn entry(
    suite: &str,
    property: impl Into<String>,
    measured: f64,
    tolerance: f64,
    detail: impl Into<String>,
) -> VerifyEntry {
    VerifyEntry {
        suite: suite.into(),
        property: property.into(),
        passed: measured <= tolerance,
        measured,
        tolerance,
        detail: detail.into(),
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn bump() -> RadialBump {
    RadialBump::new(0.5, 1.0).expect("valid bump")
}

fn random_holomorphic(
    rng: &mut ChaCha8Rng,
    dim: usize,
    degree: u32,
    terms: usize,
) -> ComplexPolynomial {
    let ts = (0..terms).map(|_| {
        let mut h = vec![0u32; dim];
        for _ in 0..rng.gen_range(0..=degree) {
            h[rng.gen_range(0..dim)] += 1;
        }
        (
            h,
            vec![0; dim],
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        )
    });
    ComplexPolynomial::from_terms(dim, ts).expect("consistent dimensions")
}

/// Largest relative error of `∂_{z_j}[χ(|f|²/ε)/f^ℓ] = ∂_j f · χ̃(|f|²/ε)/f^{ℓ+1}`
/// over `points` random `(f, z, ε)`, with the derivative taken by central
/// differences. Errors are relative to `|∂_j f|(tχ'(t) + ℓχ(t))/|f|^{ℓ+1}`,
/// the size of the two terms whose difference is `χ̃`.
pub fn chi_tilde_identity_error(
    kernel: Kernel,
    ell: u32,
    points: usize,
    seed: u64,
) -> LabResult<f64> {
    let tilde = kernel.tilde(ell)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < points {
        let f = random_holomorphic(&mut rng, 2, 3, 4);
        let j = rng.gen_range(0..2);
        let df = f.dz(j)?;
        let z: Vec<Complex64> = (0..2)
            .map(|_| Complex64::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)))
            .collect();
        let (fz, dfz) = (f.eval_unchecked(&z), df.eval_unchecked(&z));
        if fz.norm() < 1e-3 || dfz.norm() < 1e-3 {
            continue;
        }
        let t = match kernel {
            // stay inside the transition, away from the flat ends
            Kernel::SmoothStep { a, b } => rng.gen_range(a + 0.1 * (b - a)..b - 0.1 * (b - a)),
            _ => rng.gen_range(-3.0f64..3.0).exp(),
        };
        let eps = fz.norm_sqr() / t;
        let g = |w: &[Complex64]| {
            let fw = f.eval_unchecked(w);
            kernel.eval(fw.norm_sqr() / eps) / fw.powu(ell)
        };
        let h = 1e-5 * (fz.norm() / dfz.norm()).min(1.0);
        let shifted = |d: Complex64| {
            let mut w = z.clone();
            w[j] += d;
            g(&w)
        };
        let dx = (shifted(Complex64::new(h, 0.0)) - shifted(Complex64::new(-h, 0.0))) / (2.0 * h);
        let dy = (shifted(Complex64::new(0.0, h)) - shifted(Complex64::new(0.0, -h))) / (2.0 * h);
        let fd = 0.5 * (dx - Complex64::new(0.0, 1.0) * dy);
        let exact = dfz * tilde.eval(t) / fz.powu(ell + 1);
        let scale = dfz.norm() * (t * kernel.derivative(t)?.abs() + ell as f64 * kernel.eval(t))
            / fz.norm().powi(ell as i32 + 1);
        worst = worst.max((fd - exact).norm() / scale);
        done += 1;
    }
    Ok(worst)
}

fn kernels_suite() -> LabResult<Vec<VerifyEntry>> {
    let mut out = Vec::new();
    for order in 1..=3u32 {
        for ell in 0..=order {
            let err = chi_tilde_identity_error(
                Kernel::rational(order),
                ell,
                100,
                11 * order as u64 + ell as u64,
            )?;
            out.push(entry(
                "kernels",
                format!("tilde identity, rational order {order}, ell {ell}"),
                err,
                1e-5,
                "100 random points",
            ));
        }
    }
    let err = chi_tilde_identity_error(Kernel::SmoothStep { a: 0.5, b: 2.0 }, 0, 100, 99)?;
    out.push(entry(
        "kernels",
        "tilde identity, smoothstep, ell 0",
        err,
        1e-5,
        "100 random points",
    ));
    let v = Kernel::rational(1).tilde(1)?.eval(1.0);
    out.push(entry(
        "kernels",
        "rational(1) tilde at 1",
        (v + 0.25).abs(),
        1e-15,
        format!("value {v}"),
    ));
    Ok(out)
}

fn oracle_suite() -> LabResult<Vec<VerifyEntry>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for a1 in 1..=3 {
        for a2 in 1..=3 {
            for _ in 0..3 {
                let spec = MonomialResidueSpec::residues(2, vec![a1, a2])?;
                let phi = TestForm::top(random_holomorphic(&mut rng, 2, 6, 6), bump());
                let closed = ch_monomial_pairing(&spec, &phi)?;
                let torus = ch_torus_oracle(&spec, &phi, 0.3, 16)?;
                worst = worst.max((closed - torus).norm() / closed.norm().max(1.0));
                cases += 1;
            }
        }
    }
    out.push(entry(
        "oracle",
        "closed form vs torus Cauchy integrals",
        worst,
        1e-10,
        format!("{cases} cases, |a| <= 6"),
    ));
    let o = QuadratureOptions {
        radial_grading: 3,
        ..QuadratureOptions::with_tol(1e-8, 1e-12)
    };
    for k in 1..=2u32 {
        let psi = ComplexPolynomial::parse(&format!("z1^{k}*(1 + z1*zb1)"), 1)?;
        let phi = TestForm::volume(psi, bump());
        let f = HoloMap::simple(1, vec![ComplexPolynomial::var(1, 0).pow(k)], 0)?;
        let num = pair_analytic_continuation(&f, &phi, &ContinuationOptions::default(), &o)?;
        let pv = pv_monomial(k, &phi)?;
        out.push(entry(
            "oracle",
            format!("pv_monomial k={k} vs continuation"),
            rel(num.value, pv),
            1e-4,
            format!("{pv}"),
        ));
    }
    Ok(out)
}

fn convergence_suite() -> LabResult<Vec<VerifyEntry>> {
    let mut out = Vec::new();
    let f = HoloMap::parse(1, &["z1"], 1)?;
    let r = pair_regularized(
        &f,
        &TestForm::top(ComplexPolynomial::one(1), bump()),
        &[Kernel::rational(1)],
        &[1e-6],
        &QuadratureOptions::with_tol(1e-6, 1e-10),
    )?;
    out.push(entry(
        "convergence",
        "f = z, psi = 1 at eps 1e-6 vs 2 pi i",
        rel(r.value, Complex64::new(0.0, 2.0 * PI)),
        1e-2,
        format!("{}", r.value),
    ));
    let (value, oracle, secs) = oracle_agreement()?;
    out.push(entry(
        "convergence",
        "f = (z1^2, z2^3), psi = z1 z2^2 at eps 1e-4 vs oracle",
        rel(value.value, oracle),
        1e-2,
        format!("{} vs {oracle} in {secs:.2}s", value.value),
    ));
    Ok(out)
}

/// Regularized pairing of `z₁z₂²·b` against `(z₁², z₂³)` at ε = (1e−4, 1e−4),
/// the oracle value and the wall time.
pub fn oracle_agreement() -> LabResult<(residue_core::PairingResult, Complex64, f64)> {
    let f = HoloMap::parse(2, &["z1^2", "z2^3"], 2)?;
    let phi = TestForm::top(ComplexPolynomial::parse("z1*z2^2", 2)?, bump());
    let start = std::time::Instant::now();
    let r = pair_regularized(
        &f,
        &phi,
        &[Kernel::rational(1); 2],
        &[1e-4, 1e-4],
        &QuadratureOptions::with_tol(1e-5, 1e-10),
    )?;
    let secs = start.elapsed().as_secs_f64();
    let spec = MonomialResidueSpec::residues(2, vec![2, 3])?;
    Ok((r, ch_monomial_pairing(&spec, &phi)?, secs))
}

/// Test forms for the Bochner–Martinelli comparison.
pub const BM_FORMS: [&str; 3] = ["1", "1 + z1*zb2 + z2", "2 + z1^2 - zb1*z2"];

/// `pair_bochner_martinelli / ch_monomial_pairing` for `f = (z₁, z₂)` at each of [`BM_FORMS`].
pub fn bm_ratios(eps: f64) -> LabResult<Vec<Complex64>> {
    let f = HoloMap::parse(2, &["z1", "z2"], 2)?;
    let spec = MonomialResidueSpec::residues(2, vec![1, 1])?;
    let o = QuadratureOptions::with_tol(1e-5, 1e-10);
    BM_FORMS
        .iter()
        .map(|psi| {
            let phi = TestForm::top(ComplexPolynomial::parse(psi, 2)?, bump());
            let bm = pair_bochner_martinelli(&f, &phi, eps, Kernel::rational(2), &o)?;
            Ok(bm.value / ch_monomial_pairing(&spec, &phi)?)
        })
        .collect()
}

fn bm_suite() -> LabResult<Vec<VerifyEntry>> {
    let ratios = bm_ratios(1e-4)?;
    let spread = ratios
        .iter()
        .map(|r| (r - ratios[0]).norm())
        .fold(0.0, f64::max)
        / ratios[0].norm();
    let detail = ratios
        .iter()
        .map(|r| format!("{r:.6}"))
        .collect::<Vec<_>>()
        .join(", ");
    let c2 = residue_core::pairings::bochner_martinelli_constant(2);
    Ok(vec![entry(
        "bm",
        "BM / CH ratio constant across 3 forms",
        spread,
        1e-2,
        format!("ratios {detail}; c_2 = {c2:.6}"),
    )])
}

/// Restricted vs intrinsic pairing for `(z₁², z₂² + z₃z₁)` on `{z₃ = 0.3}`.
pub fn restriction_pair() -> LabResult<(residue_core::PairingResult, residue_core::PairingResult)> {
    let f = HoloMap::parse(3, &["z1^2", "z2^2 + z3*z1"], 2)?;
    let g = HoloMap::parse(2, &["z1^2", "z2^2 + 0.3*z1"], 2)?;
    let phi = TestForm::top(ComplexPolynomial::parse("z1*z2 + 1 + zb1*z2", 2)?, bump());
    let k = [Kernel::rational(1); 2];
    let eps = [1e-4, 1e-4];
    let o = QuadratureOptions::with_tol(1e-5, 1e-10);
    let restricted = restrict_and_pair(&f, 2, Complex64::new(0.3, 0.0), &phi, &k, &eps, &o)?;
    let intrinsic = pair_regularized(&g, &phi, &k, &eps, &o)?;
    Ok((restricted, intrinsic))
}

fn restriction_suite() -> LabResult<Vec<VerifyEntry>> {
    let (r, i) = restriction_pair()?;
    let summed = r.error_estimate + i.error_estimate;
    Ok(vec![entry(
        "restriction",
        "restricted vs intrinsic pairing",
        (r.value - i.value).norm(),
        3.0 * summed,
        format!("{} vs {}", r.value, i.value),
    )])
}

/// Runs one suite, or every suite for `"all"`.
pub fn verify_suite(name: &str) -> LabResult<VerifyReport> {
    let entries = match name {
        "kernels" => kernels_suite()?,
        "oracle" => oracle_suite()?,
        "convergence" => convergence_suite()?,
        "bm" => bm_suite()?,
        "restriction" => restriction_suite()?,
        "all" => {
            let mut all = Vec::new();
            for s in SUITES {
                all.extend(verify_suite(s)?.entries);
            }
            all
        }
        other => {
            return Err(LabError::Unknown {
                kind: "suite",
                name: other.into(),
            })
        }
    };
    Ok(VerifyReport {
        suite: name.into(),
        entries,
    })
}
