use std::f64::consts::PI;

use residue_core::oracle::ch_monomial_pairing;
use residue_core::{Complex64, ComplexPolynomial, HoloMap, MultiIndex, RadialBump, TestForm};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};
use crate::rate::oracle_spec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Exponent `γ` of the test form `z^γ b dz`.
    pub gamma: Vec<u32>,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub member: bool,
    pub max_abs: f64,
    pub threshold: f64,
    pub n_pairings: usize,
    /// The largest pairing when it exceeds the threshold.
    pub witness: Option<Witness>,
}

/// `1e−6 · (2π)^p · max|coeff of h|`.
pub fn default_threshold(h: &ComplexPolynomial, p: usize) -> f64 {
    1e-6 * (2.0 * PI).powi(p as i32) * h.max_abs_coeff()
}

fn exponents(n: usize, max_total: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|g: Vec<u32>| {
                let used: u32 = g.iter().sum();
                (0..=max_total - used).map(move |e| {
                    let mut g = g.clone();
                    g.push(e);
                    g
                })
            })
            .collect();
    }
    out
}

/// Decides `h ∈ ⟨f⟩` by pairing `h·R^f` with every `z^γ b dz`, `|γ| ≤ degree_bound`,
/// through the closed-form oracle. `f` must be `(z_1^{a_1}, …, z_n^{a_n})`.
pub fn membership_test(
    h: &ComplexPolynomial,
    f: &HoloMap,
    degree_bound: u32,
    threshold: Option<f64>,
) -> LabResult<MembershipReport> {
    let n = f.dim();
    if f.p() != n || f.q() != n {
        return Err(LabError::OutOfScope("membership needs p = q = n".into()));
    }
    let spec =
        oracle_spec(f).ok_or_else(|| LabError::OutOfScope("f must be (z1^a1, …, zn^an)".into()))?;
    if h.dim() != n {
        return Err(residue_core::Error::DimensionMismatch {
            expected: n,
            got: h.dim(),
        }
        .into());
    }
    if !h.is_holomorphic() {
        return Err(LabError::OutOfScope("h must be holomorphic".into()));
    }
    let threshold = threshold.unwrap_or_else(|| default_threshold(h, n));
    let bump = RadialBump::new(0.5, 1.0)?;
    let mut max_abs = 0.0;
    let mut witness = None;
    let gammas = exponents(n, degree_bound);
    for g in &gammas {
        let zg = ComplexPolynomial::monomial(
            n,
            MultiIndex::new(g.clone()),
            MultiIndex::zeros(n),
            Complex64::new(1.0, 0.0),
        );
        let v = ch_monomial_pairing(&spec, &TestForm::top(h * &zg, bump))?;
        if v.norm() > max_abs {
            max_abs = v.norm();
            witness = Some(Witness {
                gamma: g.clone(),
                value: v,
            });
        }
    }
    let member = max_abs <= threshold;
    Ok(MembershipReport {
        member,
        max_abs,
        threshold,
        n_pairings: gammas.len(),
        witness: if member { None } else { witness },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f() -> HoloMap {
        HoloMap::parse(2, &["z1^2", "z2^3"], 2).unwrap()
    }

    fn h(s: &str) -> ComplexPolynomial {
        ComplexPolynomial::parse(s, 2).unwrap()
    }

    #[test]
    fn generator_is_member() {
        let r = membership_test(&h("z1^2"), &f(), 4, None).unwrap();
        assert!(r.member);
        assert_eq!(r.max_abs, 0.0);
        assert_eq!(r.n_pairings, 15);
    }

    #[test]
    fn witnesses_for_non_members() {
        let r = membership_test(&h("z1*z2^2"), &f(), 4, None).unwrap();
        assert!(!r.member);
        let w = r.witness.unwrap();
        assert_eq!(w.gamma, vec![0, 0]);
        assert!((w.value.norm() - 4.0 * PI * PI).abs() < 1e-12);
        let r = membership_test(&h("z1+z2"), &f(), 4, None).unwrap();
        assert!(!r.member && r.max_abs > r.threshold);
    }

    #[test]
    fn scope_is_checked() {
        let g = HoloMap::parse(2, &["z1^2+z2", "z2^3"], 2).unwrap();
        assert!(matches!(
            membership_test(&h("z1"), &g, 2, None),
            Err(LabError::OutOfScope(_))
        ));
        let g = HoloMap::parse(2, &["z1^2", "z2^3"], 1).unwrap();
        assert!(membership_test(&h("z1"), &g, 2, None).is_err());
    }
}
