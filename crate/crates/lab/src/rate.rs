use residue_core::oracle::{ch_monomial_pairing, MonomialResidueSpec};
use residue_core::Complex64;
use residue_core::{ComplexPolynomial, HoloMap, TestForm};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};
use crate::sweep::SweepTable;

/// `|value − reference| ≈ C ‖ε‖∞^ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub omega: f64,
    pub c: f64,
    pub r_squared: f64,
    pub rows_used: usize,
}

/// Least-squares fit of `log|value − reference|` against `log‖ε‖∞` over
/// rows whose deviation exceeds ten times their error estimate.
pub fn fit_rate(t: &SweepTable, reference: Complex64) -> LabResult<RateFit> {
    let pts: Vec<(f64, f64)> = t
        .rows
        .iter()
        .filter(|r| r.ok() && r.eps_max() > 0.0)
        .filter_map(|r| {
            let dev = (r.value - reference).norm();
            (dev > 10.0 * r.err_est && dev > 0.0).then(|| (r.eps_max().ln(), dev.ln()))
        })
        .collect();
    if pts.len() < 3 {
        return Err(LabError::InsufficientData(format!(
            "{} usable rows, need 3",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::InsufficientData(
            "all usable rows share one ‖ε‖∞".into(),
        ));
    }
    let omega = sxy / sxx;
    let intercept = my - omega * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - omega * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateFit {
        omega,
        c: intercept.exp(),
        r_squared,
        rows_used: pts.len(),
    })
}

/// Monomial spec when every factor is `z_j^{a_j}` on its own coordinate
/// `j` with unit denominators.
pub fn oracle_spec(f: &HoloMap) -> Option<MonomialResidueSpec> {
    let mut a = Vec::with_capacity(f.q());
    for (j, c) in f.components().iter().enumerate() {
        if f.powers()[j] != 1 || c.terms().len() != 1 {
            return None;
        }
        let t = &c.terms()[0];
        let e = t.holo[j];
        let single = (0..f.dim()).all(|k| t.anti[k] == 0 && (k == j || t.holo[k] == 0));
        if !single || e == 0 || t.coeff != Complex64::new(1.0, 0.0) {
            return None;
        }
        a.push(e);
    }
    MonomialResidueSpec::new(f.dim(), a[..f.p()].to_vec(), a[f.p()..].to_vec()).ok()
}

/// Where the reference came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSource {
    Oracle,
    Finest,
}

/// The closed-form value when the map is a monomial coordinate map,
/// otherwise the finest-ε limit estimate with its error inflated tenfold.
pub fn reference_value(
    f: &HoloMap,
    phi: &TestForm,
    t: &SweepTable,
) -> LabResult<(Complex64, f64, ReferenceSource)> {
    if let Some(spec) = oracle_spec(f) {
        return Ok((
            ch_monomial_pairing(&spec, phi)?,
            0.0,
            ReferenceSource::Oracle,
        ));
    }
    let l = t
        .limit_estimate()
        .ok_or_else(|| LabError::InsufficientData("empty sweep".into()))?;
    Ok((l.value, 10.0 * l.error_estimate, ReferenceSource::Finest))
}

/// Parses `"a+bi"`, `"a-bi"`, `"a"` or `"bi"`.
pub fn parse_complex(s: &str) -> LabResult<Complex64> {
    let p = ComplexPolynomial::parse(&s.replace(' ', ""), 0)
        .map_err(|e| LabError::Config(format!("complex number '{s}': {e}")))?;
    match p.terms() {
        [] => Ok(Complex64::new(0.0, 0.0)),
        [t] => Ok(t.coeff),
        _ => Err(LabError::Config(format!("'{s}' is not a number"))),
    }
}
