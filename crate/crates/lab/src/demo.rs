use rayon::prelude::*;
use residue_core::oracle::{blowup_chart_demo, BlowupDemo};
use residue_core::pairings::{pair_tube, passare_tsikh_map};
use residue_core::{
    Complex64, ComplexPolynomial, EpsilonSchedule, PairingResult, RadialBump, ScheduleKind,
    TestForm,
};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};
use crate::sweep::{SweepRow, SweepTable};

pub const DEMOS: [&str; 2] = ["blowup", "passare-tsikh"];

/// Default `φ₀(z₃)` for the blow-up demo.
pub const BLOWUP_PHI0: &str = "z1 + z1^2*zb1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub phi0: String,
    /// ε₁ tends to zero first.
    pub eps1_first: BlowupDemo,
    pub eps1_first_at: [f64; 3],
    /// Order ε₂, ε₁, ε₃.
    pub ordered: BlowupDemo,
    pub ordered_at: [f64; 3],
}

impl BlowupReport {
    pub fn reference(&self) -> Complex64 {
        self.ordered.reference
    }
}

pub fn blowup_demo(phi0: &str) -> LabResult<BlowupReport> {
    let p = ComplexPolynomial::parse(phi0, 1)?;
    let bump = RadialBump::new(0.5, 1.0)?;
    let eps1_first_at = [1e-10, 1e-3, 1e-3];
    let ordered_at = [1e-8, 1e-16, 1e-6];
    Ok(BlowupReport {
        phi0: phi0.into(),
        eps1_first: blowup_chart_demo(&p, bump, eps1_first_at)?,
        eps1_first_at,
        ordered: blowup_chart_demo(&p, bump, ordered_at)?,
        ordered_at,
    })
}

/// Test forms `ψ·b·dz₁∧dz₂` for the Passare–Tsikh comparisons.
pub const PT_BATTERY: [&str; 5] = [
    "z1^3*z2",
    "z1^3*z2*(1 + z1*zb1)",
    "z1^3*z2 + z1^4*z2^2*zb2",
    "z1^3*z2 + z1^5*zb1^2*z2",
    "z1^3*z2 + z1^3*zb2",
];

/// Admissible schedule reaching `‖ε‖∞ = 1e−12` at δ = 1/2 on the grid
/// `1, 0.8, 2/3, 4/7, 1/2`; `order[r]` is the parameter with rank `r+1`.
pub fn pt_schedule(order: Vec<usize>) -> EpsilonSchedule {
    EpsilonSchedule {
        kind: ScheduleKind::Admissible {
            order,
            steepness: 6.0 * 10f64.ln(),
        },
        delta_grid: vec![1.0, 0.8, 2.0 / 3.0, 4.0 / 7.0, 0.5],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathComparison {
    pub psi: String,
    pub forward: SweepTable,
    pub reverse: SweepTable,
    pub forward_limit: PairingResult,
    pub reverse_limit: PairingResult,
    pub gap: f64,
    pub summed_error: f64,
}

impl PathComparison {
    /// Limits differ by more than `factor` times their summed error estimates.
    pub fn separated(&self, factor: f64) -> bool {
        self.gap > factor * self.summed_error
    }
}

fn tube_table(phi: &TestForm, s: &EpsilonSchedule, m: usize) -> LabResult<SweepTable> {
    let f = passare_tsikh_map();
    let rows = s
        .points()?
        .into_par_iter()
        .map(|eps| pair_tube(&f, phi, &eps, m).map(|r| SweepRow::from_result(eps, &r)))
        .collect::<residue_core::Result<Vec<_>>>()?;
    Ok(SweepTable { q: 2, rows })
}

/// Sharp tube integrals of the Passare–Tsikh map along the admissible
/// schedules with ε₁ ≫ ε₂ and ε₂ ≫ ε₁, and their limit estimates.
pub fn pt_admissible_comparison(psi: &str, m: usize) -> LabResult<PathComparison> {
    let phi = TestForm::top(
        ComplexPolynomial::parse(psi, 2)?,
        RadialBump::new(0.5, 1.0)?,
    );
    let forward = tube_table(&phi, &pt_schedule(vec![0, 1]), m)?;
    let reverse = tube_table(&phi, &pt_schedule(vec![1, 0]), m)?;
    let none = || LabError::InsufficientData("empty schedule".into());
    let forward_limit = forward.limit_estimate().ok_or_else(none)?;
    let reverse_limit = reverse.limit_estimate().ok_or_else(none)?;
    Ok(PathComparison {
        psi: psi.into(),
        gap: (forward_limit.value - reverse_limit.value).norm(),
        summed_error: forward_limit.error_estimate + reverse_limit.error_estimate,
        forward,
        reverse,
        forward_limit,
        reverse_limit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonantRow {
    pub c: f64,
    pub t: f64,
    pub value: Complex64,
    pub err_est: f64,
}

/// Tube integrals of `ψ = z̄₂` along the resonant curves `ε = (c t², t)`.
/// The cycle meets the branch point `w = 0` when `c = 1`; nearby the
/// trapezoid rule needs many points, so `c` stays at least 0.1 away.
pub fn pt_resonant_scan(m: usize) -> LabResult<Vec<ResonantRow>> {
    let phi = TestForm::top(
        ComplexPolynomial::parse("zb2", 2)?,
        RadialBump::new(0.5, 1.0)?,
    );
    let f = passare_tsikh_map();
    let mut grid = Vec::new();
    for t in [1e-6, 1e-8, 1e-10, 1e-12] {
        for c in [0.1, 0.5, 0.9, 1.1, 2.0, 10.0] {
            grid.push((c, t));
        }
    }
    grid.into_par_iter()
        .map(|(c, t)| {
            let r = pair_tube(&f, &phi, &[c * t * t, t], m)?;
            Ok(ResonantRow {
                c,
                t,
                value: r.value,
                err_est: r.error_estimate,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassareTsikhReport {
    pub admissible: Vec<PathComparison>,
    pub resonant: Vec<ResonantRow>,
}

pub fn passare_tsikh_demo(m: usize) -> LabResult<PassareTsikhReport> {
    let admissible = PT_BATTERY
        .iter()
        .map(|psi| pt_admissible_comparison(psi, m))
        .collect::<LabResult<_>>()?;
    Ok(PassareTsikhReport {
        admissible,
        resonant: pt_resonant_scan(4096)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DemoReport {
    Blowup(BlowupReport),
    PassareTsikh(PassareTsikhReport),
}

pub fn run_demo(name: &str) -> LabResult<DemoReport> {
    match name {
        "blowup" => Ok(DemoReport::Blowup(blowup_demo(BLOWUP_PHI0)?)),
        "passare-tsikh" => Ok(DemoReport::PassareTsikh(passare_tsikh_demo(256)?)),
        other => Err(LabError::Unknown {
            kind: "demo",
            name: other.into(),
        }),
    }
}
