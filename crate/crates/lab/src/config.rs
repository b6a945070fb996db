//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "kind": "sweep",
//!   "dimension": 2,
//!   "map": ["z1^2", "z2^3"],
//!   "p": 2,
//!   "kernels": [{"family": "rational", "order": 1}],
//!   "form": {"psi": "z1*z2^2", "bump": [0.5, 1.0]},
//!   "schedule": {"type": "diagonal", "q": 2, "delta_grid": [1e-2, 1e-3, 1e-4]}
//! }
//! ```

use std::path::Path;

use residue_core::pairings::ContinuationOptions;
use residue_core::{
    ComplexPolynomial, EpsilonSchedule, HoloMap, Kernel, QuadratureOptions, RadialBump, TestForm,
};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Pair,
    Sweep,
    Rate,
    Tube,
    Membership,
    Verify,
    Demo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    pub psi: String,
    /// `[r0, r1]`: the bump is 1 on `|z| ≤ r0` and vanishes beyond `r1`.
    pub bump: [f64; 2],
    /// Indices `I` of the `dz̄_I` factor; defaults to `p..n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anti_indices: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub dimension: usize,
    pub map: Vec<String>,
    pub p: usize,
    /// Exponents `ℓ_j` of the denominators; empty means all ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub powers: Vec<u32>,
    /// One kernel per factor, or a single kernel used for all of them.
    #[serde(default = "default_kernels")]
    pub kernels: Vec<Kernel>,
    pub form: FormSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<EpsilonSchedule>,
    #[serde(default)]
    pub quadrature: QuadratureOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuation: Option<ContinuationOptions>,
    /// Trapezoid points per angle for tube integrals.
    #[serde(default = "default_tube_points")]
    pub tube_points: usize,
    /// Write measured wall time into the CSV `seconds` column; off by
    /// default so identical configs give identical files.
    #[serde(default)]
    pub record_timing: bool,
}

fn default_kernels() -> Vec<Kernel> {
    vec![Kernel::rational(1)]
}

fn default_tube_points() -> usize {
    64
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> LabResult<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> LabResult<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn holomap(&self) -> LabResult<HoloMap> {
        let comps = self
            .map
            .iter()
            .map(|s| ComplexPolynomial::parse(s, self.dimension))
            .collect::<residue_core::Result<Vec<_>>>()?;
        let powers = if self.powers.is_empty() {
            vec![1; comps.len()]
        } else {
            self.powers.clone()
        };
        Ok(HoloMap::new(self.dimension, comps, self.p, powers)?)
    }

    pub fn test_form(&self) -> LabResult<TestForm> {
        let psi = ComplexPolynomial::parse(&self.form.psi, self.dimension)?;
        let bump = RadialBump::new(self.form.bump[0], self.form.bump[1])?;
        let anti = self
            .form
            .anti_indices
            .clone()
            .unwrap_or_else(|| (self.p.min(self.dimension)..self.dimension).collect());
        Ok(TestForm::new(psi, bump, anti)?)
    }

    /// Kernels expanded to one per factor.
    pub fn kernel_list(&self) -> LabResult<Vec<Kernel>> {
        let q = self.map.len();
        match self.kernels.len() {
            1 => Ok(vec![self.kernels[0]; q]),
            k if k == q => Ok(self.kernels.clone()),
            k => Err(LabError::Config(format!("{k} kernels for {q} factors"))),
        }
    }

    pub fn schedule_points(&self) -> LabResult<Vec<Vec<f64>>> {
        match &self.schedule {
            Some(s) => Ok(s.points()?),
            None => Ok(Vec::new()),
        }
    }

    pub fn validate(&self) -> LabResult<()> {
        if self.dimension == 0 {
            return Err(LabError::Config("dimension must be positive".into()));
        }
        if self.tube_points < 4 {
            return Err(LabError::Config("tube_points must be at least 4".into()));
        }
        let f = self.holomap()?;
        self.test_form()?;
        for k in self.kernel_list()? {
            k.validate()?;
        }
        if let Some(s) = &self.schedule {
            if s.q() != f.q() && !s.points()?.is_empty() {
                return Err(LabError::Config(format!(
                    "schedule has {} parameters, map has {}",
                    s.q(),
                    f.q()
                )));
            }
        }
        self.quadrature.validate(2 * self.dimension)?;
        Ok(())
    }
}
