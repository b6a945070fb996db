//! Regularizing kernels `χ: [0, ∞] → [0, 1]` and ε-path schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::RadialBump;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Kernel {
    /// `χ(t) = (t/(1+t))^order`.
    Rational { order: u32 },
    /// Smooth increasing step, 0 on `[0, a]` and 1 on `[b, ∞)`.
    #[serde(rename = "smoothstep")]
    SmoothStep { a: f64, b: f64 },
    /// Indicator of `[1, ∞)`.
    Sharp,
}

impl Kernel {
    pub fn rational(order: u32) -> Self {
        Kernel::Rational { order }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rational { order } if order == 0 => Err(Error::InvalidArgument(
                "rational kernel needs order >= 1".into(),
            )),
            Kernel::SmoothStep { a, b } => RadialBump::new(a, b).map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, Kernel::Sharp)
    }

    /// Order of vanishing at 0; `None` means infinite.
    pub fn vanishing_order(&self) -> Option<u32> {
        match *self {
            Kernel::Rational { order } => Some(order),
            _ => None,
        }
    }

    pub fn value_at_infinity(&self) -> f64 {
        1.0
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if t.is_infinite() {
            return self.value_at_infinity();
        }
        match *self {
            Kernel::Rational { order } => (t / (1.0 + t)).powi(order as i32),
            Kernel::SmoothStep { a, b } => 1.0 - RadialBump { r0: a, r1: b }.eval(t),
            Kernel::Sharp => {
                if t >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        match self {
            Kernel::Sharp => Err(Error::NotDifferentiable),
            _ => Ok(self.derivative_unchecked(t)),
        }
    }

    /// `χ'(t)`; returns 0 for the sharp kernel.
    #[inline]
    pub fn derivative_unchecked(&self, t: f64) -> f64 {
        if t.is_infinite() {
            return 0.0;
        }
        match *self {
            Kernel::Rational { order } => {
                let l = order as i32;
                l as f64 * t.powi(l - 1) / (1.0 + t).powi(l + 1)
            }
            Kernel::SmoothStep { a, b } => -RadialBump { r0: a, r1: b }.derivative(t),
            Kernel::Sharp => 0.0,
        }
    }

    /// `χ̃(t) = tχ'(t) − ℓχ(t)`.
    pub fn tilde(&self, ell: u32) -> Result<TildeKernel> {
        if !self.is_smooth() {
            return Err(Error::NotDifferentiable);
        }
        if let Some(order) = self.vanishing_order() {
            if ell > order {
                return Err(Error::VanishingOrder {
                    order: order.to_string(),
                    requested: ell,
                });
            }
        }
        Ok(TildeKernel { base: *self, ell })
    }
}

/// `χ̃(t) = tχ'(t) − ℓχ(t)`, which vanishes to order `ℓ + 1` at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TildeKernel {
    pub base: Kernel,
    pub ell: u32,
}

impl TildeKernel {
    pub fn eval(&self, t: f64) -> f64 {
        let l = self.ell as f64;
        if t.is_infinite() {
            return self.value_at_infinity();
        }
        match self.base {
            // closed form avoids cancellation for large t
            Kernel::Rational { order } => {
                let k = order as f64;
                let r = t / (1.0 + t);
                r.powi(order as i32) * (k / (1.0 + t) - l)
            }
            _ => t * self.base.derivative_unchecked(t) - l * self.base.eval(t),
        }
    }

    pub fn value_at_infinity(&self) -> f64 {
        -(self.ell as f64) * self.base.value_at_infinity()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ScheduleKind {
    /// `ε_j(δ) = exp(−steepness · (1/δ)^{rank_j})`; `order[r]` is the
    /// 0-based index of the parameter with rank `r + 1`.
    Admissible {
        order: Vec<usize>,
        #[serde(default = "one")]
        steepness: f64,
    },
    /// `ε_j(δ) = δ^{s_j}`.
    Passare { s: Vec<f64> },
    /// `ε_j(δ) = δ` for `q` parameters.
    Diagonal { q: usize },
    /// Explicit ε vectors.
    Custom { points: Vec<Vec<f64>> },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    #[serde(default)]
    pub delta_grid: Vec<f64>,
}

impl EpsilonSchedule {
    pub fn diagonal(q: usize, delta_grid: Vec<f64>) -> Self {
        EpsilonSchedule {
            kind: ScheduleKind::Diagonal { q },
            delta_grid,
        }
    }

    pub fn passare(s: Vec<f64>, delta_grid: Vec<f64>) -> Self {
        EpsilonSchedule {
            kind: ScheduleKind::Passare { s },
            delta_grid,
        }
    }

    pub fn admissible(order: Vec<usize>, delta_grid: Vec<f64>) -> Self {
        EpsilonSchedule {
            kind: ScheduleKind::Admissible {
                order,
                steepness: 1.0,
            },
            delta_grid,
        }
    }

    pub fn custom(points: Vec<Vec<f64>>) -> Self {
        EpsilonSchedule {
            kind: ScheduleKind::Custom { points },
            delta_grid: Vec::new(),
        }
    }

    /// Number of ε parameters.
    pub fn q(&self) -> usize {
        match &self.kind {
            ScheduleKind::Admissible { order, .. } => order.len(),
            ScheduleKind::Passare { s } => s.len(),
            ScheduleKind::Diagonal { q } => *q,
            ScheduleKind::Custom { points } => points.first().map(Vec::len).unwrap_or(0),
        }
    }

    /// Natural log of each ε component at `delta`; available without underflow.
    pub fn log_point(&self, delta: f64) -> Result<Vec<f64>> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid value {delta} must be positive"
            )));
        }
        match &self.kind {
            ScheduleKind::Admissible { order, steepness } => {
                let mut ranks = vec![0usize; order.len()];
                let mut seen = vec![false; order.len()];
                for (r, &j) in order.iter().enumerate() {
                    if j >= order.len() || seen[j] {
                        return Err(Error::InvalidArgument(format!(
                            "{order:?} is not a permutation"
                        )));
                    }
                    seen[j] = true;
                    ranks[j] = r + 1;
                }
                Ok(ranks
                    .iter()
                    .map(|&r| -steepness * (1.0 / delta).powi(r as i32))
                    .collect())
            }
            ScheduleKind::Passare { s } => {
                if s.iter().any(|&x| !(x > 0.0)) {
                    return Err(Error::InvalidArgument(
                        "sector exponents must be positive".into(),
                    ));
                }
                Ok(s.iter().map(|&x| x * delta.ln()).collect())
            }
            ScheduleKind::Diagonal { q } => Ok(vec![delta.ln(); *q]),
            ScheduleKind::Custom { .. } => Err(Error::InvalidArgument(
                "custom schedules have no δ grid".into(),
            )),
        }
    }

    /// `ε(δ)`; exact powers of δ for diagonal and sector schedules.
    pub fn point(&self, delta: f64) -> Result<Vec<f64>> {
        let logs = self.log_point(delta)?;
        Ok(match &self.kind {
            ScheduleKind::Diagonal { q } => vec![delta; *q],
            ScheduleKind::Passare { s } => s.iter().map(|&x| delta.powf(x)).collect(),
            _ => logs.into_iter().map(f64::exp).collect(),
        })
    }

    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        let pts: Vec<Vec<f64>> = match &self.kind {
            ScheduleKind::Custom { points } => {
                let q = self.q();
                if points.iter().any(|p| p.len() != q) {
                    return Err(Error::InvalidArgument(
                        "custom ε vectors differ in length".into(),
                    ));
                }
                points.clone()
            }
            _ => {
                for w in self.delta_grid.windows(2) {
                    if !(w[1] < w[0]) {
                        return Err(Error::InvalidArgument(
                            "δ grid must be strictly decreasing".into(),
                        ));
                    }
                }
                self.delta_grid
                    .iter()
                    .map(|&d| self.point(d))
                    .collect::<Result<_>>()?
            }
        };
        for p in &pts {
            if p.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "ε vector {p:?} is not strictly positive (underflow?)"
                )));
            }
        }
        for w in pts.windows(2) {
            if w[0].iter().zip(&w[1]).any(|(a, b)| !(b < a)) {
                return Err(Error::InvalidArgument(
                    "ε vectors must decrease componentwise".into(),
                ));
            }
        }
        Ok(pts)
    }
}
