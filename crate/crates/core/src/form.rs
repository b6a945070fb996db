//! Test forms, the radial cut-off that gives them compact support, and
//! holomorphic tuples.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::ComplexPolynomial;

/// Smooth radial cut-off: 1 on `[0, r0]`, 0 on `[r1, ∞)`.
///
/// The transition is `G(t1) / (G(t1) + G(t2))` with `t1 = (r1 − ρ)/(r1 − r0)`,
/// `t2 = (ρ − r0)/(r1 − r0)` and `G(t) = exp(−1/t)` for `t > 0`, else 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBump {
    pub r0: f64,
    pub r1: f64,
}

#[inline]
fn g(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

impl RadialBump {
    pub fn new(r0: f64, r1: f64) -> Result<Self> {
        if !(r0 > 0.0 && r1 > r0 && r1.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bump radii must satisfy 0 < r0 < r1, got ({r0}, {r1})"
            )));
        }
        Ok(RadialBump { r0, r1 })
    }

    #[inline]
    pub fn eval(&self, rho: f64) -> f64 {
        if rho <= self.r0 {
            return 1.0;
        }
        if rho >= self.r1 {
            return 0.0;
        }
        let width = self.r1 - self.r0;
        let a = g((self.r1 - rho) / width);
        let b = g((rho - self.r0) / width);
        a / (a + b)
    }

    /// `d/dρ` of [`RadialBump::eval`].
    pub fn derivative(&self, rho: f64) -> f64 {
        if rho <= self.r0 || rho >= self.r1 {
            return 0.0;
        }
        let width = self.r1 - self.r0;
        let s = (self.r1 - rho) / width;
        let u = (rho - self.r0) / width;
        let (gs, gu) = (g(s), g(u));
        let denom = gs + gu;
        if denom == 0.0 {
            return 0.0;
        }
        -(gs * gu) * (1.0 / (s * s) + 1.0 / (u * u)) / (width * denom * denom)
    }

    /// Evaluates at the Euclidean norm of `z`.
    #[inline]
    pub fn eval_at(&self, z: &[Complex64]) -> f64 {
        self.eval(z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
    }
}

/// `ψ · b(|z|) · dz̄_I ∧ dz_1 ∧ … ∧ dz_n`.
///
/// `anti_indices` holds the 0-based set `I` in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct TestForm {
    pub psi: ComplexPolynomial,
    pub bump: RadialBump,
    anti_indices: Vec<usize>,
}

impl TestForm {
    pub fn new(
        psi: ComplexPolynomial,
        bump: RadialBump,
        mut anti_indices: Vec<usize>,
    ) -> Result<Self> {
        anti_indices.sort_unstable();
        anti_indices.dedup();
        if let Some(&k) = anti_indices.iter().find(|&&k| k >= psi.dim()) {
            return Err(Error::IndexOutOfRange {
                index: k,
                dim: psi.dim(),
            });
        }
        Ok(TestForm {
            psi,
            bump,
            anti_indices,
        })
    }

    /// Form of top holomorphic degree with no `dz̄` factors (pairs with p = n).
    pub fn top(psi: ComplexPolynomial, bump: RadialBump) -> Self {
        TestForm {
            psi,
            bump,
            anti_indices: Vec::new(),
        }
    }

    /// Form of full bidegree `(n, n)`.
    pub fn volume(psi: ComplexPolynomial, bump: RadialBump) -> Self {
        let n = psi.dim();
        TestForm {
            psi,
            bump,
            anti_indices: (0..n).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.psi.dim()
    }

    pub fn anti_indices(&self) -> &[usize] {
        &self.anti_indices
    }

    /// Indices not in `I`, ascending.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|k| !self.anti_indices.contains(k))
            .collect()
    }

    /// Sign of the permutation sorting the concatenation `(complement(I), I)`.
    pub fn wedge_sign(&self) -> f64 {
        let seq: Vec<usize> = self
            .complement()
            .into_iter()
            .chain(self.anti_indices.iter().copied())
            .collect();
        permutation_sign(&seq)
    }

    /// Coefficient `ψ(z) · b(|z|)`.
    #[inline]
    pub fn coefficient(&self, z: &[Complex64]) -> Complex64 {
        let b = self.bump.eval_at(z);
        if b == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.psi.eval_unchecked(z) * b
    }

    pub fn with_psi(&self, psi: ComplexPolynomial) -> Self {
        TestForm {
            psi,
            bump: self.bump,
            anti_indices: self.anti_indices.clone(),
        }
    }
}

/// Sign of the permutation that sorts `seq` (entries assumed distinct).
pub fn permutation_sign(seq: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `∫ g dz̄_1∧…∧dz̄_n∧dz_1∧…∧dz_n = (−1)^{n(n−1)/2} (2i)^n ∫ g dLebesgue`.
pub fn volume_constant(n: usize) -> Complex64 {
    let sign = if (n * n.saturating_sub(1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    Complex64::new(0.0, 2.0).powu(n as u32) * sign
}

/// Holomorphic tuple `f = (f_1, …, f_q)`; the first `p` components carry residues.
#[derive(Debug, Clone, PartialEq)]
pub struct HoloMap {
    dim: usize,
    components: Vec<ComplexPolynomial>,
    residue_count: usize,
    powers: Vec<u32>,
}

impl HoloMap {
    pub fn new(
        dim: usize,
        components: Vec<ComplexPolynomial>,
        residue_count: usize,
        powers: Vec<u32>,
    ) -> Result<Self> {
        if let Some(c) = components.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.dim(),
            });
        }
        if let Some(j) = components.iter().position(|c| !c.is_holomorphic()) {
            return Err(Error::InvalidArgument(format!(
                "component f{} contains conjugate variables",
                j + 1
            )));
        }
        if residue_count > components.len() {
            return Err(Error::InvalidArgument(format!(
                "residue count {residue_count} exceeds number of components {}",
                components.len()
            )));
        }
        if powers.len() != components.len() {
            return Err(Error::DimensionMismatch {
                expected: components.len(),
                got: powers.len(),
            });
        }
        if powers.contains(&0) {
            return Err(Error::InvalidArgument("powers must be positive".into()));
        }
        Ok(HoloMap {
            dim,
            components,
            residue_count,
            powers,
        })
    }

    /// All powers equal to one.
    pub fn simple(
        dim: usize,
        components: Vec<ComplexPolynomial>,
        residue_count: usize,
    ) -> Result<Self> {
        let q = components.len();
        Self::new(dim, components, residue_count, vec![1; q])
    }

    /// Parses comma-separated component strings.
    pub fn parse(dim: usize, components: &[&str], residue_count: usize) -> Result<Self> {
        let comps = components
            .iter()
            .map(|s| ComplexPolynomial::parse(s, dim))
            .collect::<Result<Vec<_>>>()?;
        Self::simple(dim, comps, residue_count)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> usize {
        self.components.len()
    }

    pub fn p(&self) -> usize {
        self.residue_count
    }

    pub fn components(&self) -> &[ComplexPolynomial] {
        &self.components
    }

    pub fn powers(&self) -> &[u32] {
        &self.powers
    }

    pub fn with_powers(&self, powers: Vec<u32>) -> Result<Self> {
        Self::new(
            self.dim,
            self.components.clone(),
            self.residue_count,
            powers,
        )
    }

    /// Swaps components `i` and `j` together with their powers.
    pub fn swapped(&self, i: usize, j: usize) -> Self {
        let mut out = self.clone();
        out.components.swap(i, j);
        out.powers.swap(i, j);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_examples() {
        let b = RadialBump::new(1.0, 2.0).unwrap();
        assert_eq!(b.eval(0.5), 1.0);
        assert_eq!(b.eval(3.0), 0.0);
        // midpoint: t1 = t2 = 1/2, so G(t1)/(G(t1)+G(t2)) = 1/2 exactly
        let mid = b.eval(1.5);
        assert!(mid > 0.0 && mid < 1.0);
        assert_eq!(mid, 0.5);
        // off-midpoint value from the formula directly
        let t1: f64 = (2.0 - 1.25) / 1.0;
        let t2: f64 = 0.25;
        let expect = (-1.0 / t1).exp() / ((-1.0 / t1).exp() + (-1.0 / t2).exp());
        assert!((b.eval(1.25) - expect).abs() < 1e-15);
        assert!(RadialBump::new(2.0, 1.0).is_err());
    }

    #[test]
    fn bump_derivative_matches_finite_difference() {
        let b = RadialBump::new(0.7, 1.9).unwrap();
        for &rho in &[0.8, 1.0, 1.3, 1.5, 1.85] {
            let h = 1e-6;
            let fd = (b.eval(rho + h) - b.eval(rho - h)) / (2.0 * h);
            assert!((fd - b.derivative(rho)).abs() < 1e-6, "rho={rho}");
        }
    }

    #[test]
    fn wedge_sign_and_volume_constant() {
        let psi = ComplexPolynomial::one(3);
        let b = RadialBump::new(1.0, 2.0).unwrap();
        // complement(I) = (0, 2), I = (1) -> (0,2,1): one inversion
        let f = TestForm::new(psi, b, vec![1]).unwrap();
        assert_eq!(f.wedge_sign(), -1.0);
        assert_eq!(volume_constant(1), Complex64::new(0.0, 2.0));
        assert_eq!(volume_constant(2), Complex64::new(4.0, 0.0));
        assert_eq!(volume_constant(3), Complex64::new(0.0, 8.0));
    }

    #[test]
    fn holomap_rejects_conjugates() {
        let f = ComplexPolynomial::parse("zb1", 1).unwrap();
        assert!(HoloMap::simple(1, vec![f], 1).is_err());
        let f = ComplexPolynomial::parse("z1", 1).unwrap();
        assert!(HoloMap::simple(1, vec![f.clone()], 2).is_err());
        assert!(HoloMap::new(1, vec![f], 1, vec![0]).is_err());
    }
}
