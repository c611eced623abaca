use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::model::ComplexValue;

/// Truncated state vector over photon numbers `0..n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<ComplexValue>,
    tail_mass: f64,
    normalized: bool,
}

impl FockVector {
    pub fn from_amplitudes(amplitudes: Vec<ComplexValue>, tail_mass: f64) -> Self {
        Self {
            amplitudes,
            tail_mass,
            normalized: false,
        }
    }

    pub fn zeros(n_max: usize) -> Self {
        Self::from_amplitudes(vec![ComplexValue::new(0.0, 0.0); n_max], 0.0)
    }

    /// Number state `|n>`.
    pub fn basis(n: usize, n_max: usize) -> Self {
        let mut v = Self::zeros(n_max);
        v.amplitudes[n] = ComplexValue::new(1.0, 0.0);
        v.normalized = true;
        v
    }

    pub fn n_max(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[ComplexValue] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: usize) -> ComplexValue {
        self.amplitudes
            .get(n)
            .copied()
            .unwrap_or(ComplexValue::new(0.0, 0.0))
    }

    /// Estimated probability weight lost beyond the truncation.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub(crate) fn with_tail_mass(mut self, tail_mass: f64) -> Self {
        self.tail_mass = tail_mass;
        self
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_converged(&self, tolerance: f64) -> bool {
        self.tail_mass < tolerance
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `<self|other>`; the shorter vector is zero-padded.
    pub fn inner(&self, other: &FockVector) -> ComplexValue {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Returns the normalized vector and the squared norm it had.
    pub fn normalized(mut self) -> Result<(Self, f64)> {
        let norm_sq = self.norm_sq();
        if !(norm_sq > 0.0 && norm_sq.is_finite()) {
            return Err(Error::NonFinite("FockVector::normalized"));
        }
        let scale = 1.0 / norm_sq.sqrt();
        self.amplitudes.iter_mut().for_each(|c| *c *= scale);
        self.normalized = true;
        Ok((self, norm_sq))
    }

    pub fn scaled(&self, factor: ComplexValue) -> Self {
        Self::from_amplitudes(
            self.amplitudes.iter().map(|c| c * factor).collect(),
            self.tail_mass * factor.norm_sqr(),
        )
    }

    /// `a x + b y`, both vectors must share `n_max`.
    pub fn combine(a: ComplexValue, x: &Self, b: ComplexValue, y: &Self) -> Self {
        assert_eq!(x.n_max(), y.n_max(), "combine: dimension mismatch");
        Self::from_amplitudes(
            x.amplitudes
                .iter()
                .zip(&y.amplitudes)
                .map(|(p, q)| a * p + b * q)
                .collect(),
            x.tail_mass.max(y.tail_mass),
        )
    }

    /// Multiplies by a global phase; stays normalized if it was.
    pub fn rotated(&self, phase: f64) -> Self {
        let mut v = self.scaled(ComplexValue::from_polar(1.0, phase));
        v.normalized = self.normalized;
        v
    }

    /// `a |psi>`.
    pub fn annihilate(&self) -> Self {
        let out = self
            .amplitudes
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * (k as f64).sqrt())
            .chain(std::iter::once(ComplexValue::new(0.0, 0.0)))
            .take(self.n_max())
            .collect();
        Self::from_amplitudes(out, self.tail_mass)
    }

    /// `a^dag |psi>`, dropping the component pushed past `n_max`.
    pub fn create(&self) -> Self {
        let out = std::iter::once(ComplexValue::new(0.0, 0.0))
            .chain(
                self.amplitudes
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * ((k + 1) as f64).sqrt()),
            )
            .take(self.n_max())
            .collect();
        Self::from_amplitudes(out, self.tail_mass)
    }

    /// Probability weight in the top `guard` levels.
    pub fn guard_band_mass(&self, guard: usize) -> f64 {
        let n = self.n_max();
        self.amplitudes[n.saturating_sub(guard)..]
            .iter()
            .map(|c| c.norm_sqr())
            .sum()
    }

    /// Zero-pads (or truncates) to `n_max` levels.
    pub fn resized(&self, n_max: usize) -> Self {
        let mut amplitudes = self.amplitudes.clone();
        amplitudes.resize(n_max, ComplexValue::new(0.0, 0.0));
        Self {
            amplitudes,
            tail_mass: self.tail_mass,
            normalized: self.normalized && n_max >= self.n_max(),
        }
    }

    /// Debug dump: `n,re,im` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,re,im")?;
        for (n, c) in self.amplitudes.iter().enumerate() {
            writeln!(out, "{n},{:.17e},{:.17e}", c.re, c.im)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_action_on_number_states() {
        let v = FockVector::basis(3, 10);
        let down = v.annihilate();
        assert!((down.amplitude(2).re - 3f64.sqrt()).abs() < 1e-15);
        let up = v.create();
        assert!((up.amplitude(4).re - 2.0).abs() < 1e-15);
        assert_eq!(FockVector::basis(9, 10).create().norm_sq(), 0.0);
    }

    #[test]
    fn csv_dump() {
        let mut buf = Vec::new();
        FockVector::basis(1, 3).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "n,re,im");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("1,1.0"));
    }

    #[test]
    fn normalization() {
        let v = FockVector::from_amplitudes(
            vec![ComplexValue::new(3.0, 0.0), ComplexValue::new(0.0, 4.0)],
            0.0,
        );
        let (u, n2) = v.normalized().unwrap();
        assert_eq!(n2, 25.0);
        assert!((u.norm_sq() - 1.0).abs() < 1e-15);
        assert!(u.is_normalized());
        assert!(FockVector::zeros(4).normalized().is_err());
    }
}
