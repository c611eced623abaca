use std::fmt;

use crate::model::ComplexValue;

use super::vector::FockVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorLabel {
    Displacement(ComplexValue),
    Position,
    Momentum,
    Annihilation,
    Creation,
    Product,
}

impl fmt::Display for OperatorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorLabel::Displacement(mu) => write!(f, "D({}{:+}i)", mu.re, mu.im),
            OperatorLabel::Position => f.write_str("X"),
            OperatorLabel::Momentum => f.write_str("P"),
            OperatorLabel::Annihilation => f.write_str("a"),
            OperatorLabel::Creation => f.write_str("a^dag"),
            OperatorLabel::Product => f.write_str("product"),
        }
    }
}

/// Dense `n_max x n_max` operator, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    dim: usize,
    data: Vec<ComplexValue>,
    label: OperatorLabel,
}

impl FockOperator {
    fn zeros(dim: usize, label: OperatorLabel) -> Self {
        Self {
            dim,
            data: vec![ComplexValue::new(0.0, 0.0); dim * dim],
            label,
        }
    }

    /// Exact matrix elements `<m|D(mu)|n>` for `m, n < dim`.
    ///
    /// Along each diagonal `k = m - n` the normalized elements
    /// `e_n = sqrt(n!/(n+k)!) mu^k e^{-|mu|^2/2} L_n^{(k)}(|mu|^2)` obey the
    /// Laguerre recurrence
    /// `sqrt((n+1)(n+k+1)) e_{n+1} = (2n+1+k-x) e_n - sqrt(n(n+k)) e_{n-1}`,
    /// started from the coherent amplitude `e_0 = mu^k e^{-x/2} / sqrt(k!)`.
    /// Running it upward in `n` follows the dominant solution, so it stays
    /// stable. The upper triangle uses `<n|D(mu)|n+k> = conj(<n+k|D(-mu)|n>)`.
    pub fn displacement(mu: ComplexValue, dim: usize) -> Self {
        let mut op = Self::zeros(dim, OperatorLabel::Displacement(mu));
        let x = mu.norm_sqr();
        let mut lower_start = ComplexValue::new((-x / 2.0).exp(), 0.0);
        let mut upper_start = lower_start;
        for k in 0..dim {
            if k > 0 {
                let s = 1.0 / (k as f64).sqrt();
                lower_start *= mu * s;
                upper_start *= -mu * s;
            }
            let lower = diagonal(lower_start, k, x, dim - k);
            if k == 0 {
                for (n, e) in lower.iter().enumerate() {
                    op.data[n * dim + n] = *e;
                }
                continue;
            }
            let upper = diagonal(upper_start, k, x, dim - k);
            for n in 0..dim - k {
                op.data[(n + k) * dim + n] = lower[n];
                op.data[n * dim + n + k] = upper[n].conj();
            }
        }
        op
    }

    pub fn annihilation(dim: usize) -> Self {
        let mut op = Self::zeros(dim, OperatorLabel::Annihilation);
        for n in 1..dim {
            op.data[(n - 1) * dim + n] = ComplexValue::new((n as f64).sqrt(), 0.0);
        }
        op
    }

    pub fn creation(dim: usize) -> Self {
        let mut op = Self::annihilation(dim).adjoint();
        op.label = OperatorLabel::Creation;
        op
    }

    /// `X = sigma (a + a^dag)`.
    pub fn position(dim: usize, sigma: f64) -> Self {
        let a = Self::annihilation(dim);
        let mut op = Self::zeros(dim, OperatorLabel::Position);
        for (i, out) in op.data.iter_mut().enumerate() {
            let (m, n) = (i / dim, i % dim);
            *out = sigma * (a.get(m, n) + a.get(n, m).conj());
        }
        op
    }

    /// `P = i/(2 sigma) (a^dag - a)`.
    pub fn momentum(dim: usize, sigma: f64) -> Self {
        let a = Self::annihilation(dim);
        let mut op = Self::zeros(dim, OperatorLabel::Momentum);
        let k = ComplexValue::new(0.0, 1.0 / (2.0 * sigma));
        for (i, out) in op.data.iter_mut().enumerate() {
            let (m, n) = (i / dim, i % dim);
            *out = k * (a.get(n, m).conj() - a.get(m, n));
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> OperatorLabel {
        self.label
    }

    pub fn get(&self, row: usize, col: usize) -> ComplexValue {
        self.data[row * self.dim + col]
    }

    pub fn adjoint(&self) -> Self {
        let mut op = Self::zeros(self.dim, self.label);
        for m in 0..self.dim {
            for n in 0..self.dim {
                op.data[n * self.dim + m] = self.get(m, n).conj();
            }
        }
        op
    }

    /// `self * rhs`.
    pub fn compose(&self, rhs: &FockOperator) -> Self {
        assert_eq!(self.dim, rhs.dim, "compose: dimension mismatch");
        let dim = self.dim;
        let mut op = Self::zeros(dim, OperatorLabel::Product);
        for m in 0..dim {
            let row = &self.data[m * dim..(m + 1) * dim];
            let out = &mut op.data[m * dim..(m + 1) * dim];
            for (k, &lhs) in row.iter().enumerate() {
                if lhs.norm_sqr() == 0.0 {
                    continue;
                }
                let rrow = &rhs.data[k * dim..(k + 1) * dim];
                for (o, &r) in out.iter_mut().zip(rrow) {
                    *o += lhs * r;
                }
            }
        }
        op
    }

    /// Matrix-vector product; the input is zero-padded or cut to `dim`.
    pub fn apply(&self, v: &FockVector) -> FockVector {
        let dim = self.dim;
        let amps = v.amplitudes();
        let len = amps.len().min(dim);
        let out = (0..dim)
            .map(|m| {
                self.data[m * dim..m * dim + len]
                    .iter()
                    .zip(&amps[..len])
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        FockVector::from_amplitudes(out, v.tail_mass())
    }

    /// `self^dag |v>` without materializing the adjoint.
    pub fn apply_adjoint(&self, v: &FockVector) -> FockVector {
        let dim = self.dim;
        let amps = v.amplitudes();
        let len = amps.len().min(dim);
        let mut out = vec![ComplexValue::new(0.0, 0.0); dim];
        for (m, &c) in amps[..len].iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let row = &self.data[m * dim..(m + 1) * dim];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * c;
            }
        }
        FockVector::from_amplitudes(out, v.tail_mass())
    }

    /// `max |M - M^dag|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 0..self.dim {
            for n in m..self.dim {
                worst = worst.max((self.get(m, n) - self.get(n, m).conj()).norm());
            }
        }
        worst
    }

    /// `max |M_ij - delta_ij|` over `i, j < upto`.
    pub fn identity_defect(&self, upto: usize) -> f64 {
        let upto = upto.min(self.dim);
        let mut worst: f64 = 0.0;
        for m in 0..upto {
            for n in 0..upto {
                let target = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((self.get(m, n) - target).norm());
            }
        }
        worst
    }

    /// Deviation of `D^dag D` from the identity on the safe subspace.
    pub fn unitarity_defect(&self, safe_dim: usize) -> f64 {
        self.adjoint().compose(self).identity_defect(safe_dim)
    }
}

/// `e_0..e_len` along diagonal `k` for `|mu|^2 = x`.
fn diagonal(first: ComplexValue, k: usize, x: f64, len: usize) -> Vec<ComplexValue> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    let kf = k as f64;
    out.push(first);
    if len > 1 {
        out.push(first * (1.0 + kf - x) / (kf + 1.0).sqrt());
    }
    for n in 1..len.saturating_sub(1) {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + kf - x) * out[n] - (nf * (nf + kf)).sqrt() * out[n - 1])
            / ((nf + 1.0) * (nf + kf + 1.0)).sqrt();
        out.push(next);
    }
    out
}

/// Number of low levels `j` whose displaced images `D(mu)|j>` stay inside
/// `dim - guard` levels: `(sqrt(j) + |mu| + 6)^2 <= dim - guard`.
pub fn safe_subspace_dim(mu: ComplexValue, dim: usize, guard: usize) -> usize {
    let room = dim.saturating_sub(guard) as f64;
    let reach = room.sqrt() - mu.norm() - 6.0;
    if reach <= 0.0 {
        0
    } else {
        ((reach * reach).floor() as usize + 1).min(dim.saturating_sub(guard))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> ComplexValue {
        ComplexValue::new(re, im)
    }

    /// Generalized Laguerre `L_n^{(k)}(x)` by the upward recurrence in `n`.
    fn laguerre(n: usize, k: f64, x: f64) -> f64 {
        let (mut l0, mut l1) = (1.0, 1.0 + k - x);
        if n == 0 {
            return l0;
        }
        for j in 1..n {
            let jf = j as f64;
            let l2 = ((2.0 * jf + 1.0 + k - x) * l1 - (jf + k) * l0) / (jf + 1.0);
            l0 = l1;
            l1 = l2;
        }
        l1
    }

    fn ln_factorial(n: usize) -> f64 {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }

    /// Closed form for `<m|D(mu)|n>`, m >= n; conjugate symmetry otherwise.
    fn laguerre_element(mu: ComplexValue, m: usize, n: usize) -> ComplexValue {
        if m >= n {
            let k = m - n;
            let x = mu.norm_sqr();
            let scale = (0.5 * (ln_factorial(n) - ln_factorial(m)) - x / 2.0).exp();
            scale * mu.powu(k as u32) * laguerre(n, k as f64, x)
        } else {
            // <m|D(mu)|n> = conj(<n|D(-mu)|m>)
            laguerre_element(-mu, n, m).conj()
        }
    }

    #[test]
    fn identity_at_zero() {
        let d = FockOperator::displacement(c(0.0, 0.0), 12);
        assert_eq!(d.identity_defect(12), 0.0);
    }

    #[test]
    fn vacuum_column_is_coherent_state() {
        let mu = c(0.7, -1.2);
        let d = FockOperator::displacement(mu, 30);
        let mut expected = (-mu.norm_sqr() / 2.0).exp() * c(1.0, 0.0);
        for n in 0..30 {
            assert!((d.get(n, 0) - expected).norm() < 1e-15);
            expected *= mu / ((n + 1) as f64).sqrt();
        }
    }

    #[test]
    fn matches_laguerre_closed_form() {
        for &mu in &[c(0.3, 0.0), c(-1.5, 0.4), c(2.0, 2.0), c(0.0, -3.1)] {
            let d = FockOperator::displacement(mu, 40);
            for m in 0..40 {
                for n in 0..40 {
                    let want = laguerre_element(mu, m, n);
                    assert!((d.get(m, n) - want).norm() < 1e-12, "mu={mu} m={m} n={n}");
                }
            }
        }
    }

    #[test]
    fn inverse_on_safe_subspace() {
        for &(mu, dim) in &[
            (c(0.5, 0.0), 64),
            (c(1.5, -0.3), 160),
            (c(5.0, 0.0), 300),
            (c(10.0, 0.0), 400),
        ] {
            let safe = safe_subspace_dim(mu, dim, 8);
            assert!(safe > 0);
            let prod =
                FockOperator::displacement(mu, dim).compose(&FockOperator::displacement(-mu, dim));
            assert!(
                prod.identity_defect(safe) < 1e-10,
                "mu={mu} defect {}",
                prod.identity_defect(safe)
            );
            let d = FockOperator::displacement(mu, dim);
            assert!(d.unitarity_defect(safe) < 1e-10);
        }
    }

    #[test]
    fn quadratures_hermitian() {
        assert!(FockOperator::position(50, 1.3).hermiticity_defect() < 1e-12);
        assert!(FockOperator::momentum(50, 0.7).hermiticity_defect() < 1e-12);
        let a = FockOperator::annihilation(5);
        assert!((a.get(1, 2).re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(FockOperator::creation(5).get(2, 1), a.get(1, 2));
    }

    #[test]
    fn adjoint_apply_matches_dense() {
        let d = FockOperator::displacement(c(0.4, 0.9), 20);
        let v = FockVector::basis(3, 20);
        let a = d.apply_adjoint(&v);
        let b = d.adjoint().apply(&v);
        for n in 0..20 {
            assert!((a.amplitude(n) - b.amplitude(n)).norm() < 1e-16);
        }
    }
}
