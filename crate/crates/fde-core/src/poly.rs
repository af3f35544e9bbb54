//! Polynomial machinery shared by the kernel and quadrature modules.
//!
//! Green kernels are stored as bivariate polynomials with exact rational
//! coefficients so that s-derivatives, diagonal restrictions and endpoint
//! restrictions are obtained by symbolic manipulation rather than finite
//! differencing. Hot-path evaluation uses plain `f64` copies of the same
//! coefficient arrays.

use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};
use num::BigInt;

/// Exact rational from an `f64` (every finite double is a rational number).
pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn rat_i(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Univariate polynomial with `f64` coefficients, `coeffs[k]` on `x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(&c) if c == 0.0) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn derivative_n(&self, n: usize) -> Poly {
        let mut p = self.clone();
        for _ in 0..n {
            p = p.derivative();
        }
        p
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Poly {
        let mut out = vec![0.0];
        for (k, &c) in self.coeffs.iter().enumerate() {
            out.push(c / (k as f64 + 1.0));
        }
        Poly::new(out)
    }
}

/// Univariate polynomial with exact rational coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RatPoly {
    pub coeffs: Vec<BigRational>,
}

impl RatPoly {
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        let mut p = RatPoly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        RatPoly { coeffs: Vec::new() }
    }

    pub fn from_f64_coeffs(coeffs: &[f64]) -> Self {
        RatPoly::new(coeffs.iter().map(|&c| rat(c)).collect())
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        RatPoly::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        RatPoly::new((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn derivative(&self) -> RatPoly {
        if self.coeffs.len() <= 1 {
            return RatPoly::zero();
        }
        RatPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    pub fn derivative_n(&self, n: usize) -> RatPoly {
        let mut p = self.clone();
        for _ in 0..n {
            p = p.derivative();
        }
        p
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.to_f64().eval(x)
    }

    pub fn to_f64(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c.to_f64().unwrap()).collect())
    }
}

/// Bivariate polynomial in (t, s) with exact rational coefficients;
/// `coeffs[i][j]` multiplies `t^i s^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatPoly2 {
    pub coeffs: Vec<Vec<BigRational>>,
}

impl RatPoly2 {
    pub fn zero() -> Self {
        RatPoly2 { coeffs: Vec::new() }
    }

    pub fn from_terms(terms: &[(usize, usize, BigRational)]) -> Self {
        let mut p = RatPoly2::zero();
        for (i, j, c) in terms {
            p.add_term(*i, *j, c.clone());
        }
        p.trim();
        p
    }

    fn add_term(&mut self, i: usize, j: usize, c: BigRational) {
        while self.coeffs.len() <= i {
            self.coeffs.push(Vec::new());
        }
        while self.coeffs[i].len() <= j {
            self.coeffs[i].push(BigRational::zero());
        }
        self.coeffs[i][j] += c;
    }

    fn trim(&mut self) {
        for row in &mut self.coeffs {
            while matches!(row.last(), Some(c) if c.is_zero()) {
                row.pop();
            }
        }
        while matches!(self.coeffs.last(), Some(r) if r.is_empty()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|r| r.is_empty())
    }

    pub fn scale(&self, c: &BigRational) -> RatPoly2 {
        let mut out = self.clone();
        for row in &mut out.coeffs {
            for v in row.iter_mut() {
                *v *= c;
            }
        }
        out.trim();
        out
    }

    pub fn sub(&self, other: &RatPoly2) -> RatPoly2 {
        let mut out = self.clone();
        for (i, row) in other.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                out.add_term(i, j, -c.clone());
            }
        }
        out.trim();
        out
    }

    /// Partial derivative in s.
    pub fn derivative_s(&self) -> RatPoly2 {
        let mut out = RatPoly2::zero();
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate().skip(1) {
                out.add_term(i, j - 1, c * BigRational::from_integer(BigInt::from(j)));
            }
        }
        out.trim();
        out
    }

    /// Multiply by a univariate polynomial in s.
    pub fn mul_poly_s(&self, q: &RatPoly) -> RatPoly2 {
        let mut out = RatPoly2::zero();
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                for (k, qc) in q.coeffs.iter().enumerate() {
                    if !qc.is_zero() {
                        out.add_term(i, j + k, c * qc);
                    }
                }
            }
        }
        out.trim();
        out
    }

    /// Antiderivative in s with zero constant.
    pub fn antiderivative_s(&self) -> RatPoly2 {
        let mut out = RatPoly2::zero();
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    out.add_term(i, j + 1, c / BigRational::from_integer(BigInt::from(j + 1)));
                }
            }
        }
        out.trim();
        out
    }

    /// Substitute s := value, collapsing to a univariate polynomial in t.
    pub fn substitute_s(&self, value: &BigRational) -> RatPoly {
        let coeffs = self
            .coeffs
            .iter()
            .map(|row| {
                let mut acc = BigRational::zero();
                for c in row.iter().rev() {
                    acc = acc * value + c;
                }
                acc
            })
            .collect();
        RatPoly::new(coeffs)
    }

    /// Substitute s := t, collapsing to a univariate polynomial in t.
    pub fn substitute_s_equals_t(&self) -> RatPoly {
        let mut out = RatPoly::zero();
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    let mut coeffs = vec![BigRational::zero(); i + j + 1];
                    coeffs[i + j] = c.clone();
                    out = out.add(&RatPoly::new(coeffs));
                }
            }
        }
        out
    }

    /// Substitute t := value, collapsing to a univariate polynomial in s.
    pub fn substitute_t(&self, value: &BigRational) -> RatPoly {
        let mut acc = RatPoly::zero();
        for row in self.coeffs.iter().rev() {
            let mut scaled: Vec<BigRational> =
                acc.coeffs.iter().map(|c| c * value).collect();
            for (j, c) in row.iter().enumerate() {
                while scaled.len() <= j {
                    scaled.push(BigRational::zero());
                }
                scaled[j] += c;
            }
            acc = RatPoly::new(scaled);
        }
        acc
    }

    pub fn eval(&self, t: &BigRational, s: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for row in self.coeffs.iter().rev() {
            let mut inner = BigRational::zero();
            for c in row.iter().rev() {
                inner = inner * s + c;
            }
            acc = acc * t + inner;
        }
        acc
    }

    pub fn to_f64(&self) -> Poly2 {
        Poly2 {
            coeffs: self
                .coeffs
                .iter()
                .map(|row| row.iter().map(|c| c.to_f64().unwrap()).collect())
                .collect(),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .map(|c| c.abs().to_f64().unwrap())
            .fold(0.0, f64::max)
    }
}

/// Bivariate polynomial in (t, s) with `f64` coefficients for fast evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    pub coeffs: Vec<Vec<f64>>,
}

impl Poly2 {
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        let mut acc = 0.0;
        for row in self.coeffs.iter().rev() {
            let mut inner = 0.0;
            for &c in row.iter().rev() {
                inner = inner * s + c;
            }
            acc = acc * t + inner;
        }
        acc
    }

    /// Substitute t := value, collapsing to a univariate polynomial in s.
    pub fn substitute_t(&self, value: f64) -> Poly {
        let width = self.coeffs.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = vec![0.0; width];
        for row in self.coeffs.iter().rev() {
            for (j, slot) in out.iter_mut().enumerate() {
                *slot = *slot * value + row.get(j).copied().unwrap_or(0.0);
            }
        }
        Poly::new(out)
    }
}

/// Solve the dense system `a x = b` by Gaussian elimination with partial
/// pivoting. Sized for the small boundary and stencil moment systems.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut sum = rhs[row];
        for k in row + 1..n {
            sum -= m[row][k] * x[k];
        }
        x[row] = sum / m[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_eval_and_derivative() {
        // p(x) = 1 + 2x + 3x^2
        let p = Poly::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.eval(2.0), 17.0);
        let dp = p.derivative();
        assert_eq!(dp.coeffs, vec![2.0, 6.0]);
        assert!(p.derivative_n(3).is_zero());
    }

    #[test]
    fn poly_antiderivative_inverts_derivative() {
        let p = Poly::new(vec![3.0, 0.0, 6.0]);
        let ad = p.antiderivative();
        assert_eq!(ad.derivative(), p);
    }

    #[test]
    fn rat_poly2_substitutions() {
        // q = t^2 s - 2 t s^2
        let q = RatPoly2::from_terms(&[
            (2, 1, rat_i(1, 1)),
            (1, 2, rat_i(-2, 1)),
        ]);
        // s := 1 -> t^2 - 2t
        let at_one = q.substitute_s(&rat_i(1, 1));
        assert_eq!(at_one.coeff(2), rat_i(1, 1));
        assert_eq!(at_one.coeff(1), rat_i(-2, 1));
        // s := t -> t^3 - 2 t^3 = -t^3
        let diag = q.substitute_s_equals_t();
        assert_eq!(diag.coeff(3), rat_i(-1, 1));
        // t := 2 -> 4 s - 4 s^2
        let at_t2 = q.substitute_t(&rat_i(2, 1));
        assert_eq!(at_t2.coeff(1), rat_i(4, 1));
        assert_eq!(at_t2.coeff(2), rat_i(-4, 1));
    }

    #[test]
    fn rat_poly2_calculus_roundtrip() {
        let q = RatPoly2::from_terms(&[(1, 0, rat_i(5, 2)), (0, 3, rat_i(1, 3))]);
        assert_eq!(q.antiderivative_s().derivative_s(), q);
        let ds = q.derivative_s();
        assert_eq!(ds.eval(&rat_i(1, 1), &rat_i(2, 1)), rat_i(4, 1));
    }

    #[test]
    fn bivariate_f64_matches_rational() {
        let q = RatPoly2::from_terms(&[
            (0, 0, rat_i(1, 4)),
            (2, 2, rat_i(-3, 8)),
            (1, 3, rat_i(7, 16)),
        ]);
        let qf = q.to_f64();
        let exact = q.eval(&rat(0.3), &rat(0.7)).to_f64().unwrap();
        assert!((qf.eval(0.3, 0.7) - exact).abs() < 1e-15);
    }

    #[test]
    fn dense_solve_small_system() {
        let a = vec![
            vec![2.0, 1.0, -1.0],
            vec![-3.0, -1.0, 2.0],
            vec![-2.0, 1.0, 2.0],
        ];
        let b = vec![8.0, -11.0, -3.0];
        let x = solve_dense(&a, &b).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
        assert!((x[2] - -1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_solve_rejects_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve_dense(&a, &[1.0, 2.0]).is_none());
    }
}
