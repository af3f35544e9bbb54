//! Exact Green kernels and boundary polynomials for the five supported
//! boundary-value families.
//!
//! Each kernel is a piecewise bivariate polynomial split along the diagonal
//! s = t, stored with exact rational coefficients. Endpoint restrictions,
//! diagonal jumps and s-derivatives up to order 7 are computed symbolically
//! at construction time; the corrected quadrature operators consume those
//! restrictions as plain univariate polynomials in t.

use crate::poly::{rat, rat_i, solve_dense, Poly, Poly2, RatPoly, RatPoly2};
use num::rational::BigRational;
use num::traits::Zero;
use rand::Rng;
use thiserror::Error;

/// Highest cached s-derivative order: the p = 4 correction level needs
/// derivatives of the integrand up to order 2*4 - 1 = 7.
pub const MAX_S_DERIVATIVE: usize = 7;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("unsupported (order, family) pair: order {order}, family {family}")]
    UnsupportedFamily { order: usize, family: String },
    #[error("bad interval length {a}: must be positive{}", if *.unit_required { " and equal to 1 for this family" } else { "" })]
    BadInterval { a: f64, unit_required: bool },
    #[error("point (t, s) = ({t}, {s}) outside [0, {a}]^2")]
    OutOfDomain { t: f64, s: f64, a: f64 },
    #[error("s-derivative order {k} exceeds cached maximum {max}", max = MAX_S_DERIVATIVE)]
    DerivativeOrderTooHigh { k: usize },
    #[error("boundary-condition system is singular")]
    SingularBcSystem,
    #[error("family {family} takes {expected} boundary values, got {got}")]
    BadBoundaryValues {
        family: String,
        expected: usize,
        got: usize,
    },
}

/// The five boundary-condition families exercised by the solver.
///
/// Condition order matches the order in which values are supplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BcFamily {
    /// u(0), u'(0), u'(a) for a third-order equation on [0, a].
    ThirdA,
    /// u(0), u'(0), u(1) for a third-order equation on [0, 1].
    ThirdB,
    /// u(0), u(1), u'(1) for a third-order equation on [0, 1].
    ThirdC,
    /// u(0), u(1), u'(0), u'(1) for a fourth-order equation on [0, 1].
    FourthClamped,
    /// u(0), u'(0), u''(0), u(1), u'(1) for a fifth-order equation on [0, 1].
    Fifth,
}

impl BcFamily {
    pub fn equation_order(self) -> usize {
        match self {
            BcFamily::ThirdA | BcFamily::ThirdB | BcFamily::ThirdC => 3,
            BcFamily::FourthClamped => 4,
            BcFamily::Fifth => 5,
        }
    }

    pub fn condition_count(self) -> usize {
        self.equation_order()
    }

    pub fn tag(self) -> &'static str {
        match self {
            BcFamily::ThirdA => "third_a",
            BcFamily::ThirdB => "third_b",
            BcFamily::ThirdC => "third_c",
            BcFamily::FourthClamped => "fourth_clamped",
            BcFamily::Fifth => "fifth",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "third_a" => Some(BcFamily::ThirdA),
            "third_b" => Some(BcFamily::ThirdB),
            "third_c" => Some(BcFamily::ThirdC),
            "fourth_clamped" => Some(BcFamily::FourthClamped),
            "fifth" => Some(BcFamily::Fifth),
        _ => None,
        }
    }

    pub fn all() -> [BcFamily; 5] {
        [
            BcFamily::ThirdA,
            BcFamily::ThirdB,
            BcFamily::ThirdC,
            BcFamily::FourthClamped,
            BcFamily::Fifth,
        ]
    }

    /// Whether the family's kernel is only stated on the unit interval.
    pub fn requires_unit_interval(self) -> bool {
        !matches!(self, BcFamily::ThirdA)
    }

    /// Boundary functionals as (evaluation point, derivative order) pairs,
    /// in the order boundary values are listed.
    pub fn functionals(self, a: f64) -> Vec<(f64, usize)> {
        match self {
            BcFamily::ThirdA => vec![(0.0, 0), (0.0, 1), (a, 1)],
            BcFamily::ThirdB => vec![(0.0, 0), (0.0, 1), (a, 0)],
            BcFamily::ThirdC => vec![(0.0, 0), (a, 0), (a, 1)],
            BcFamily::FourthClamped => vec![(0.0, 0), (a, 0), (0.0, 1), (a, 1)],
            BcFamily::Fifth => vec![(0.0, 0), (0.0, 1), (0.0, 2), (a, 0), (a, 1)],
        }
    }
}

/// A boundary-condition family together with its prescribed values.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    pub family: BcFamily,
    pub values: Vec<f64>,
}

impl BoundaryConditions {
    pub fn new(family: BcFamily, values: Vec<f64>) -> Result<Self, KernelError> {
        if values.len() != family.condition_count() {
            return Err(KernelError::BadBoundaryValues {
                family: family.tag().to_string(),
                expected: family.condition_count(),
                got: values.len(),
            });
        }
        Ok(BoundaryConditions { family, values })
    }

    pub fn homogeneous(family: BcFamily) -> Self {
        BoundaryConditions {
            family,
            values: vec![0.0; family.condition_count()],
        }
    }
}

/// Which polynomial piece to read when evaluating on the diagonal s = t.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// Continuous piecewise bivariate polynomial split along s = t.
#[derive(Debug, Clone)]
pub struct PiecewisePoly2 {
    /// Piece valid on 0 <= s <= t.
    pub lower: RatPoly2,
    /// Piece valid on t <= s <= a.
    pub upper: RatPoly2,
    pub interval_length: f64,
    pub(crate) lower_f: Poly2,
    pub(crate) upper_f: Poly2,
}

impl PiecewisePoly2 {
    pub fn new(lower: RatPoly2, upper: RatPoly2, a: f64) -> Result<Self, KernelError> {
        if !(a > 0.0) {
            return Err(KernelError::BadInterval {
                a,
                unit_required: false,
            });
        }
        let p = PiecewisePoly2 {
            lower_f: lower.to_f64(),
            upper_f: upper.to_f64(),
            lower,
            upper,
            interval_length: a,
        };
        let dev = p.max_diagonal_deviation(100);
        if dev > 1e-13 * (1.0 + p.lower.max_abs_coeff()) {
            // A discontinuous split is a transcription error, not user input.
            panic!("piecewise kernel discontinuous across s = t (deviation {dev:.3e})");
        }
        Ok(p)
    }

    /// Largest |lower(t,t) - upper(t,t)| over `samples` uniform t.
    pub fn max_diagonal_deviation(&self, samples: usize) -> f64 {
        let a = self.interval_length;
        (0..=samples)
            .map(|i| {
                let t = a * i as f64 / samples as f64;
                (self.lower_f.eval(t, t) - self.upper_f.eval(t, t)).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn eval(&self, t: f64, s: f64) -> Result<f64, KernelError> {
        let a = self.interval_length;
        if !(0.0..=a).contains(&t) || !(0.0..=a).contains(&s) {
            return Err(KernelError::OutOfDomain { t, s, a });
        }
        Ok(if s <= t {
            self.lower_f.eval(t, s)
        } else {
            self.upper_f.eval(t, s)
        })
    }
}

/// Exact Green kernel for one supported (order, family) pair, with cached
/// symbolic s-derivative data consumed by the corrected quadrature.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    pub equation_order: usize,
    pub family: BcFamily,
    pub kernel: PiecewisePoly2,
    /// s-derivatives of (lower, upper) pieces, index = derivative order.
    sderiv: Vec<(RatPoly2, RatPoly2)>,
    sderiv_f: Vec<(Poly2, Poly2)>,
    /// Lower-piece s-derivatives restricted to s = 0, as polynomials in t.
    at_zero: Vec<Poly>,
    /// Upper-piece s-derivatives restricted to s = a, as polynomials in t.
    at_end: Vec<Poly>,
    /// Diagonal jumps upper - lower at s = t, as polynomials in t.
    jump: Vec<Poly>,
    /// True when G(0, s) vanishes identically (all supported kernels).
    pub vanishes_at_origin: bool,
}

impl GreenKernel {
    fn from_pieces(
        order: usize,
        family: BcFamily,
        pieces: PiecewisePoly2,
    ) -> GreenKernel {
        let a_rat = rat(pieces.interval_length);
        let zero = BigRational::zero();
        let mut sderiv = Vec::with_capacity(MAX_S_DERIVATIVE + 1);
        sderiv.push((pieces.lower.clone(), pieces.upper.clone()));
        for k in 1..=MAX_S_DERIVATIVE {
            let (lo, up) = &sderiv[k - 1];
            sderiv.push((lo.derivative_s(), up.derivative_s()));
        }
        let sderiv_f = sderiv
            .iter()
            .map(|(lo, up)| (lo.to_f64(), up.to_f64()))
            .collect();
        let at_zero = sderiv
            .iter()
            .map(|(lo, _)| lo.substitute_s(&zero).to_f64())
            .collect();
        let at_end = sderiv
            .iter()
            .map(|(_, up)| up.substitute_s(&a_rat).to_f64())
            .collect();
        let jump = sderiv
            .iter()
            .map(|(lo, up)| {
                up.substitute_s_equals_t()
                    .sub(&lo.substitute_s_equals_t())
                    .to_f64()
            })
            .collect();
        let vanishes_at_origin = pieces.upper.substitute_t(&zero).is_zero();
        GreenKernel {
            equation_order: order,
            family,
            kernel: pieces,
            sderiv,
            sderiv_f,
            at_zero,
            at_end,
            jump,
            vanishes_at_origin,
        }
    }

    pub fn interval_length(&self) -> f64 {
        self.kernel.interval_length
    }

    pub fn eval(&self, t: f64, s: f64) -> Result<f64, KernelError> {
        self.kernel.eval(t, s)
    }

    /// k-th s-derivative of the requested piece at (t, s).
    pub fn s_derivative(&self, k: usize, t: f64, s: f64, side: Side) -> Result<f64, KernelError> {
        if k > MAX_S_DERIVATIVE {
            return Err(KernelError::DerivativeOrderTooHigh { k });
        }
        let a = self.interval_length();
        if !(0.0..=a).contains(&t) || !(0.0..=a).contains(&s) {
            return Err(KernelError::OutOfDomain { t, s, a });
        }
        let (lo, up) = &self.sderiv_f[k];
        Ok(match side {
            Side::Lower => lo.eval(t, s),
            Side::Upper => up.eval(t, s),
        })
    }

    /// Lower-piece s-derivative restriction at s = 0 as a polynomial in t.
    pub fn boundary_factor_zero(&self, k: usize) -> &Poly {
        &self.at_zero[k]
    }

    /// Upper-piece s-derivative restriction at s = a as a polynomial in t.
    pub fn boundary_factor_end(&self, k: usize) -> &Poly {
        &self.at_end[k]
    }

    /// Diagonal jump of the k-th s-derivative as a polynomial in t.
    pub fn jump_factor(&self, k: usize) -> &Poly {
        &self.jump[k]
    }

    /// Exact integral of G(x, s) psi(s) over [0, a] for polynomial psi,
    /// via symbolic antiderivatives of each piece.
    pub fn integrate_against(&self, x: f64, psi: &RatPoly) -> f64 {
        let x_rat = rat(x);
        let a_rat = rat(self.interval_length());
        let lo_ad = self.kernel.lower.mul_poly_s(psi).antiderivative_s();
        let up_ad = self.kernel.upper.mul_poly_s(psi).antiderivative_s();
        let lo_at_x = lo_ad.substitute_t(&x_rat);
        let up_at_x = up_ad.substitute_t(&x_rat);
        let zero = BigRational::zero();
        let value = lo_at_x.eval(&x_rat) - lo_at_x.eval(&zero) + up_at_x.eval(&a_rat)
            - up_at_x.eval(&x_rat);
        crate::poly::RatPoly::new(vec![value]).eval_f64(0.0)
    }

    /// The map psi -> integral of G(t, s) psi(s) ds as an exact polynomial
    /// in t; backbone of the residual oracle.
    pub fn integral_operator_poly(&self, psi: &RatPoly) -> RatPoly {
        let a_rat = rat(self.interval_length());
        let zero = BigRational::zero();
        let lo_ad = self.kernel.lower.mul_poly_s(psi).antiderivative_s();
        let up_ad = self.kernel.upper.mul_poly_s(psi).antiderivative_s();
        // integral = [lo_ad](s = t) - [lo_ad](s = 0) + [up_ad](s = a) - [up_ad](s = t)
        lo_ad
            .substitute_s_equals_t()
            .sub(&lo_ad.substitute_s(&zero))
            .add(&up_ad.substitute_s(&a_rat))
            .sub(&up_ad.substitute_s_equals_t())
    }

    /// Integral of |G(t, s)| over s in [0, a], splitting each piece at its
    /// sign changes and integrating the antiderivative segment by segment.
    pub fn abs_integral(&self, t: f64) -> f64 {
        let lower = self.kernel.lower_f.substitute_t(t);
        let upper = self.kernel.upper_f.substitute_t(t);
        abs_poly_integral(&lower, 0.0, t) + abs_poly_integral(&upper, t, self.interval_length())
    }
}

/// Integral of |p(s)| over [lo, hi] by locating sign changes with bisection
/// and summing exact segment integrals of the antiderivative.
fn abs_poly_integral(p: &Poly, lo: f64, hi: f64) -> f64 {
    if hi <= lo || p.is_zero() {
        return 0.0;
    }
    let anti = p.antiderivative();
    let samples = 64;
    let mut breaks = vec![lo];
    let mut prev_x = lo;
    let mut prev_v = p.eval(lo);
    for i in 1..=samples {
        let x = lo + (hi - lo) * i as f64 / samples as f64;
        let v = p.eval(x);
        if prev_v == 0.0 || prev_v.signum() != v.signum() && v != 0.0 {
            let mut left = prev_x;
            let mut right = x;
            let mut fl = prev_v;
            for _ in 0..80 {
                let mid = 0.5 * (left + right);
                let fm = p.eval(mid);
                if fm == 0.0 {
                    left = mid;
                    right = mid;
                    break;
                }
                if fl.signum() == fm.signum() {
                    left = mid;
                    fl = fm;
                } else {
                    right = mid;
                }
            }
            breaks.push(0.5 * (left + right));
        }
        prev_x = x;
        prev_v = v;
    }
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += (anti.eval(w[1]) - anti.eval(w[0])).abs();
    }
    total
}

/// Degree m-1 polynomial absorbing the inhomogeneous boundary values.
#[derive(Debug, Clone)]
pub struct BoundaryPoly {
    pub poly: Poly,
}

impl BoundaryPoly {
    pub fn eval(&self, t: f64) -> f64 {
        self.poly.eval(t)
    }
}

/// Build the closed-form Green kernel for a supported (order, family) pair.
pub fn build_green_kernel(
    order: usize,
    family: BcFamily,
    interval_length: f64,
) -> Result<GreenKernel, KernelError> {
    if order != family.equation_order() {
        return Err(KernelError::UnsupportedFamily {
            order,
            family: family.tag().to_string(),
        });
    }
    if !(interval_length > 0.0) {
        return Err(KernelError::BadInterval {
            a: interval_length,
            unit_required: false,
        });
    }
    if family.requires_unit_interval() && interval_length != 1.0 {
        return Err(KernelError::BadInterval {
            a: interval_length,
            unit_required: true,
        });
    }
    let a = rat(interval_length);
    let inv_2a = rat_i(1, 2) / &a;
    let (lower, upper) = match family {
        // lower: s t^2/(2a) - s t + s^2/2, upper: t^2 s/(2a) - t^2/2
        BcFamily::ThirdA => (
            RatPoly2::from_terms(&[
                (2, 1, inv_2a.clone()),
                (1, 1, rat_i(-1, 1)),
                (0, 2, rat_i(1, 2)),
            ]),
            RatPoly2::from_terms(&[(2, 1, inv_2a), (2, 0, rat_i(-1, 2))]),
        ),
        // lower: -s(1-t)(2t - ts - s)/2, upper: -t^2 (1-s)^2 / 2
        BcFamily::ThirdB => (
            RatPoly2::from_terms(&[
                (1, 1, rat_i(-1, 1)),
                (0, 2, rat_i(1, 2)),
                (2, 1, rat_i(1, 1)),
                (2, 2, rat_i(-1, 2)),
            ]),
            RatPoly2::from_terms(&[
                (2, 0, rat_i(-1, 2)),
                (2, 1, rat_i(1, 1)),
                (2, 2, rat_i(-1, 2)),
            ]),
        ),
        // lower: s^2 (1-t)^2 / 2, upper: t(1-s)(2s - t(1+s))/2
        BcFamily::ThirdC => (
            RatPoly2::from_terms(&[
                (0, 2, rat_i(1, 2)),
                (1, 2, rat_i(-1, 1)),
                (2, 2, rat_i(1, 2)),
            ]),
            RatPoly2::from_terms(&[
                (1, 1, rat_i(1, 1)),
                (2, 0, rat_i(-1, 2)),
                (1, 2, rat_i(-1, 1)),
                (2, 2, rat_i(1, 2)),
            ]),
        ),
        // lower: s^2 (t-1)^2 (3t - s - 2ts)/6, upper: mirror image under (t,s) swap
        BcFamily::FourthClamped => {
            let lower = RatPoly2::from_terms(&[
                (3, 2, rat_i(1, 2)),
                (2, 2, rat_i(-1, 1)),
                (1, 2, rat_i(1, 2)),
                (3, 3, rat_i(-1, 3)),
                (2, 3, rat_i(1, 2)),
                (0, 3, rat_i(-1, 6)),
            ]);
            let upper = RatPoly2::from_terms(&[
                (2, 3, rat_i(1, 2)),
                (2, 2, rat_i(-1, 1)),
                (2, 1, rat_i(1, 2)),
                (3, 3, rat_i(-1, 3)),
                (3, 2, rat_i(1, 2)),
                (3, 0, rat_i(-1, 6)),
            ]);
            (lower, upper)
        }
        // lower: s^2 (t-1)^2 (3s^2 t^2 + 2s^2 t + s^2 - 8st^2 - 4st + 6t^2)/24
        // upper: (s-1)^3 t^3 (t - 4s + 3ts)/24
        BcFamily::Fifth => {
            let lower = RatPoly2::from_terms(&[
                (4, 4, rat_i(1, 8)),
                (3, 4, rat_i(-1, 6)),
                (0, 4, rat_i(1, 24)),
                (4, 3, rat_i(-1, 3)),
                (3, 3, rat_i(1, 2)),
                (1, 3, rat_i(-1, 6)),
                (4, 2, rat_i(1, 4)),
                (3, 2, rat_i(-1, 2)),
                (2, 2, rat_i(1, 4)),
            ]);
            let upper = RatPoly2::from_terms(&[
                (4, 4, rat_i(1, 8)),
                (3, 4, rat_i(-1, 6)),
                (4, 3, rat_i(-1, 3)),
                (3, 3, rat_i(1, 2)),
                (4, 2, rat_i(1, 4)),
                (3, 2, rat_i(-1, 2)),
                (3, 1, rat_i(1, 6)),
                (4, 0, rat_i(-1, 24)),
            ]);
            (lower, upper)
        }
    };
    let pieces = PiecewisePoly2::new(lower, upper, interval_length)?;
    Ok(GreenKernel::from_pieces(order, family, pieces))
}

/// Unique degree m-1 polynomial matching the family's boundary values,
/// obtained by solving the m x m system of boundary functionals.
pub fn build_boundary_poly(
    bc: &BoundaryConditions,
    interval_length: f64,
) -> Result<BoundaryPoly, KernelError> {
    let m = bc.family.condition_count();
    let functionals = bc.family.functionals(interval_length);
    let mut matrix = vec![vec![0.0; m]; m];
    for (row, &(point, deriv)) in functionals.iter().enumerate() {
        for (col, entry) in matrix[row].iter_mut().enumerate() {
            if col >= deriv {
                let mut factor = 1.0;
                for k in 0..deriv {
                    factor *= (col - k) as f64;
                }
                *entry = factor * point.powi((col - deriv) as i32);
            }
        }
    }
    let coeffs = solve_dense(&matrix, &bc.values).ok_or(KernelError::SingularBcSystem)?;
    Ok(BoundaryPoly {
        poly: Poly::new(coeffs),
    })
}

/// One check outcome from [`validate_kernel`].
#[derive(Debug, Clone)]
pub struct KernelCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Run the construction-time validation battery for one kernel: diagonal
/// continuity, the residual oracle u^(m) = psi with random polynomial psi
/// and random boundary values, and boundary-polynomial exactness.
pub fn validate_kernel(kernel: &GreenKernel, draws: usize) -> Vec<KernelCheck> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
    let mut checks = Vec::new();
    let a = kernel.interval_length();
    let m = kernel.equation_order;

    let dev = kernel.kernel.max_diagonal_deviation(100);
    checks.push(KernelCheck {
        name: "diagonal continuity".into(),
        passed: dev <= 1e-13,
        detail: format!("max |lower - upper| on s = t: {dev:.3e}"),
    });

    let mut worst_residual = 0.0f64;
    let mut worst_bc = 0.0f64;
    for _ in 0..draws {
        let psi = RatPoly::from_f64_coeffs(&[
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ]);
        let values: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let bc = BoundaryConditions::new(kernel.family, values.clone()).unwrap();
        let g = build_boundary_poly(&bc, a).unwrap();
        let integral = kernel.integral_operator_poly(&psi).to_f64();
        let u = Poly::new({
            let n = integral.coeffs.len().max(g.poly.coeffs.len());
            (0..n)
                .map(|k| {
                    integral.coeffs.get(k).copied().unwrap_or(0.0)
                        + g.poly.coeffs.get(k).copied().unwrap_or(0.0)
                })
                .collect()
        });
        // u^(m) must reproduce psi at sampled points.
        let um = u.derivative_n(m);
        let psi_f = psi.to_f64();
        for i in 0..=50 {
            let t = a * i as f64 / 50.0;
            worst_residual = worst_residual.max((um.eval(t) - psi_f.eval(t)).abs());
        }
        // u must satisfy the family's boundary conditions.
        for (&(point, deriv), &value) in kernel
            .family
            .functionals(a)
            .iter()
            .zip(values.iter())
        {
            worst_bc = worst_bc.max((u.derivative_n(deriv).eval(point) - value).abs());
        }
    }
    checks.push(KernelCheck {
        name: "residual oracle u^(m) = psi".into(),
        passed: worst_residual <= 1e-10,
        detail: format!("max residual over {draws} draws: {worst_residual:.3e}"),
    });
    checks.push(KernelCheck {
        name: "boundary conditions of reconstructed u".into(),
        passed: worst_bc <= 1e-12,
        detail: format!("max boundary deviation: {worst_bc:.3e}"),
    });

    let mut worst_endpoint = 0.0f64;
    for i in 0..=20 {
        let t = a * i as f64 / 20.0;
        worst_endpoint = worst_endpoint
            .max(kernel.eval(t, 0.0).unwrap().abs())
            .max(kernel.eval(t, a).unwrap().abs());
    }
    checks.push(KernelCheck {
        name: "kernel vanishes at s = 0 and s = a".into(),
        passed: worst_endpoint <= 1e-13,
        detail: format!("max endpoint magnitude: {worst_endpoint:.3e}"),
    });

    if kernel.family == BcFamily::FourthClamped {
        let mut worst_sym = 0.0f64;
        for i in 0..=20 {
            for j in 0..=20 {
                let (t, s) = (i as f64 / 20.0, j as f64 / 20.0);
                worst_sym = worst_sym
                    .max((kernel.eval(t, s).unwrap() - kernel.eval(s, t).unwrap()).abs());
            }
        }
        checks.push(KernelCheck {
            name: "clamped kernel symmetry G(t,s) = G(s,t)".into(),
            passed: worst_sym <= 1e-13,
            detail: format!("max asymmetry: {worst_sym:.3e}"),
        });
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn third_a() -> GreenKernel {
        build_green_kernel(3, BcFamily::ThirdA, 1.0).unwrap()
    }

    #[test]
    fn third_a_point_value() {
        // Lower piece at (0.5, 0.25): s/2 (t^2 - 2t + s) = -0.0625.
        let k = third_a();
        assert_eq!(k.eval(0.5, 0.25).unwrap(), -0.0625);
    }

    #[test]
    fn third_a_vanishes_at_s_endpoints() {
        let k = third_a();
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert_eq!(k.eval(t, 0.0).unwrap(), 0.0);
            assert_eq!(k.eval(t, 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn clamped_kernel_is_symmetric() {
        let k = build_green_kernel(4, BcFamily::FourthClamped, 1.0).unwrap();
        let g1 = k.eval(0.3, 0.7).unwrap();
        let g2 = k.eval(0.7, 0.3).unwrap();
        assert!((g1 - g2).abs() < 1e-13);
    }

    #[test]
    fn third_a_integral_of_one_matches_analytic_solution() {
        // u''' = 1 with u(0) = u'(0) = u'(1) = 0 solves to t^3/6 - t^2/4.
        let k = third_a();
        let one = RatPoly::from_f64_coeffs(&[1.0]);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let expected = t * t * t / 6.0 - t * t / 4.0;
            assert!((k.integrate_against(t, &one) - expected).abs() < 1e-14);
        }
        assert!((k.integrate_against(1.0, &one) - (-1.0 / 12.0)).abs() < 1e-15);
    }

    #[test]
    fn third_a_first_derivative_pieces() {
        let k = third_a();
        // lower: t^2/2 - t + s at (0.5, 0.2)
        let lo = k.s_derivative(1, 0.5, 0.2, Side::Lower).unwrap();
        assert!((lo - -0.175).abs() < 1e-15);
        // upper: t^2/2 at (0.5, 0.8)
        let up = k.s_derivative(1, 0.5, 0.8, Side::Upper).unwrap();
        assert!((up - 0.125).abs() < 1e-15);
    }

    #[test]
    fn third_a_second_derivative_jump() {
        let k = third_a();
        for t in [0.1, 0.5, 0.9] {
            assert_eq!(k.s_derivative(2, t, t, Side::Lower).unwrap(), 1.0);
            assert_eq!(k.s_derivative(2, t, t, Side::Upper).unwrap(), 0.0);
        }
        // First-derivative jump is identically zero, second jumps by -1.
        assert!(k.jump_factor(1).is_zero());
        assert_eq!(k.jump_factor(2).eval(0.37), -1.0);
    }

    #[test]
    fn derivative_order_and_domain_errors() {
        let k = third_a();
        assert!(matches!(
            k.s_derivative(8, 0.5, 0.5, Side::Lower),
            Err(KernelError::DerivativeOrderTooHigh { k: 8 })
        ));
        assert!(matches!(
            k.eval(1.5, 0.5),
            Err(KernelError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn unsupported_pairs_and_bad_intervals_rejected() {
        assert!(matches!(
            build_green_kernel(4, BcFamily::ThirdA, 1.0),
            Err(KernelError::UnsupportedFamily { .. })
        ));
        assert!(matches!(
            build_green_kernel(3, BcFamily::ThirdB, 2.0),
            Err(KernelError::BadInterval { .. })
        ));
        assert!(matches!(
            build_green_kernel(3, BcFamily::ThirdA, -1.0),
            Err(KernelError::BadInterval { .. })
        ));
        // Third_A is the one family parameterized by a.
        assert!(build_green_kernel(3, BcFamily::ThirdA, 2.0).is_ok());
    }

    #[test]
    fn boundary_poly_third_a_example() {
        // g(0) = 1, g'(0) = 1, g'(1) = e  ->  1 + t + (e-1)/2 t^2
        let bc =
            BoundaryConditions::new(BcFamily::ThirdA, vec![1.0, 1.0, std::f64::consts::E])
                .unwrap();
        let g = build_boundary_poly(&bc, 1.0).unwrap();
        assert!((g.poly.coeffs[0] - 1.0).abs() < 1e-14);
        assert!((g.poly.coeffs[1] - 1.0).abs() < 1e-14);
        assert!((g.poly.coeffs[2] - (std::f64::consts::E - 1.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_poly_homogeneous_is_zero() {
        let bc = BoundaryConditions::homogeneous(BcFamily::FourthClamped);
        let g = build_boundary_poly(&bc, 1.0).unwrap();
        assert!(g.poly.is_zero());
    }

    #[test]
    fn boundary_poly_fifth_example() {
        // g(0) = g'(0) = g''(0) = 0, g(1) = 1, g'(1) = 6
        let bc = BoundaryConditions::new(BcFamily::Fifth, vec![0.0, 0.0, 0.0, 1.0, 6.0]).unwrap();
        let g = build_boundary_poly(&bc, 1.0).unwrap();
        assert!(g.eval(0.0).abs() < 1e-14);
        assert!(g.poly.derivative().eval(0.0).abs() < 1e-14);
        assert!(g.poly.derivative_n(2).eval(0.0).abs() < 1e-14);
        assert!((g.eval(1.0) - 1.0).abs() < 1e-13);
        assert!((g.poly.derivative().eval(1.0) - 6.0).abs() < 1e-13);
        assert_eq!(g.poly.degree(), 4);
    }

    #[test]
    fn bc_value_count_enforced() {
        assert!(matches!(
            BoundaryConditions::new(BcFamily::Fifth, vec![1.0, 2.0]),
            Err(KernelError::BadBoundaryValues { expected: 5, got: 2, .. })
        ));
    }

    #[test]
    fn residual_oracle_all_families() {
        for family in BcFamily::all() {
            let kernel = build_green_kernel(family.equation_order(), family, 1.0).unwrap();
            for check in validate_kernel(&kernel, 20) {
                assert!(
                    check.passed,
                    "{} failed for {}: {}",
                    check.name,
                    family.tag(),
                    check.detail
                );
            }
        }
    }

    #[test]
    fn abs_integral_matches_closed_forms() {
        // For kernels sign-definite in s the |G| integral equals |u(t)| where
        // u solves u^(m) = 1 with homogeneous conditions.
        let k3 = third_a();
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            let expected = (t * t * t / 6.0 - t * t / 4.0).abs();
            assert!((k3.abs_integral(t) - expected).abs() < 1e-12);
        }
        let k4 = build_green_kernel(4, BcFamily::FourthClamped, 1.0).unwrap();
        let t = 0.5;
        let expected = t * t * (1.0 - t) * (1.0 - t) / 24.0;
        assert!((k4.abs_integral(t) - expected).abs() < 1e-12);
    }

    #[test]
    fn fifth_kernel_smoothness_structure() {
        let k = build_green_kernel(5, BcFamily::Fifth, 1.0).unwrap();
        // C^3 in s across the diagonal; the fourth derivative jumps by -1.
        for j in 0..=3 {
            assert!(k.jump_factor(j).is_zero(), "jump at order {j}");
        }
        assert_eq!(k.jump_factor(4).eval(0.3), -1.0);
        // Triple zero at s = 1, double zero at s = 0.
        assert!(k.boundary_factor_end(0).is_zero());
        assert!(k.boundary_factor_end(1).is_zero());
        assert!(k.boundary_factor_end(2).is_zero());
        assert!(!k.boundary_factor_end(3).is_zero());
        assert!(k.boundary_factor_zero(0).is_zero());
        assert!(k.boundary_factor_zero(1).is_zero());
        assert!(!k.boundary_factor_zero(2).is_zero());
    }

    #[test]
    fn fourth_kernel_correction_factors_vanish() {
        // Kernel and first s-derivative vanish at both endpoints and the
        // first s-derivative is continuous across the diagonal, which is why
        // the fourth-order h^2 correction is identically zero.
        let k = build_green_kernel(4, BcFamily::FourthClamped, 1.0).unwrap();
        assert!(k.boundary_factor_zero(0).is_zero());
        assert!(k.boundary_factor_zero(1).is_zero());
        assert!(k.boundary_factor_end(0).is_zero());
        assert!(k.boundary_factor_end(1).is_zero());
        assert!(k.jump_factor(1).is_zero());
        assert_eq!(k.jump_factor(3).eval(1.0), 1.0);
    }
}
