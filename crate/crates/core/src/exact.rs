//! Exact arithmetic in ℚ[√2] and polynomials over it.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// a + b√2 with rational a, b.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactNumber {
    pub a: BigRational,
    pub b: BigRational,
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl ExactNumber {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        ExactNumber { a, b }
    }

    pub fn from_rational(a: BigRational) -> Self {
        ExactNumber {
            a,
            b: BigRational::zero(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::from_rational(rational(num, den))
    }

    pub fn sqrt2() -> Self {
        ExactNumber {
            a: BigRational::zero(),
            b: BigRational::one(),
        }
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// a − b√2.
    pub fn conjugate(&self) -> Self {
        ExactNumber {
            a: self.a.clone(),
            b: -self.b.clone(),
        }
    }

    /// Exact sign, decided by comparing a² with 2b² when a and b differ in sign.
    pub fn signum(&self) -> Ordering {
        let sa = self.a.cmp(&BigRational::zero());
        let sb = self.b.cmp(&BigRational::zero());
        match (sa, sb) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (x, y) if x == y => x,
            (sa, _) => {
                let a2 = &self.a * &self.a;
                let b2 = &self.b * &self.b * BigRational::from_integer(BigInt::from(2));
                match a2.cmp(&b2) {
                    Ordering::Greater => sa,
                    Ordering::Less => sa.reverse(),
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn inverse(&self) -> Option<Self> {
        // 1/(a + b√2) = (a − b√2)/(a² − 2b²); the norm vanishes only at 0.
        let norm = &self.a * &self.a - &self.b * &self.b * BigRational::from_integer(BigInt::from(2));
        if norm.is_zero() {
            return None;
        }
        Some(ExactNumber {
            a: &self.a / &norm,
            b: -&self.b / &norm,
        })
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN) + self.b.to_f64().unwrap_or(f64::NAN) * std::f64::consts::SQRT_2
    }
}

impl PartialOrd for ExactNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactNumber {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl fmt::Display for ExactNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", self.a),
            (true, false) => write!(f, "{}√2", self.b),
            _ => write!(f, "{} + {}√2", self.a, self.b),
        }
    }
}

impl Add for &ExactNumber {
    type Output = ExactNumber;
    fn add(self, o: &ExactNumber) -> ExactNumber {
        ExactNumber {
            a: &self.a + &o.a,
            b: &self.b + &o.b,
        }
    }
}

impl Sub for &ExactNumber {
    type Output = ExactNumber;
    fn sub(self, o: &ExactNumber) -> ExactNumber {
        ExactNumber {
            a: &self.a - &o.a,
            b: &self.b - &o.b,
        }
    }
}

impl Mul for &ExactNumber {
    type Output = ExactNumber;
    fn mul(self, o: &ExactNumber) -> ExactNumber {
        let two = BigRational::from_integer(BigInt::from(2));
        ExactNumber {
            a: &self.a * &o.a + &self.b * &o.b * two,
            b: &self.a * &o.b + &self.b * &o.a,
        }
    }
}

impl Neg for ExactNumber {
    type Output = ExactNumber;
    fn neg(self) -> ExactNumber {
        ExactNumber {
            a: -self.a,
            b: -self.b,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for ExactNumber {
            type Output = ExactNumber;
            fn $m(self, o: ExactNumber) -> ExactNumber {
                (&self).$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Dense polynomial, coefficients in ascending degree, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactPolynomial {
    coeffs: Vec<ExactNumber>,
}

impl ExactPolynomial {
    pub fn new(mut coeffs: Vec<ExactNumber>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        ExactPolynomial { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|c| ExactNumber::from_int(*c)).collect())
    }

    pub fn constant(c: ExactNumber) -> Self {
        Self::new(vec![c])
    }

    /// The polynomial r.
    pub fn var() -> Self {
        Self::from_ints(&[0, 1])
    }

    pub fn zero() -> Self {
        Self::new(Vec::new())
    }

    pub fn coeffs(&self) -> &[ExactNumber] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with −1 standing for the zero polynomial.
    pub fn degree(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::from_ints(&[1]);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn scale(&self, c: &ExactNumber) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * &ExactNumber::from_int(k as i64))
                .collect(),
        )
    }

    pub fn eval(&self, r: &ExactNumber) -> ExactNumber {
        self.coeffs
            .iter()
            .rev()
            .fold(ExactNumber::zero(), |acc, c| &(&acc * r) + c)
    }

    pub fn eval_rational(&self, r: &BigRational) -> ExactNumber {
        self.eval(&ExactNumber::from_rational(r.clone()))
    }

    pub fn eval_f64(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.to_f64())
    }

    /// Exact lower and upper bounds of the polynomial on [lo, hi], obtained
    /// by bounding every monomial separately.
    pub fn range_bounds(&self, lo: &BigRational, hi: &BigRational) -> (ExactNumber, ExactNumber) {
        let mut low = ExactNumber::zero();
        let mut high = ExactNumber::zero();
        let mut plo = BigRational::one();
        let mut phi = BigRational::one();
        for (k, c) in self.coeffs.iter().enumerate() {
            if k > 0 {
                plo = &plo * lo;
                phi = &phi * hi;
            }
            let (mut mn, mut mx) = if plo <= phi {
                (plo.clone(), phi.clone())
            } else {
                (phi.clone(), plo.clone())
            };
            if k % 2 == 0 && k > 0 && lo.is_negative() && hi.is_positive() {
                mn = BigRational::zero();
            }
            if mn > mx {
                std::mem::swap(&mut mn, &mut mx);
            }
            let cmn = c * &ExactNumber::from_rational(mn);
            let cmx = c * &ExactNumber::from_rational(mx);
            if cmn <= cmx {
                low = &low + &cmn;
                high = &high + &cmx;
            } else {
                low = &low + &cmx;
                high = &high + &cmn;
            }
        }
        (low, high)
    }
}

impl Add for &ExactPolynomial {
    type Output = ExactPolynomial;
    fn add(self, o: &ExactPolynomial) -> ExactPolynomial {
        let n = self.coeffs.len().max(o.coeffs.len());
        let zero = ExactNumber::zero();
        ExactPolynomial::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&zero) + o.coeffs.get(k).unwrap_or(&zero))
                .collect(),
        )
    }
}

impl Sub for &ExactPolynomial {
    type Output = ExactPolynomial;
    fn sub(self, o: &ExactPolynomial) -> ExactPolynomial {
        self + &o.scale(&ExactNumber::from_int(-1))
    }
}

impl Mul for &ExactPolynomial {
    type Output = ExactPolynomial;
    fn mul(self, o: &ExactPolynomial) -> ExactPolynomial {
        if self.is_zero() || o.is_zero() {
            return ExactPolynomial::zero();
        }
        let mut out = vec![ExactNumber::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        ExactPolynomial::new(out)
    }
}

impl fmt::Display for ExactPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| match k {
                0 => format!("({c})"),
                1 => format!("({c})r"),
                _ => format!("({c})r^{k}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Outcome of an exact positivity search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Positivity {
    /// Every leaf of the bisection tree was settled; `leaves` counts them.
    Certified {
        leaves: usize,
    },
    /// The polynomial is not positive at this point.
    Refuted {
        at: BigRational,
    },
    Inconclusive {
        depth: usize,
    },
}

impl Positivity {
    pub fn is_certified(&self) -> bool {
        matches!(self, Positivity::Certified { .. })
    }
}

pub const MAX_DEPTH: usize = 64;

/// Decides p > 0 on [lo, hi] by bisection. A subinterval is settled when the
/// monomial-wise lower bound is positive, or when p′ has constant sign on it
/// and p is positive at the lower endpoint.
pub fn poly_positive_on(p: &ExactPolynomial, lo: &BigRational, hi: &BigRational) -> Positivity {
    let dp = p.derivative();
    let mut leaves = 0;
    let mut stack = vec![(lo.clone(), hi.clone(), 0usize)];
    for x in [lo, hi] {
        if !p.eval_rational(x).is_positive() {
            return Positivity::Refuted { at: x.clone() };
        }
    }
    while let Some((a, b, depth)) = stack.pop() {
        let (low, _) = p.range_bounds(&a, &b);
        if low.is_positive() {
            leaves += 1;
            continue;
        }
        let (dlow, dhigh) = dp.range_bounds(&a, &b);
        let increasing = dlow.signum() != Ordering::Less;
        let decreasing = dhigh.signum() != Ordering::Greater;
        if increasing || decreasing {
            let end = if increasing { &a } else { &b };
            if p.eval_rational(end).is_positive() {
                leaves += 1;
                continue;
            }
            return Positivity::Refuted { at: end.clone() };
        }
        if depth >= MAX_DEPTH {
            return Positivity::Inconclusive { depth };
        }
        let mid = (&a + &b) / BigRational::from_integer(BigInt::from(2));
        if !p.eval_rational(&mid).is_positive() {
            return Positivity::Refuted { at: mid };
        }
        stack.push((mid.clone(), b, depth + 1));
        stack.push((a, mid, depth + 1));
    }
    Positivity::Certified { leaves }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> ExactNumber {
        ExactNumber::ratio(n, d)
    }

    #[test]
    fn field_operations() {
        let s = ExactNumber::sqrt2();
        assert_eq!(&s * &s, ExactNumber::from_int(2));
        let x = &q(3, 2) + &(&s * &q(-1, 3));
        let inv = x.inverse().unwrap();
        assert_eq!(&x * &inv, ExactNumber::one());
        assert!(ExactNumber::zero().inverse().is_none());
        assert!((x.to_f64() - (1.5 - 2f64.sqrt() / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn signs() {
        let s = ExactNumber::sqrt2();
        // 7/5 < √2 < 3/2
        assert_eq!((&s - &q(7, 5)).signum(), Ordering::Greater);
        assert_eq!((&s - &q(3, 2)).signum(), Ordering::Less);
        assert_eq!((&q(3, 2) - &s).signum(), Ordering::Greater);
        assert_eq!((&(&s * &s) - &ExactNumber::from_int(2)).signum(), Ordering::Equal);
        assert!(q(140, 99) < s && s < q(577, 408));
    }

    #[test]
    fn polynomial_algebra() {
        let r = ExactPolynomial::var();
        let one = ExactPolynomial::from_ints(&[1]);
        let lhs = &(&r - &one) * &(&r + &one);
        assert_eq!(lhs, ExactPolynomial::from_ints(&[-1, 0, 1]));
        assert!((&lhs - &lhs).is_zero());
        assert_eq!(lhs.derivative(), ExactPolynomial::from_ints(&[0, 2]));
        assert_eq!(lhs.eval(&ExactNumber::sqrt2()), ExactNumber::one());
        assert_eq!(r.pow(3).degree(), 3);
    }

    #[test]
    fn positivity() {
        let p = ExactPolynomial::from_ints(&[-2, 0, 1]);
        assert!(poly_positive_on(&p, &rational(3, 2), &rational(2, 1)).is_certified());
        assert!(matches!(
            poly_positive_on(&p, &rational(1, 1), &rational(2, 1)),
            Positivity::Refuted { .. }
        ));
        // (r − 1/2)² + 10⁻⁶ dips close to zero inside the interval.
        let close = ExactPolynomial::new(vec![&q(1, 4) + &q(1, 1_000_000), q(-1, 1), q(1, 1)]);
        assert!(poly_positive_on(&close, &rational(0, 1), &rational(1, 1)).is_certified());
        let touching = ExactPolynomial::from_ints(&[1, -4, 4]);
        assert!(!poly_positive_on(&touching, &rational(0, 1), &rational(1, 1)).is_certified());
        let bounds = ExactPolynomial::from_ints(&[0, 0, 1]).range_bounds(&rational(-1, 1), &rational(2, 1));
        assert_eq!(bounds, (ExactNumber::zero(), ExactNumber::from_int(4)));
    }
}
