//! 2×2 matrices over Q or a quadratic field with exact entries.

use std::fmt;

use num_rational::BigRational;

use crate::numfield::{BaseField, NfElement, NumfieldError};

/// The matrix [[a, b], [c, d]].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix2 {
    pub a: NfElement,
    pub b: NfElement,
    pub c: NfElement,
    pub d: NfElement,
}

impl Matrix2 {
    pub fn new(a: NfElement, b: NfElement, c: NfElement, d: NfElement) -> Self {
        Matrix2 { a, b, c, d }
    }

    pub fn from_ints(field: &BaseField, m: [[i64; 2]; 2]) -> Self {
        Matrix2::new(
            field.int(m[0][0]),
            field.int(m[0][1]),
            field.int(m[1][0]),
            field.int(m[1][1]),
        )
    }

    pub fn identity(field: &BaseField) -> Self {
        Self::from_ints(field, [[1, 0], [0, 1]])
    }

    pub fn scalar(x: &NfElement) -> Self {
        let z = NfElement::zero(x.field());
        Matrix2::new(x.clone(), z.clone(), z, x.clone())
    }

    pub fn diag(x: &NfElement, y: &NfElement) -> Self {
        let z = NfElement::zero(x.field());
        Matrix2::new(x.clone(), z.clone(), z, y.clone())
    }

    /// Parses four entries given row by row in the exchange format.
    pub fn parse(field: &BaseField, rows: &[[String; 2]; 2]) -> Result<Self, NumfieldError> {
        let p = |s: &str| NfElement::parse(s, field.tag());
        Ok(Matrix2::new(
            p(&rows[0][0])?,
            p(&rows[0][1])?,
            p(&rows[1][0])?,
            p(&rows[1][1])?,
        ))
    }

    pub fn to_strings(&self) -> [[String; 2]; 2] {
        [
            [self.a.to_string(), self.b.to_string()],
            [self.c.to_string(), self.d.to_string()],
        ]
    }

    pub fn entries(&self) -> [&NfElement; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    /// Brings every entry into `field`.
    pub fn lift(&self, field: &BaseField) -> Result<Self, NumfieldError> {
        Ok(Matrix2::new(
            field.lift(&self.a)?,
            field.lift(&self.b)?,
            field.lift(&self.c)?,
            field.lift(&self.d)?,
        ))
    }

    pub fn det(&self) -> NfElement {
        &(&self.a * &self.d) - &(&self.b * &self.c)
    }

    pub fn trace(&self) -> NfElement {
        &self.a + &self.d
    }

    pub fn mul(&self, o: &Self) -> Self {
        Matrix2::new(
            &(&self.a * &o.a) + &(&self.b * &o.c),
            &(&self.a * &o.b) + &(&self.b * &o.d),
            &(&self.c * &o.a) + &(&self.d * &o.c),
            &(&self.c * &o.b) + &(&self.d * &o.d),
        )
    }

    pub fn scale(&self, x: &NfElement) -> Self {
        Matrix2::new(&self.a * x, &self.b * x, &self.c * x, &self.d * x)
    }

    pub fn add(&self, o: &Self) -> Self {
        Matrix2::new(
            &self.a + &o.a,
            &self.b + &o.b,
            &self.c + &o.c,
            &self.d + &o.d,
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        Matrix2::new(
            &self.a - &o.a,
            &self.b - &o.b,
            &self.c - &o.c,
            &self.d - &o.d,
        )
    }

    /// The adjugate [[d, −b], [−c, a]].
    pub fn adjugate(&self) -> Self {
        Matrix2::new(self.d.clone(), -&self.b, -&self.c, self.a.clone())
    }

    pub fn inv(&self) -> Result<Self, NumfieldError> {
        let det = self.det();
        Ok(self.adjugate().scale(&det.inv()?))
    }

    pub fn pow(&self, e: i64) -> Result<Self, NumfieldError> {
        let mut base = if e < 0 { self.inv()? } else { self.clone() };
        let mut k = e.unsigned_abs();
        let one = NfElement::one(self.a.field());
        let mut acc = Matrix2::scalar(&one);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        Ok(acc)
    }

    /// t⁻¹ · self · t.
    pub fn conj_by(&self, t: &Self) -> Result<Self, NumfieldError> {
        Ok(t.inv()?.mul(self).mul(t))
    }

    pub fn transpose(&self) -> Self {
        Matrix2::new(
            self.a.clone(),
            self.c.clone(),
            self.b.clone(),
            self.d.clone(),
        )
    }

    pub fn is_scalar(&self) -> bool {
        self.b.is_zero() && self.c.is_zero() && self.a == self.d
    }

    pub fn is_identity(&self) -> bool {
        self.is_scalar() && self.a.is_one()
    }

    pub fn is_diagonal(&self) -> bool {
        self.b.is_zero() && self.c.is_zero()
    }

    /// Image of the column vector (x, y).
    pub fn apply(&self, x: &NfElement, y: &NfElement) -> (NfElement, NfElement) {
        (
            &(&self.a * x) + &(&self.b * y),
            &(&self.c * x) + &(&self.d * y),
        )
    }

    /// The matrix whose columns are the given vectors.
    pub fn from_columns(c1: (&NfElement, &NfElement), c2: (&NfElement, &NfElement)) -> Self {
        Matrix2::new(c1.0.clone(), c2.0.clone(), c1.1.clone(), c2.1.clone())
    }

    pub fn column(&self, j: usize) -> (NfElement, NfElement) {
        if j == 0 {
            (self.a.clone(), self.c.clone())
        } else {
            (self.b.clone(), self.d.clone())
        }
    }

    /// True when every entry lies in the ring of integers.
    pub fn is_integral(&self, field: &BaseField) -> bool {
        self.entries().iter().all(|x| field.is_integral(x))
    }

    /// Least positive integer clearing all denominators.
    pub fn denominator(&self, field: &BaseField) -> num_bigint::BigInt {
        use num_integer::Integer;
        self.entries()
            .iter()
            .fold(num_bigint::BigInt::from(1), |acc, x| {
                acc.lcm(&field.split_denominator(x).1)
            })
    }

    pub fn rational_scale(&self, r: BigRational) -> Self {
        self.scale(&NfElement::from_rational(self.a.field(), r))
    }
}

impl fmt::Display for Matrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(f: &BaseField, rows: [[&str; 2]; 2]) -> Matrix2 {
        Matrix2::parse(f, &rows.map(|r| r.map(String::from))).unwrap()
    }

    #[test]
    fn inverse_and_powers() {
        let f = BaseField::from_d(-5).unwrap();
        let m = parse(&f, [["3+sqrt(-5)", "8"], ["4+2*sqrt(-5)", "13+sqrt(-5)"]]);
        assert!(m.mul(&m.inv().unwrap()).is_identity());
        assert_eq!(m.pow(3).unwrap(), m.mul(&m).mul(&m));
        assert!(m.pow(-2).unwrap().mul(&m.pow(2).unwrap()).is_identity());
        assert_eq!(m.mul(&m.adjugate()), Matrix2::scalar(&m.det()));
    }

    #[test]
    fn rotation_has_order_four() {
        let f = BaseField::from_d(-1).unwrap();
        let r = Matrix2::from_ints(&f, [[0, -1], [1, 0]]);
        assert!(r.pow(4).unwrap().is_identity());
        assert_eq!(r.pow(2).unwrap(), Matrix2::scalar(&f.int(-1)));
        assert_eq!(r.trace(), f.int(0));
        assert!(r.det().is_one());
    }

    #[test]
    fn integrality_and_denominators() {
        let f = BaseField::from_d(-15).unwrap();
        let m = parse(&f, [["1/2+1/2*sqrt(-15)", "0"], ["0", "1"]]);
        assert!(m.is_integral(&f));
        let h = parse(&f, [["1/2", "0"], ["0", "1/3"]]);
        assert!(!h.is_integral(&f));
        assert_eq!(h.denominator(&f), num_bigint::BigInt::from(6));
    }

    #[test]
    fn conjugation_preserves_trace_and_determinant() {
        let f = BaseField::from_d(2).unwrap();
        let m = parse(&f, [["1", "sqrt(2)"], ["3", "-2"]]);
        let t = parse(&f, [["1", "1"], ["sqrt(2)", "2"]]);
        let c = m.conj_by(&t).unwrap();
        assert_eq!(c.trace(), m.trace());
        assert_eq!(c.det(), m.det());
        assert_eq!(m.transpose().transpose(), m);
    }
}
