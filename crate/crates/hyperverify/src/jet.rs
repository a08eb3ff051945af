//! Forward-mode derivatives up to third order.
//!
//! A [`Jet3`] carries a value together with its first three derivatives
//! with respect to a single scalar variable. Arithmetic on jets propagates
//! derivatives exactly (Leibniz rule up to third order), and elementary
//! functions are applied through the third-order chain rule
//!
//! ```text
//! (F∘g)'   = F'(g) g'
//! (F∘g)''  = F''(g) g'² + F'(g) g''
//! (F∘g)''' = F'''(g) g'³ + 3 F''(g) g' g'' + F'(g) g'''
//! ```
//!
//! Profiles use jets so that every derivative entering an integrand is
//! exact to rounding — the verification never relies on finite differences
//! except inside dedicated oracle tests.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value and first three derivatives of a scalar function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet3 {
    /// Function value.
    pub v: f64,
    /// First derivative.
    pub d1: f64,
    /// Second derivative.
    pub d2: f64,
    /// Third derivative.
    pub d3: f64,
}

impl Jet3 {
    /// Jet of the identity map at `x` (seed for differentiation in `x`).
    pub fn var(x: f64) -> Self {
        Jet3 {
            v: x,
            d1: 1.0,
            d2: 0.0,
            d3: 0.0,
        }
    }

    /// Jet of a constant.
    pub fn constant(c: f64) -> Self {
        Jet3 {
            v: c,
            d1: 0.0,
            d2: 0.0,
            d3: 0.0,
        }
    }

    /// The derivatives as an array `[u, u', u'', u''']`.
    pub fn into_array(self) -> [f64; 4] {
        [self.v, self.d1, self.d2, self.d3]
    }

    /// Composes an outer function (given by its value and three derivatives
    /// at `self.v`) with this jet, via the third-order chain rule.
    pub fn compose(self, f: [f64; 4]) -> Self {
        let [f0, f1, f2, f3] = f;
        let g1 = self.d1;
        let g2 = self.d2;
        let g3 = self.d3;
        Jet3 {
            v: f0,
            d1: f1 * g1,
            d2: f2 * g1 * g1 + f1 * g2,
            d3: f3 * g1 * g1 * g1 + 3.0 * f2 * g1 * g2 + f1 * g3,
        }
    }

    /// `e^self`.
    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.compose([e, e, e, e])
    }

    /// `ln self` (requires a positive value).
    pub fn ln(self) -> Self {
        let x = self.v;
        self.compose([x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)])
    }

    /// `1/self`.
    pub fn recip(self) -> Self {
        let x = self.v;
        let i = 1.0 / x;
        self.compose([i, -i * i, 2.0 * i * i * i, -6.0 * i * i * i * i])
    }

    /// `self^p` for a real exponent (requires a positive value).
    pub fn powf(self, p: f64) -> Self {
        let x = self.v;
        let f0 = x.powf(p);
        let f1 = p * x.powf(p - 1.0);
        let f2 = p * (p - 1.0) * x.powf(p - 2.0);
        let f3 = p * (p - 1.0) * (p - 2.0) * x.powf(p - 3.0);
        self.compose([f0, f1, f2, f3])
    }

    /// `self^k` for an integer exponent (works for any sign of the value
    /// when `k ≥ 0`).
    pub fn powi(self, k: i32) -> Self {
        let x = self.v;
        let kf = f64::from(k);
        let f0 = x.powi(k);
        let f1 = kf * x.powi(k - 1);
        let f2 = kf * (kf - 1.0) * x.powi(k - 2);
        let f3 = kf * (kf - 1.0) * (kf - 2.0) * x.powi(k - 3);
        self.compose([f0, f1, f2, f3])
    }

    /// `sin self`.
    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose([s, c, -s, -c])
    }

    /// `cos self`.
    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose([c, -s, -c, s])
    }

    /// `sinh self`.
    pub fn sinh(self) -> Self {
        let s = self.v.sinh();
        let c = self.v.cosh();
        self.compose([s, c, s, c])
    }

    /// `cosh self`.
    pub fn cosh(self) -> Self {
        let s = self.v.sinh();
        let c = self.v.cosh();
        self.compose([c, s, c, s])
    }

    /// `√self`.
    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(self, o: Jet3) -> Jet3 {
        Jet3 {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
            d3: self.d3 + o.d3,
        }
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, o: Jet3) -> Jet3 {
        Jet3 {
            v: self.v - o.v,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
            d3: self.d3 - o.d3,
        }
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, o: Jet3) -> Jet3 {
        // Leibniz rule through third order.
        Jet3 {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
            d3: self.d3 * o.v + 3.0 * self.d2 * o.d1 + 3.0 * self.d1 * o.d2 + self.v * o.d3,
        }
    }
}

impl Div for Jet3 {
    type Output = Jet3;
    // The quotient rule is applied as multiplication by the reciprocal
    // jet, which keeps the third-derivative algebra in one place.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet3) -> Jet3 {
        self * o.recip()
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        Jet3 {
            v: -self.v,
            d1: -self.d1,
            d2: -self.d2,
            d3: -self.d3,
        }
    }
}

impl Mul<f64> for Jet3 {
    type Output = Jet3;
    fn mul(self, s: f64) -> Jet3 {
        Jet3 {
            v: self.v * s,
            d1: self.d1 * s,
            d2: self.d2 * s,
            d3: self.d3 * s,
        }
    }
}

impl Add<f64> for Jet3 {
    type Output = Jet3;
    fn add(self, s: f64) -> Jet3 {
        Jet3 {
            v: self.v + s,
            ..self
        }
    }
}
