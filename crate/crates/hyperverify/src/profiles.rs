//! Compactly supported radial test profiles with exact derivatives.
//!
//! Every identity in the catalogue is quantified over smooth test functions
//! that vanish near the pole and at infinity. This module provides concrete
//! representatives from three qualitatively different families:
//!
//! - [`SmoothBump`]: `amplitude · exp(1/g_max − 1/g)` with
//!   `g = (r−a)(b−r)` — infinitely flat at both support endpoints;
//! - [`PolyBridge`]: `amplitude · (g/g_max)⁴` — polynomial, C³ at the
//!   endpoints, heavy-tailed derivative growth inside;
//! - [`SineBump`]: `amplitude · sin⁴(π(r−a)/(b−a))` — oscillatory kernel,
//!   C³ at the endpoints.
//!
//! plus the concentrating family used by the sharpness experiments, and a
//! smooth window ([`SmoothWindow`]) built from the classic
//! `exp(−1/t)`-smoothstep.
//!
//! Derivatives up to third order come from forward-mode jets
//! ([`crate::jet::Jet3`]) — closed-form differentiation, not finite
//! differences. Outside its support every profile evaluates to exactly
//! `0.0` (not merely something small), so integrands can be restricted to
//! the support interval with no boundary error.

use crate::geometry::{self, Dimension};
use crate::jet::Jet3;
use thiserror::Error;

/// Errors from profile construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    /// Support interval must satisfy `0 < a < b`.
    #[error("invalid support interval [{a}, {b}]: need 0 < a < b")]
    InvalidSupport {
        /// Requested lower endpoint.
        a: f64,
        /// Requested upper endpoint.
        b: f64,
    },
    /// Concentration parameter out of range.
    #[error("epsilon={0} outside the admissible range (0, 1/2)")]
    InvalidEpsilon(f64),
}

/// A radial test function `u(r)` with exact derivatives up to third order.
///
/// Implementations guarantee:
/// - `u` and its exposed derivatives vanish identically outside
///   [`support`](RadialProfile::support);
/// - the function is C² globally and C³ away from finitely many seam
///   points;
/// - the support lies strictly inside `(0, ∞)`.
pub trait RadialProfile: Send + Sync {
    /// Support interval `[a, b]` outside of which the profile is zero.
    fn support(&self) -> (f64, f64);

    /// Value and first three derivatives at `r`.
    fn jet(&self, r: f64) -> Jet3;

    /// Identifier of the profile family (for reports).
    fn family_tag(&self) -> &'static str;

    /// The value `u(r)`.
    fn value(&self, r: f64) -> f64 {
        self.jet(r).v
    }

    /// `[u, u', u'', u''']` at `r`.
    fn derivs(&self, r: f64) -> [f64; 4] {
        self.jet(r).into_array()
    }
}

/// Radial Laplacian `Δ_r u = u'' + (N−1) coth(r) u'` of a profile.
pub fn radial_laplacian(n: Dimension, u: &dyn RadialProfile, r: f64) -> f64 {
    let j = u.jet(r);
    geometry::radial_laplacian_values(n, r, j.d1, j.d2)
}

/// Squared radial gradient `|∇_r u|² = (u')²` of a profile.
pub fn gradient_sq_radial(u: &dyn RadialProfile, r: f64) -> f64 {
    let d = u.jet(r).d1;
    d * d
}

fn check_support(a: f64, b: f64) -> Result<(), ProfileError> {
    if a > 0.0 && b > a && a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(ProfileError::InvalidSupport { a, b })
    }
}

/// Classic smooth bump: `amplitude · exp(1/g_max − 1/g)`, `g = (r−a)(b−r)`.
///
/// Infinitely flat at both endpoints; the normalization makes the peak at
/// the midpoint equal to `amplitude`. The exponent is assembled as a single
/// difference so it is always `≤ 0` — no overflow for narrow supports.
#[derive(Debug, Clone)]
pub struct SmoothBump {
    a: f64,
    b: f64,
    amplitude: f64,
    inv_gmax: f64,
}

/// Builds the smooth-bump profile on `[a, b]` with the given peak value.
pub fn make_bump(a: f64, b: f64, amplitude: f64) -> Result<SmoothBump, ProfileError> {
    check_support(a, b)?;
    let gmax = (b - a) * (b - a) / 4.0;
    Ok(SmoothBump {
        a,
        b,
        amplitude,
        inv_gmax: 1.0 / gmax,
    })
}

impl RadialProfile for SmoothBump {
    fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn jet(&self, r: f64) -> Jet3 {
        if r <= self.a || r >= self.b {
            return Jet3::constant(0.0);
        }
        let x = Jet3::var(r);
        let g = (x - Jet3::constant(self.a)) * (Jet3::constant(self.b) - x);
        // exponent = 1/g_max − 1/g ≤ 0; below −700 the value (≤ e⁻⁷⁰⁰·amp)
        // is indistinguishable from the exact zero outside the support.
        let e0 = self.inv_gmax - 1.0 / g.v;
        if e0 < -700.0 {
            return Jet3::constant(0.0);
        }
        ((-g.recip()) + self.inv_gmax).exp() * self.amplitude
    }

    fn family_tag(&self) -> &'static str {
        "smooth-bump"
    }
}

/// Polynomial bridge `amplitude · ((r−a)(b−r))⁴ / g_max⁴`.
///
/// Fourth powers give C³ contact at both endpoints (value through third
/// derivative all vanish there) with purely polynomial arithmetic inside.
#[derive(Debug, Clone)]
pub struct PolyBridge {
    a: f64,
    b: f64,
    scale: f64,
}

impl PolyBridge {
    /// Builds the bridge on `[a, b]` with the given peak value.
    pub fn new(a: f64, b: f64, amplitude: f64) -> Result<Self, ProfileError> {
        check_support(a, b)?;
        let gmax = (b - a) * (b - a) / 4.0;
        Ok(PolyBridge {
            a,
            b,
            scale: amplitude / gmax.powi(4),
        })
    }
}

impl RadialProfile for PolyBridge {
    fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn jet(&self, r: f64) -> Jet3 {
        if r <= self.a || r >= self.b {
            return Jet3::constant(0.0);
        }
        let x = Jet3::var(r);
        let g = (x - Jet3::constant(self.a)) * (Jet3::constant(self.b) - x);
        g.powi(4) * self.scale
    }

    fn family_tag(&self) -> &'static str {
        "poly-bridge"
    }
}

/// Sine-window bump `amplitude · sin⁴(π (r−a)/(b−a))`.
///
/// The fourth power makes the third derivative vanish at the seams, so the
/// profile is C³ globally like the other families.
#[derive(Debug, Clone)]
pub struct SineBump {
    a: f64,
    b: f64,
    amplitude: f64,
    freq: f64,
}

impl SineBump {
    /// Builds the sine bump on `[a, b]` with the given peak value.
    pub fn new(a: f64, b: f64, amplitude: f64) -> Result<Self, ProfileError> {
        check_support(a, b)?;
        Ok(SineBump {
            a,
            b,
            amplitude,
            freq: std::f64::consts::PI / (b - a),
        })
    }
}

impl RadialProfile for SineBump {
    fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn jet(&self, r: f64) -> Jet3 {
        if r <= self.a || r >= self.b {
            return Jet3::constant(0.0);
        }
        let x = Jet3::var(r);
        let s = ((x - Jet3::constant(self.a)) * self.freq).sin();
        s.powi(4) * self.amplitude
    }

    fn family_tag(&self) -> &'static str {
        "sine-bump"
    }
}

/// Jet of the `exp(−1/t)` smoothstep `S(t) = g(t) / (g(t) + g(1−t))`.
///
/// `S` is C^∞, identically 0 for `t ≤ 0` and 1 for `t ≥ 1`. The tiny
/// interior guards avoid overflowing `1/t` on subnormal arguments; at the
/// guard points the true value is below the double-precision underflow
/// threshold, so clamping is exact in `f64`.
pub fn smoothstep_jet(t: Jet3) -> Jet3 {
    const EDGE: f64 = 1e-3;
    if t.v <= EDGE {
        return Jet3::constant(0.0);
    }
    if t.v >= 1.0 - EDGE {
        return Jet3::constant(1.0);
    }
    let g = (-t.recip()).exp();
    let h = (-(Jet3::constant(1.0) - t).recip()).exp();
    g / (g + h)
}

/// C^∞ window: smoothstep rise on `[r0, r1]`, plateau at 1, smoothstep
/// fall on `[r2, r3]`; identically zero outside `[r0, r3]`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothWindow {
    rise: (f64, f64),
    fall: (f64, f64),
}

impl SmoothWindow {
    /// Builds a window rising on `[r0, r1]` and falling on `[r2, r3]`.
    pub fn new(rise: (f64, f64), fall: (f64, f64)) -> Result<Self, ProfileError> {
        let ((r0, r1), (r2, r3)) = (rise, fall);
        if !(r0 < r1 && r1 <= r2 && r2 < r3) {
            return Err(ProfileError::InvalidSupport { a: r0, b: r3 });
        }
        Ok(SmoothWindow { rise, fall })
    }

    /// Window jet at `r`.
    pub fn jet(&self, r: f64) -> Jet3 {
        let (r0, r1) = self.rise;
        let (r2, r3) = self.fall;
        if r <= r0 || r >= r3 {
            return Jet3::constant(0.0);
        }
        let x = Jet3::var(r);
        let up = if r < r1 {
            smoothstep_jet((x - Jet3::constant(r0)) * (1.0 / (r1 - r0)))
        } else {
            Jet3::constant(1.0)
        };
        let down = if r > r2 {
            Jet3::constant(1.0) - smoothstep_jet((x - Jet3::constant(r2)) * (1.0 / (r3 - r2)))
        } else {
            Jet3::constant(1.0)
        };
        up * down
    }

    /// Support endpoints of the window.
    pub fn support(&self) -> (f64, f64) {
        (self.rise.0, self.fall.1)
    }
}

/// Concentrating family `u_ε(r) = η(r) · r^p`, `p = (4−N)/2 + ε + shift`.
///
/// The cutoff `η` equals 1 on `[ε, 1]` and 0 outside `[ε/2, 2]`, built
/// from the same smoothstep kernel as [`SmoothBump`]. As `ε → 0` the
/// profile concentrates its Hardy-type energy near the pole; the sharpness
/// module scans quotients of such families.
#[derive(Debug, Clone)]
pub struct ConcentratingProfile {
    window: SmoothWindow,
    exponent: f64,
    epsilon: f64,
}

/// Builds the concentrating profile for dimension `N`.
///
/// `exponent_shift` offsets the base exponent `(4−N)/2 + ε` (zero for the
/// standard family).
pub fn make_concentrating_family(
    epsilon: f64,
    exponent_shift: f64,
    n: Dimension,
) -> Result<ConcentratingProfile, ProfileError> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(ProfileError::InvalidEpsilon(epsilon));
    }
    let window = SmoothWindow::new((epsilon / 2.0, epsilon), (1.0, 2.0))
        .expect("window endpoints ordered by construction");
    let exponent = (4.0 - n.nf()) / 2.0 + epsilon + exponent_shift;
    Ok(ConcentratingProfile {
        window,
        exponent,
        epsilon,
    })
}

impl ConcentratingProfile {
    /// The concentration parameter ε.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The power `p` in `u = η · r^p`.
    pub fn exponent(&self) -> f64 {
        self.exponent
    }
}

impl RadialProfile for ConcentratingProfile {
    fn support(&self) -> (f64, f64) {
        self.window.support()
    }

    fn jet(&self, r: f64) -> Jet3 {
        let (lo, hi) = self.support();
        if r <= lo || r >= hi {
            return Jet3::constant(0.0);
        }
        self.window.jet(r) * Jet3::var(r).powf(self.exponent)
    }

    fn family_tag(&self) -> &'static str {
        "concentrating"
    }
}
