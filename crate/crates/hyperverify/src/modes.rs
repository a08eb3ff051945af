//! Spherical-harmonic mode decomposition of functions on `H^N`.
//!
//! In geodesic polar coordinates a finite expansion
//!
//! ```text
//! u(r, σ) = Σ_n a_n(r) · Y_n(σ)
//! ```
//!
//! over L²-orthonormal spherical harmonics `Y_n` of degree `n` turns every
//! quadratic functional in the catalogue into a sum of one-dimensional
//! radial integrals, one per mode:
//!
//! ```text
//! ∫ |u|² g dv      = Σ_n ∫ a_n²  g sinh^(N-1) r dr
//! ∫ |∇u|² g dv     = Σ_n ∫ a_n'² g sinh^(N-1) r dr + λ_n ∫ a_n² g sinh^(N-3) r dr
//! Δu  (mode n)     = a_n'' + (N-1) coth r · a_n' − λ_n a_n / sinh²r
//! ```
//!
//! with `λ_n = n(n + N − 2)` the degree-`n` eigenvalue of the spherical
//! Laplacian. This module owns the spectrum data, the expansion containers,
//! the standard quadratic functionals, and the per-mode gap functional
//! whose sign decides the non-radial second-order inequality, together with
//! the four integration-by-parts lemmas its reduction rests on.

use crate::geometry::{self, Dimension};
use crate::pairs::BesselPair;
use crate::profiles::RadialProfile;
use crate::quadrature::{self, QuadratureError, QuadratureResult};
use thiserror::Error;

/// Errors from expansion construction and mode integrals.
#[derive(Debug, Error)]
pub enum ModeError {
    /// Two components share a degree.
    #[error("duplicate mode degree n={0} in expansion")]
    DuplicateDegree(u32),
    /// An expansion needs at least one component.
    #[error("expansion has no components")]
    Empty,
    /// A radial integral failed.
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Eigenvalue `λ_n = n(n + N − 2)` of `−Δ` on the unit sphere `S^(N-1)`.
pub fn mode_eigenvalue(dim: Dimension, n: u32) -> f64 {
    let nf = f64::from(n);
    nf * (nf + dim.nf() - 2.0)
}

/// Number of linearly independent degree-`n` spherical harmonics on
/// `S^(N-1)`.
///
/// `1` for `n = 0`, `N` for `n = 1`, and
/// `C(N+n−1, n) − C(N+n−3, n−2)` in general.
pub fn mode_multiplicity(dim: Dimension, n: u32) -> u128 {
    let nn = u128::from(dim.get());
    let k = u128::from(n);
    match n {
        0 => 1,
        1 => nn,
        _ => binomial(nn + k - 1, k) - binomial(nn + k - 3, k - 2),
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // Multiply before dividing; the running product of i+1 consecutive
        // ratios is always integral.
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// One row of the spherical spectrum table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeInfo {
    /// Degree.
    pub n: u32,
    /// Eigenvalue `n(n + N − 2)`, exact in f64 for the ranges in scope.
    pub eigenvalue_num: u64,
    /// Multiplicity of the eigenspace.
    pub multiplicity: u128,
}

/// Spectrum table for degrees `0 ..= max_degree`.
pub fn mode_spectrum(dim: Dimension, max_degree: u32) -> Vec<ModeInfo> {
    (0..=max_degree)
        .map(|n| ModeInfo {
            n,
            eigenvalue_num: u64::from(n) * (u64::from(n) + u64::from(dim.get()) - 2),
            multiplicity: mode_multiplicity(dim, n),
        })
        .collect()
}

/// Closed form for `Σ_{n ≤ max_degree} multiplicity(n)`:
/// `C(N+L−1, L) + C(N+L−2, L−1)` — the dimension of the space of
/// spherical harmonics of degree at most `L`. The spectrum table must
/// telescope to this value.
pub fn cumulative_multiplicity(dim: Dimension, max_degree: u32) -> u128 {
    let nn = u128::from(dim.get());
    let l = u128::from(max_degree);
    if max_degree == 0 {
        return 1;
    }
    binomial(nn + l - 1, l) + binomial(nn + l - 2, l - 1)
}

/// A single separated component `a(r)·Y_n(σ)`.
pub struct ModeFunction {
    /// Spherical degree `n`.
    pub n: u32,
    /// Radial factor `a`.
    pub profile: Box<dyn RadialProfile>,
}

impl ModeFunction {
    /// Wraps a radial factor with its degree.
    pub fn new(n: u32, profile: Box<dyn RadialProfile>) -> Self {
        ModeFunction { n, profile }
    }

    /// `λ_n` in the given dimension.
    pub fn eigenvalue(&self, dim: Dimension) -> f64 {
        mode_eigenvalue(dim, self.n)
    }
}

/// A finite expansion over distinct degrees.
pub struct ModeExpansion {
    dim: Dimension,
    modes: Vec<ModeFunction>,
}

impl ModeExpansion {
    /// Builds an expansion; degrees must be pairwise distinct (orthogonality
    /// is what splits the functionals into per-mode sums).
    pub fn new(dim: Dimension, modes: Vec<ModeFunction>) -> Result<Self, ModeError> {
        if modes.is_empty() {
            return Err(ModeError::Empty);
        }
        let mut seen: Vec<u32> = modes.iter().map(|m| m.n).collect();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(ModeError::DuplicateDegree(w[0]));
            }
        }
        Ok(ModeExpansion { dim, modes })
    }

    /// A purely radial function as the degree-0 expansion.
    pub fn radial(dim: Dimension, profile: Box<dyn RadialProfile>) -> Self {
        ModeExpansion {
            dim,
            modes: vec![ModeFunction::new(0, profile)],
        }
    }

    /// Dimension of the ambient space.
    pub fn dim(&self) -> Dimension {
        self.dim
    }

    /// The components.
    pub fn modes(&self) -> &[ModeFunction] {
        &self.modes
    }

    /// Smallest interval containing every component's support.
    pub fn support_hull(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for m in &self.modes {
            let (a, b) = m.profile.support();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }
}

/// How the squared Laplacian of a mode is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianForm {
    /// One integrand: `(Δ_r a − λ_n a/sinh²r)² sinh^(N-1) r`.
    Fused,
    /// Three integrals: `(Δ_r a)²·sinh^(N-1)`, `−2λ_n (Δ_r a)·a·sinh^(N-3)`
    /// and `λ_n² a²·sinh^(N-5)`; agreement with [`LaplacianForm::Fused`] is
    /// a wiring check used by the test suite.
    Expanded,
}

/// `∫ a² g sinh^(N-1) dr` for one mode of degree `n` with radial factor `a`.
pub fn mode_l2_sq(
    dim: Dimension,
    p: &dyn RadialProfile,
    g: &dyn Fn(f64) -> f64,
    tol: f64,
) -> Result<QuadratureResult, ModeError> {
    let f = |r: f64| {
        let v = p.value(r);
        v * v * g(r)
    };
    Ok(quadrature::integrate_weighted(
        &f,
        dim.get() as i32 - 1,
        p.support(),
        tol,
    )?)
}

/// `∫ a'² g sinh^(N-1) dr + λ_n ∫ a² g sinh^(N-3) dr` for one mode.
pub fn mode_grad_sq(
    dim: Dimension,
    degree: u32,
    p: &dyn RadialProfile,
    g: &dyn Fn(f64) -> f64,
    tol: f64,
) -> Result<QuadratureResult, ModeError> {
    let support = p.support();
    let radial = |r: f64| {
        let d = p.jet(r).d1;
        d * d * g(r)
    };
    let part1 = quadrature::integrate_weighted(&radial, dim.get() as i32 - 1, support, tol)?;
    let lam = mode_eigenvalue(dim, degree);
    if lam == 0.0 {
        return Ok(part1);
    }
    let angular = |r: f64| {
        let v = p.value(r);
        v * v * g(r)
    };
    let part2 = quadrature::integrate_weighted(&angular, dim.get() as i32 - 3, support, tol)?;
    Ok(QuadratureResult {
        value: part1.value + lam * part2.value,
        abs_error_estimate: part1.abs_error_estimate + lam * part2.abs_error_estimate,
        subdivisions: part1.subdivisions + part2.subdivisions,
    })
}

/// `∫ (Δu)² g dv` restricted to one mode, by either evaluation route.
pub fn mode_laplacian_sq(
    dim: Dimension,
    degree: u32,
    p: &dyn RadialProfile,
    g: &dyn Fn(f64) -> f64,
    form: LaplacianForm,
    tol: f64,
) -> Result<QuadratureResult, ModeError> {
    let support = p.support();
    let lam = mode_eigenvalue(dim, degree);
    let nm1 = dim.nf() - 1.0;
    let radial_lap = |r: f64| {
        let j = p.jet(r);
        j.d2 + nm1 * geometry::coth(r) * j.d1
    };
    match form {
        LaplacianForm::Fused => {
            let f = |r: f64| {
                let lap = radial_lap(r) - lam * p.value(r) * geometry::csch_sq(r);
                lap * lap * g(r)
            };
            Ok(quadrature::integrate_weighted(
                &f,
                dim.get() as i32 - 1,
                support,
                tol,
            )?)
        }
        LaplacianForm::Expanded => {
            let f1 = |r: f64| {
                let lap = radial_lap(r);
                lap * lap * g(r)
            };
            let t1 = quadrature::integrate_weighted(&f1, dim.get() as i32 - 1, support, tol)?;
            if lam == 0.0 {
                return Ok(t1);
            }
            let f2 = |r: f64| radial_lap(r) * p.value(r) * g(r);
            let t2 = quadrature::integrate_weighted(&f2, dim.get() as i32 - 3, support, tol)?;
            let f3 = |r: f64| {
                let v = p.value(r);
                v * v * g(r)
            };
            let t3 = quadrature::integrate_weighted(&f3, dim.get() as i32 - 5, support, tol)?;
            Ok(QuadratureResult {
                value: t1.value - 2.0 * lam * t2.value + lam * lam * t3.value,
                abs_error_estimate: t1.abs_error_estimate
                    + 2.0 * lam * t2.abs_error_estimate
                    + lam * lam * t3.abs_error_estimate,
                subdivisions: t1.subdivisions + t2.subdivisions + t3.subdivisions,
            })
        }
    }
}

/// The six-term per-mode gap functional of the non-radial second-order
/// inequality, with each term reported separately.
#[derive(Debug, Clone)]
pub struct GapFunctional {
    /// Degree of the mode.
    pub n: u32,
    /// The six addends, in assembly order.
    pub terms: [f64; 6],
    /// Labels matching `terms`.
    pub labels: [&'static str; 6],
    /// Summed quadrature error estimates.
    pub budget: f64,
}

impl GapFunctional {
    /// The gap value `Σ terms`.
    pub fn value(&self) -> f64 {
        self.terms.iter().sum()
    }

    /// Magnitude scale `Σ |terms|`, the natural yardstick for deciding
    /// whether a tiny negative value is a genuine sign violation or
    /// cancellation noise.
    pub fn magnitude(&self) -> f64 {
        self.terms.iter().map(|t| t.abs()).sum()
    }
}

/// Evaluates the six-term gap functional for one mode against a weight pair.
///
/// For `u = a·Y_n` the second-order identity applied mode-wise leaves the
/// gap
///
/// ```text
/// B_n = λ_n² ∫ V a² ψ^(N-5)
///     − 2λ_n ∫ V (Δ_r a) a ψ^(N-3)
///     − λ_n ∫ W a² ψ^(N-3)
///     − (N−1) λ_n ∫ (V/ψ² − V' coth r) a² ψ^(N-3)
///     − λ_n ∫ V a'² ψ^(N-3)
///     + (N−1) λ_n ∫ V (f'/f)(coth r − 1/r) a² ψ^(N-3)
/// ```
///
/// with `ψ = sinh`. The expression is zero for `n = 0` and, under the
/// admissibility condition checked by
/// [`crate::pairs::check_nonradial_condition`], nonnegative for `n ≥ 1`.
pub fn gap_functional(
    pair: &BesselPair,
    degree: u32,
    p: &dyn RadialProfile,
    tol: f64,
) -> Result<GapFunctional, ModeError> {
    let dim = pair.dim();
    let nf = dim.nf();
    let k = dim.get() as i32;
    let lam = mode_eigenvalue(dim, degree);
    let support = p.support();
    let labels = [
        "lambda_sq_v",
        "cross_laplacian",
        "companion",
        "curvature_drift",
        "gradient",
        "log_deriv_return",
    ];
    if lam == 0.0 {
        return Ok(GapFunctional {
            n: degree,
            terms: [0.0; 6],
            labels,
            budget: 0.0,
        });
    }
    let v = pair.v();
    let sq = |r: f64| {
        let a = p.value(r);
        a * a
    };

    let f1 = |r: f64| v.value(r) * sq(r);
    let i1 = quadrature::integrate_weighted(&f1, k - 5, support, tol)?;

    let f2 = |r: f64| {
        let j = p.jet(r);
        let lap = j.d2 + (nf - 1.0) * geometry::coth(r) * j.d1;
        v.value(r) * lap * j.v
    };
    let i2 = quadrature::integrate_weighted(&f2, k - 3, support, tol)?;

    let f3 = |r: f64| pair.w(r) * sq(r);
    let i3 = quadrature::integrate_weighted(&f3, k - 3, support, tol)?;

    let f4 = |r: f64| (v.value(r) * geometry::csch_sq(r) - v.deriv(r) * geometry::coth(r)) * sq(r);
    let i4 = quadrature::integrate_weighted(&f4, k - 3, support, tol)?;

    let f5 = |r: f64| {
        let d = p.jet(r).d1;
        v.value(r) * d * d
    };
    let i5 = quadrature::integrate_weighted(&f5, k - 3, support, tol)?;

    let f6 = |r: f64| v.value(r) * pair.f().log_deriv(r) * geometry::coth_minus_inv_r(r) * sq(r);
    let i6 = quadrature::integrate_weighted(&f6, k - 3, support, tol)?;

    let terms = [
        lam * lam * i1.value,
        -2.0 * lam * i2.value,
        -lam * i3.value,
        -(nf - 1.0) * lam * i4.value,
        -lam * i5.value,
        (nf - 1.0) * lam * i6.value,
    ];
    let budget = lam * lam * i1.abs_error_estimate
        + 2.0 * lam * i2.abs_error_estimate
        + lam * i3.abs_error_estimate
        + (nf - 1.0) * lam * i4.abs_error_estimate
        + lam * i5.abs_error_estimate
        + (nf - 1.0) * lam * i6.abs_error_estimate;
    Ok(GapFunctional {
        n: degree,
        terms,
        labels,
        budget,
    })
}

/// Independent reduced form of the gap functional:
///
/// ```text
/// B_n = λ_n ∫ E(r) a² ψ^(N-3)
///     + λ_n ∫ V (a' − a (f'/f + coth r))² ψ^(N-3)
///     + λ_n (λ_n − (N−1)) ∫ V a² ψ^(N-5)
/// ```
///
/// where `E = (N−5)V/sinh²r + 3V' coth r − V'' + (N−4)V` is the
/// admissibility expression. Derived from the six-term form by the four
/// integration-by-parts lemmas ([`byparts_checks`]); each summand is
/// manifestly nonnegative when `E ≥ 0` and `n ≥ 1`, so agreement of the
/// two evaluations is both an oracle for the six-term assembly and the
/// sign certificate itself.
pub fn gap_functional_reduced(
    pair: &BesselPair,
    degree: u32,
    p: &dyn RadialProfile,
    tol: f64,
) -> Result<QuadratureResult, ModeError> {
    let dim = pair.dim();
    let nf = dim.nf();
    let k = dim.get() as i32;
    let lam = mode_eigenvalue(dim, degree);
    let support = p.support();
    if lam == 0.0 {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            subdivisions: 0,
        });
    }
    let v = pair.v();

    let admissibility = |r: f64| {
        let a = p.value(r);
        let e = (nf - 5.0) * v.value(r) * geometry::csch_sq(r)
            + 3.0 * v.deriv(r) * geometry::coth(r)
            - v.deriv2(r)
            + (nf - 4.0) * v.value(r);
        e * a * a
    };
    let i_e = quadrature::integrate_weighted(&admissibility, k - 3, support, tol)?;

    let twisted = |r: f64| {
        let j = p.jet(r);
        let s = j.d1 - j.v * (pair.f().log_deriv(r) + geometry::coth(r));
        v.value(r) * s * s
    };
    let i_t = quadrature::integrate_weighted(&twisted, k - 3, support, tol)?;

    let plain = |r: f64| {
        let a = p.value(r);
        v.value(r) * a * a
    };
    let i_p = quadrature::integrate_weighted(&plain, k - 5, support, tol)?;

    Ok(QuadratureResult {
        value: lam * (i_e.value + i_t.value) + lam * (lam - (nf - 1.0)) * i_p.value,
        abs_error_estimate: lam * (i_e.abs_error_estimate + i_t.abs_error_estimate)
            + lam * (lam - (nf - 1.0)).abs() * i_p.abs_error_estimate,
        subdivisions: i_e.subdivisions + i_t.subdivisions + i_p.subdivisions,
    })
}

/// One verified integration-by-parts lemma.
#[derive(Debug, Clone)]
pub struct BypartsReport {
    /// Which lemma.
    pub id: &'static str,
    /// Left-hand side.
    pub lhs: f64,
    /// Assembled right-hand side.
    pub rhs: f64,
    /// `|lhs − rhs|`.
    pub residual: f64,
    /// Natural scale: `max(|lhs|, Σ|rhs parts|)`.
    pub scale: f64,
    /// Summed quadrature error estimates.
    pub budget: f64,
}

/// Verifies the four integration-by-parts lemmas behind the gap reduction
/// on a concrete `(V, f, a)` triple.
///
/// All four move derivatives off `a` against the weights `sinh^k`; with
/// `b := a/sinh r` and `ψ := sinh r` they read
///
/// ```text
/// (sinh-quotient)   ∫V a'² ψ^(N-3) = ∫V b'² ψ^(N-1) − (N−3)∫V b² ψ^(N-3)
///                                    − ∫V' b² ψ'ψ^(N-2) − (N−2)∫V b² ψ^(N-1)
/// (companion-split) ∫V a'² ψ^(N-3) = ∫W a² ψ^(N-3)
///                                    + ∫V (a' − a(f'/f + coth r))² ψ^(N-3)
///                                    − (N−1)∫V (f'/f)(coth r − 1/r) a² ψ^(N-3)
///                                    − (N−3)∫V a² ψ^(N-5) − ∫V' a² ψ'ψ^(N-4)
///                                    − (N−2)∫V a² ψ^(N-3)
/// (second-deriv)    ∫V a'' a ψ^(N-3) = ½∫V'' a² ψ^(N-3)
///                                    + (N−3)/2 ∫V' a² ψ'ψ^(N-4)
///                                    − ∫V a'² ψ^(N-3) − (N−3)∫V a' a ψ'ψ^(N-4)
/// (cross-slide)     ∫V a' a ψ'ψ^(N-4) = −½∫V' a² ψ'ψ^(N-4)
///                                    − (N−4)/2 ∫V a² ψ^(N-5)
///                                    − (N−3)/2 ∫V a² ψ^(N-3)
/// ```
///
/// The companion-split lemma is where the pair ODE enters: it is exact only
/// because `(r^(N-1)Vf')' + r^(N-1)Wf = 0`.
pub fn byparts_checks(
    pair: &BesselPair,
    profile: &dyn RadialProfile,
    tol: f64,
) -> Result<Vec<BypartsReport>, ModeError> {
    let dim = pair.dim();
    let nf = dim.nf();
    let k = dim.get() as i32;
    let v = pair.v();
    let support = profile.support();

    // Shared building blocks. ψ' = cosh, so `ψ'ψ^(N-4) = coth·ψ^(N-3)`;
    // all weights are expressed through integer sinh powers plus coth.
    let int = |f: &dyn Fn(f64) -> f64, kk: i32| quadrature::integrate_weighted(f, kk, support, tol);

    let a_sq = |r: f64| {
        let a = profile.value(r);
        a * a
    };
    let va_sq = |r: f64| v.value(r) * a_sq(r);
    let vda_sq = |r: f64| {
        let d = profile.jet(r).d1;
        v.value(r) * d * d
    };
    let v_r_coth_a_sq = |r: f64| v.deriv(r) * geometry::coth(r) * a_sq(r);

    let lhs_grad = int(&vda_sq, k - 3)?;

    let mut out = Vec::with_capacity(4);

    // (sinh-quotient): substitute b = a/sinh r.
    {
        let b_sq = |r: f64| {
            let b = profile.value(r) / r.sinh();
            b * b
        };
        let db_sq = |r: f64| {
            let j = profile.jet(r);
            let s = r.sinh();
            let db = j.d1 / s - j.v * r.cosh() / (s * s);
            db * db
        };
        let vb = |r: f64| v.value(r) * b_sq(r);
        let vdb = |r: f64| v.value(r) * db_sq(r);
        let vrb = |r: f64| v.deriv(r) * geometry::coth(r) * b_sq(r);
        let t1 = int(&vdb, k - 1)?;
        let t2 = int(&vb, k - 3)?;
        let t3 = int(&vrb, k - 1)?;
        let t4 = int(&vb, k - 1)?;
        let parts = [
            t1.value,
            -(nf - 3.0) * t2.value,
            -t3.value,
            -(nf - 2.0) * t4.value,
        ];
        let rhs: f64 = parts.iter().sum();
        let budget = lhs_grad.abs_error_estimate
            + t1.abs_error_estimate
            + (nf - 3.0).abs() * t2.abs_error_estimate
            + t3.abs_error_estimate
            + (nf - 2.0) * t4.abs_error_estimate;
        out.push(report("sinh-quotient", lhs_grad.value, rhs, &parts, budget));
    }

    // (companion-split): uses the pair's W and f.
    {
        let w_term = |r: f64| pair.w(r) * a_sq(r);
        let twisted = |r: f64| {
            let j = profile.jet(r);
            let s = j.d1 - j.v * (pair.f().log_deriv(r) + geometry::coth(r));
            v.value(r) * s * s
        };
        let logd =
            |r: f64| v.value(r) * pair.f().log_deriv(r) * geometry::coth_minus_inv_r(r) * a_sq(r);
        let t1 = int(&w_term, k - 3)?;
        let t2 = int(&twisted, k - 3)?;
        let t3 = int(&logd, k - 3)?;
        let t4 = int(&va_sq, k - 5)?;
        let t5 = int(&v_r_coth_a_sq, k - 3)?;
        let t6 = int(&va_sq, k - 3)?;
        let parts = [
            t1.value,
            t2.value,
            -(nf - 1.0) * t3.value,
            -(nf - 3.0) * t4.value,
            -t5.value,
            -(nf - 2.0) * t6.value,
        ];
        let rhs: f64 = parts.iter().sum();
        let budget = lhs_grad.abs_error_estimate
            + t1.abs_error_estimate
            + t2.abs_error_estimate
            + (nf - 1.0) * t3.abs_error_estimate
            + (nf - 3.0).abs() * t4.abs_error_estimate
            + t5.abs_error_estimate
            + (nf - 2.0) * t6.abs_error_estimate;
        out.push(report(
            "companion-split",
            lhs_grad.value,
            rhs,
            &parts,
            budget,
        ));
    }

    // (second-deriv): moves a'' off the profile.
    {
        let lhs_f = |r: f64| {
            let j = profile.jet(r);
            v.value(r) * j.d2 * j.v
        };
        let lhs = int(&lhs_f, k - 3)?;
        let vrr = |r: f64| v.deriv2(r) * a_sq(r);
        let cross = |r: f64| {
            let j = profile.jet(r);
            v.value(r) * j.d1 * j.v * geometry::coth(r)
        };
        let t1 = int(&vrr, k - 3)?;
        let t2 = int(&v_r_coth_a_sq, k - 3)?;
        let t3 = int(&vda_sq, k - 3)?;
        let t4 = int(&cross, k - 3)?;
        let parts = [
            0.5 * t1.value,
            0.5 * (nf - 3.0) * t2.value,
            -t3.value,
            -(nf - 3.0) * t4.value,
        ];
        let rhs: f64 = parts.iter().sum();
        let budget = lhs.abs_error_estimate
            + 0.5 * t1.abs_error_estimate
            + 0.5 * (nf - 3.0).abs() * t2.abs_error_estimate
            + t3.abs_error_estimate
            + (nf - 3.0).abs() * t4.abs_error_estimate;
        out.push(report("second-deriv", lhs.value, rhs, &parts, budget));
    }

    // (cross-slide): moves the mixed a'a cosh term onto a².
    {
        let lhs_f = |r: f64| {
            let j = profile.jet(r);
            v.value(r) * j.d1 * j.v * geometry::coth(r)
        };
        let lhs = int(&lhs_f, k - 3)?;
        let t1 = int(&v_r_coth_a_sq, k - 3)?;
        let t2 = int(&va_sq, k - 5)?;
        let t3 = int(&va_sq, k - 3)?;
        let parts = [
            -0.5 * t1.value,
            -0.5 * (nf - 4.0) * t2.value,
            -0.5 * (nf - 3.0) * t3.value,
        ];
        let rhs: f64 = parts.iter().sum();
        let budget = lhs.abs_error_estimate
            + 0.5 * t1.abs_error_estimate
            + 0.5 * (nf - 4.0).abs() * t2.abs_error_estimate
            + 0.5 * (nf - 3.0).abs() * t3.abs_error_estimate;
        out.push(report("cross-slide", lhs.value, rhs, &parts, budget));
    }

    Ok(out)
}

fn report(id: &'static str, lhs: f64, rhs: f64, parts: &[f64], budget: f64) -> BypartsReport {
    let scale = parts.iter().map(|p| p.abs()).sum::<f64>().max(lhs.abs());
    BypartsReport {
        id,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        scale,
        budget,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairs::{lambda_params, Solution, WeightFamily};
    use crate::profiles::make_bump;
    use crate::quadrature::integrate_fixed;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn dim(n: u32) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn eigenvalues_match_low_dimensional_closed_forms() {
        // On the circle (N=2) the harmonics are cos/sin(nφ) with
        // eigenvalue n²; on S² they are the classical Y_l with l(l+1).
        for n in 0..6 {
            assert_eq!(mode_eigenvalue(dim(2), n), f64::from(n * n));
            assert_eq!(mode_eigenvalue(dim(3), n), f64::from(n * (n + 1)));
        }
        assert_eq!(mode_eigenvalue(dim(5), 1), 4.0); // N−1
        assert_eq!(mode_eigenvalue(dim(8), 2), 16.0); // 2·(2+6)
    }

    #[test]
    fn degree_one_eigenvalue_is_dimension_minus_one() {
        for n in [2u32, 3, 5, 8, 64] {
            assert_eq!(mode_eigenvalue(dim(n), 1), dim(n).nf() - 1.0);
        }
    }

    #[test]
    fn legendre_mode_satisfies_spherical_eigenvalue_equation() {
        // Independent check of λ_n on S² (N=3): the zonal harmonic is the
        // Legendre polynomial P_n(cos θ), a closed form we can
        // differentiate by finite differences in θ:
        //   −(f'' + cot θ f') = λ_n f.
        let p2 = |t: f64| 0.5 * (3.0 * t.cos() * t.cos() - 1.0);
        let p3 = |t: f64| 0.5 * (5.0 * t.cos().powi(3) - 3.0 * t.cos());
        let cases: [(&dyn Fn(f64) -> f64, u32); 2] = [(&p2, 2), (&p3, 3)];
        for (f, n) in cases {
            for theta in [0.4, 1.0, 2.2] {
                let h = 1e-4;
                let d1 = (f(theta + h) - f(theta - h)) / (2.0 * h);
                let d2 = (f(theta + h) - 2.0 * f(theta) + f(theta - h)) / (h * h);
                let lap = d2 + d1 / theta.tan();
                assert_relative_eq!(
                    -lap,
                    mode_eigenvalue(dim(3), n) * f(theta),
                    max_relative = 1e-5,
                    epsilon = 1e-6,
                );
            }
        }
    }

    #[test]
    fn multiplicities_match_known_tables() {
        // N=3: 2n+1.
        for n in 0..8 {
            assert_eq!(mode_multiplicity(dim(3), n), u128::from(2 * n + 1));
        }
        // N=4: (n+1)².
        for n in 0..8 {
            assert_eq!(mode_multiplicity(dim(4), n), u128::from((n + 1) * (n + 1)));
        }
        // N=2: the circle has two harmonics per degree n ≥ 1.
        assert_eq!(mode_multiplicity(dim(2), 0), 1);
        for n in 1..6 {
            assert_eq!(mode_multiplicity(dim(2), n), 2, "n={n}");
        }
        // First few entries at N=5.
        assert_eq!(mode_multiplicity(dim(5), 0), 1);
        assert_eq!(mode_multiplicity(dim(5), 1), 5);
        assert_eq!(mode_multiplicity(dim(5), 2), 14);
        // Large dimension stays in range.
        assert!(mode_multiplicity(dim(64), 10) > 0);
    }

    #[test]
    fn multiplicities_sum_to_polynomial_space_dimensions() {
        // Σ_{k≤L} mult(k) = C(N+L−1, L) + C(N+L−2, L−1): harmonics of
        // degree ≤ L span the restrictions of degree-≤L polynomials.
        for n in [2u32, 3, 5, 8] {
            for l in 1u32..6 {
                let total: u128 = (0..=l).map(|k| mode_multiplicity(dim(n), k)).sum();
                let nn = u128::from(n);
                let ll = u128::from(l);
                let expect = binomial(nn + ll - 1, ll) + binomial(nn + ll - 2, ll - 1);
                assert_eq!(total, expect, "N={n} L={l}");
            }
        }
    }

    #[test]
    fn spectrum_table_is_consistent() {
        let spec = mode_spectrum(dim(5), 4);
        assert_eq!(spec.len(), 5);
        for row in &spec {
            assert_eq!(row.eigenvalue_num as f64, mode_eigenvalue(dim(5), row.n));
            assert_eq!(row.multiplicity, mode_multiplicity(dim(5), row.n));
        }
    }

    #[test]
    fn expansion_rejects_duplicate_degrees() {
        let m = |n| ModeFunction::new(n, Box::new(make_bump(0.5, 2.0, 1.0).unwrap()) as Box<_>);
        assert!(matches!(
            ModeExpansion::new(dim(5), vec![m(1), m(1)]),
            Err(ModeError::DuplicateDegree(1))
        ));
        assert!(matches!(
            ModeExpansion::new(dim(5), vec![]),
            Err(ModeError::Empty)
        ));
        let ok = ModeExpansion::new(dim(5), vec![m(0), m(2)]).unwrap();
        assert_eq!(ok.modes().len(), 2);
        assert_eq!(ok.support_hull(), (0.5, 2.0));
    }

    #[test]
    fn grad_sq_agrees_with_integration_by_parts() {
        // For compactly supported u = a·Y_n,
        //   ∫|∇u|² dv = −∫ u Δu dv
        //             = −∫ a (Δ_r a − λ_n a/sinh²) sinh^(N-1) dr,
        // an independent route through completely different integrands.
        let d = dim(5);
        for n in [0u32, 1, 3] {
            let p = make_bump(0.4, 2.5, 1.3).unwrap();
            let lhs = mode_grad_sq(d, n, &p, &|_| 1.0, 1e-11).unwrap();
            let lam = mode_eigenvalue(d, n);
            let rhs_f = |r: f64| {
                let j = p.jet(r);
                let lap = j.d2 + (d.nf() - 1.0) * geometry::coth(r) * j.d1
                    - lam * j.v * geometry::csch_sq(r);
                -j.v * lap
            };
            let rhs = quadrature::integrate_weighted(&rhs_f, 4, p.support(), 1e-11).unwrap();
            assert_relative_eq!(lhs.value, rhs.value, max_relative = 1e-9);
        }
    }

    #[test]
    fn laplacian_sq_forms_agree() {
        // Fused vs expanded evaluation of ∫(Δu)²: same number through
        // different integrand groupings and weights.
        for n_dim in [3u32, 5, 8] {
            let d = dim(n_dim);
            for deg in [1u32, 2] {
                let p = make_bump(0.6, 2.2, 1.0).unwrap();
                let fused =
                    mode_laplacian_sq(d, deg, &p, &|_| 1.0, LaplacianForm::Fused, 1e-11).unwrap();
                let expanded =
                    mode_laplacian_sq(d, deg, &p, &|_| 1.0, LaplacianForm::Expanded, 1e-11)
                        .unwrap();
                let tol = 1e-8 * fused.value.abs()
                    + 10.0 * (fused.abs_error_estimate + expanded.abs_error_estimate);
                assert!(
                    (fused.value - expanded.value).abs() <= tol,
                    "N={n_dim} deg={deg}: {} vs {}",
                    fused.value,
                    expanded.value
                );
            }
        }
    }

    #[test]
    fn mode_l2_matches_fixed_rule_oracle() {
        let d = dim(5);
        let p = make_bump(0.5, 2.0, 0.7).unwrap();
        let got = mode_l2_sq(d, &p, &|_| 1.0, 1e-11).unwrap();
        let oracle = integrate_fixed(
            &|r: f64| {
                let a = p.value(r);
                a * a * r.sinh().powi(4)
            },
            p.support(),
            2000,
        );
        assert_relative_eq!(got.value, oracle, max_relative = 1e-10);
    }

    #[test]
    fn gap_functional_matches_reduced_form() {
        // The six-term assembly and the three-term reduction are tied by
        // four by-parts lemmas; numerical agreement certifies both.
        let grid_dims = [5u32, 6, 8];
        for nd in grid_dims {
            let d = dim(nd);
            let pair = BesselPair::canonical(lambda_params(d, 0.4 * d.lambda1()).unwrap());
            for deg in [1u32, 2, 4] {
                let p = make_bump(0.5, 2.4, 1.0).unwrap();
                let six = gap_functional(&pair, deg, &p, 1e-11).unwrap();
                let red = gap_functional_reduced(&pair, deg, &p, 1e-11).unwrap();
                let tol = 1e-8 * six.magnitude() + 10.0 * (six.budget + red.abs_error_estimate);
                assert!(
                    (six.value() - red.value).abs() <= tol,
                    "N={nd} deg={deg}: six={} reduced={}",
                    six.value(),
                    red.value
                );
                // Both must come out nonnegative here (admissible V ≡ 1).
                assert!(six.value() >= -tol, "N={nd} deg={deg}");
            }
        }
    }

    #[test]
    fn gap_functional_vanishes_for_radial_modes() {
        let d = dim(5);
        let pair = BesselPair::canonical(lambda_params(d, 1.0).unwrap());
        let p = make_bump(0.5, 2.0, 1.0).unwrap();
        let six = gap_functional(&pair, 0, &p, 1e-11).unwrap();
        assert_eq!(six.value(), 0.0);
        assert_eq!(six.magnitude(), 0.0);
    }

    #[test]
    fn byparts_lemmas_hold_on_assorted_weights() {
        let bump = make_bump(0.5, 3.0, 1.0).unwrap();
        let d = dim(5);
        let pairs = [
            BesselPair::canonical(lambda_params(d, 0.0).unwrap()),
            BesselPair::canonical(lambda_params(d, d.lambda1()).unwrap()),
            BesselPair::from_registry(d, WeightFamily::Power(2.0), Solution::One),
            BesselPair::from_registry(d, WeightFamily::Exponential(-0.5), Solution::PowerLaw(-0.5)),
        ];
        for (i, pair) in pairs.iter().enumerate() {
            for rep in byparts_checks(pair, &bump, 1e-11).unwrap() {
                let tol = 1e-7 * rep.scale + 10.0 * rep.budget;
                assert!(
                    rep.residual <= tol,
                    "pair {i}, {}: lhs={} rhs={} residual={}",
                    rep.id,
                    rep.lhs,
                    rep.rhs,
                    rep.residual
                );
            }
        }
    }

    #[test]
    fn byparts_lemmas_hold_in_low_dimensions_too() {
        // N−5 < 0 exercises the negative sinh powers; keep the profile
        // supported away from the origin.
        let bump = make_bump(0.8, 2.0, 1.0).unwrap();
        for nd in [2u32, 3] {
            let d = dim(nd);
            let pair = BesselPair::canonical(lambda_params(d, 0.5 * d.lambda1()).unwrap());
            for rep in byparts_checks(&pair, &bump, 1e-11).unwrap() {
                let tol = 1e-7 * rep.scale + 10.0 * rep.budget;
                assert!(rep.residual <= tol, "N={nd} {}: {}", rep.id, rep.residual);
            }
        }
    }

    proptest! {
        // Eigenvalues are increasing in degree and scale like n².
        #[test]
        fn eigenvalue_monotone(n in 2u32..=16, deg in 1u32..=20) {
            let d = dim(n);
            prop_assert!(mode_eigenvalue(d, deg + 1) > mode_eigenvalue(d, deg));
            prop_assert!(mode_eigenvalue(d, deg) >= f64::from(deg * deg));
        }

        // Multiplicity equals the difference of consecutive binomials, so
        // the recurrence Σ c_k telescopes; spot-check positivity + growth.
        #[test]
        fn multiplicity_positive_and_growing(n in 3u32..=12, deg in 1u32..=12) {
            let d = dim(n);
            prop_assert!(mode_multiplicity(d, deg) >= 1);
            // For N ≥ 3 multiplicities strictly increase with degree.
            prop_assert!(mode_multiplicity(d, deg + 1) > mode_multiplicity(d, deg));
        }

        // The gap functional is nonnegative for admissible weights at
        // random degree and λ, the inequality the whole catalogue hinges on.
        #[test]
        fn gap_nonnegative_for_canonical_pairs(
            nd in prop::sample::select(vec![5u32, 6, 7, 8]),
            deg in 1u32..=4,
            t in 0.0f64..=1.0,
        ) {
            let d = dim(nd);
            let pair = BesselPair::canonical(lambda_params(d, t * d.lambda1()).unwrap());
            let p = make_bump(0.6, 2.0, 1.0).unwrap();
            let six = gap_functional(&pair, deg, &p, 1e-10).unwrap();
            let floor = 1e-8 * six.magnitude() + 10.0 * six.budget;
            prop_assert!(six.value() >= -floor);
        }
    }
}
