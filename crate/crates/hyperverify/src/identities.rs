//! The identity catalogue and its numerical verifier.
//!
//! Every entry states an exact decomposition of a second- or first-order
//! energy on `H^N` into labeled nonnegative (or sign-analyzed) terms,
//!
//! ```text
//! LHS(u) = Σ_i c_i · T_i(u) [+ gap(u)]
//! ```
//!
//! where the `T_i` are weighted radial integrals, the `c_i` are closed-form
//! constants in `(N, λ)`, the last term is always a manifestly nonnegative
//! remainder, and inequality-type entries carry an extra computed `gap`
//! that must come out nonnegative. The verifier evaluates every piece by
//! adaptive quadrature on a concrete input function and reports the
//! residual `LHS − Σ terms − gap` against a scale-aware tolerance and the
//! summed quadrature error budget.
//!
//! Notation used throughout the term definitions:
//!
//! ```text
//! ψ = sinh r        w = ψ^(N-1)        X = coth r − 1/r
//! λ₁ = ((N−1)/2)²   γ = √((N−1)²−4λ)   h = (γ+1)/2
//! L1_λ = Ψ'_λ/Ψ_λ = h/r + (1−N−γ)/2 · coth r
//! Δ_r a = a'' + (N−1) coth r · a'
//! ```
//!
//! Inputs are either a single radial profile or a finite spherical-mode
//! expansion; mode-capable entries split into per-degree radial integrals
//! with the eigenvalue `λ_n = n(n+N−2)` carrying the angular energy.

use crate::geometry::{self, Dimension};
use crate::modes::{self, ModeError, ModeExpansion};
use crate::pairs::{self, BesselPair, LambdaParams, PairError};
use crate::profiles::RadialProfile;
use crate::quadrature::{self, QuadratureError};
use serde::Serialize;
use thiserror::Error;

/// Stable machine identifiers of the catalogue entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IdentityId {
    /// Second-order identity for radial functions, λ-family.
    RadialHr,
    /// The λ = 0 display of [`IdentityId::RadialHr`].
    HardyRellich0,
    /// Second-order identity with fourth-power weights (N ≥ 5).
    Rellich,
    /// The λ = λ₁ display of [`IdentityId::RadialHr`].
    PoincareL1,
    /// Second-order identity against the function itself (split form).
    PoincareL0,
    /// Weighted first-order identity with fourth-power weights (N ≥ 5).
    FllmHardyGrad,
    /// First-order identity at λ = λ₁.
    FllmPoincare,
    /// Second-order inequality for general functions (N ≥ 5), λ-family.
    NonradialHr,
    /// First-order identity for an arbitrary weight pair.
    AbstractHardy,
    /// Second-order pair identity, radial input.
    AbstractRellichRad,
    /// Second-order pair identity in radial-operator semantics: equality
    /// for every mode expansion.
    AbstractRellichRop,
    /// Second-order pair inequality for the full Laplacian (N ≥ 5, with
    /// the admissibility condition on the weight).
    AbstractRellichNr,
    /// First-order λ-family identity.
    AppendixHp,
    /// The λ = N−2 display of [`IdentityId::AppendixHp`] (N ≥ 3).
    AppendixHardy,
}

impl IdentityId {
    /// All entries, in catalogue order.
    pub fn all() -> [IdentityId; 14] {
        use IdentityId::*;
        [
            RadialHr,
            HardyRellich0,
            Rellich,
            PoincareL1,
            PoincareL0,
            FllmHardyGrad,
            FllmPoincare,
            NonradialHr,
            AbstractHardy,
            AbstractRellichRad,
            AbstractRellichRop,
            AbstractRellichNr,
            AppendixHp,
            AppendixHardy,
        ]
    }

    /// The stable string id.
    pub fn as_str(self) -> &'static str {
        use IdentityId::*;
        match self {
            RadialHr => "RADIAL_HR",
            HardyRellich0 => "HARDY_RELLICH_0",
            Rellich => "RELLICH",
            PoincareL1 => "POINCARE_L1",
            PoincareL0 => "POINCARE_L0",
            FllmHardyGrad => "FLLM_HARDY_GRAD",
            FllmPoincare => "FLLM_POINCARE",
            NonradialHr => "NONRADIAL_HR",
            AbstractHardy => "ABSTRACT_HARDY",
            AbstractRellichRad => "ABSTRACT_RELLICH_RAD",
            AbstractRellichRop => "ABSTRACT_RELLICH_ROP",
            AbstractRellichNr => "ABSTRACT_RELLICH_NR",
            AppendixHp => "APPENDIX_HP",
            AppendixHardy => "APPENDIX_HARDY",
        }
    }

    /// Whether the entry takes a free spectral parameter λ.
    pub fn accepts_lambda(self) -> bool {
        use IdentityId::*;
        matches!(
            self,
            RadialHr
                | NonradialHr
                | AbstractHardy
                | AbstractRellichRad
                | AbstractRellichRop
                | AbstractRellichNr
                | AppendixHp
        )
    }

    /// The built-in λ of a fixed-λ entry (where one is meaningful).
    pub fn fixed_lambda(self, dim: Dimension) -> Option<f64> {
        use IdentityId::*;
        match self {
            HardyRellich0 | Rellich => Some(0.0),
            PoincareL1 | PoincareL0 | FllmPoincare => Some(dim.lambda1()),
            AppendixHardy => Some(dim.nf() - 2.0),
            _ => None,
        }
    }

    /// Minimum dimension for which the entry is stated.
    pub fn min_dim(self) -> u32 {
        use IdentityId::*;
        match self {
            Rellich | FllmHardyGrad | NonradialHr | AbstractRellichNr => 5,
            AppendixHardy => 3,
            _ => 2,
        }
    }

    /// Whether mode expansions are accepted as input.
    pub fn mode_capable(self) -> bool {
        use IdentityId::*;
        matches!(
            self,
            NonradialHr
                | AbstractHardy
                | AbstractRellichRop
                | AbstractRellichNr
                | AppendixHp
                | AppendixHardy
        )
    }

    /// Whether the entry is stated for an arbitrary weight pair (others
    /// are tied to the canonical family or to fixed closed-form weights).
    pub fn pair_capable(self) -> bool {
        use IdentityId::*;
        matches!(
            self,
            AbstractHardy | AbstractRellichRad | AbstractRellichRop | AbstractRellichNr
        )
    }

    /// Whether the entry is an inequality with a computed nonnegative gap
    /// (the others are exact equalities).
    pub fn has_gap(self) -> bool {
        use IdentityId::*;
        matches!(self, NonradialHr | AbstractRellichNr)
    }
}

impl std::fmt::Display for IdentityId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for IdentityId {
    type Err = IdentityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IdentityId::all()
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| IdentityError::UnknownIdentity(s.to_string()))
    }
}

/// Errors from identity verification.
#[derive(Debug, Error)]
pub enum IdentityError {
    /// No catalogue entry with this id.
    #[error("unknown identity id {0:?}")]
    UnknownIdentity(String),
    /// Mode input given to a radial-only entry.
    #[error("{0} is stated for radial functions only")]
    RadialOnly(IdentityId),
    /// Dimension below the entry's gate.
    #[error("{id} requires N >= {min}, got N={got}")]
    DimensionGate {
        /// The entry.
        id: IdentityId,
        /// Its minimum dimension.
        min: u32,
        /// The requested dimension.
        got: u32,
    },
    /// λ-family entry invoked without λ.
    #[error("{0} needs an explicit lambda")]
    LambdaRequired(IdentityId),
    /// Fixed-λ entry invoked with a λ.
    #[error("{0} has a built-in lambda; pass none")]
    LambdaNotAccepted(IdentityId),
    /// A custom pair passed to an entry tied to fixed weights.
    #[error("{0} does not take a custom weight pair")]
    PairNotAccepted(IdentityId),
    /// The expansion's dimension differs from the requested one.
    #[error("input expansion is for N={input}, requested N={requested}")]
    DimensionMismatch {
        /// Dimension the expansion was built for.
        input: u32,
        /// Dimension of the verification request.
        requested: u32,
    },
    /// The non-radial admissibility condition failed for the pair.
    #[error("weight pair fails the admissibility condition: margin {worst_margin} at r={worst_r}")]
    ConditionNotMet {
        /// Most negative value of the admissibility expression.
        worst_margin: f64,
        /// Where it was attained.
        worst_r: f64,
    },
    /// Parameter construction failed.
    #[error(transparent)]
    Pair(#[from] PairError),
    /// Mode machinery failed.
    #[error(transparent)]
    Mode(#[from] ModeError),
    /// Quadrature failed.
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Input function: radial, or a finite mode expansion.
pub enum ProfileInput {
    /// A radial function `u(r)`.
    Radial(Box<dyn RadialProfile>),
    /// A finite expansion `Σ a_n(r) Y_n(σ)`.
    Modes(ModeExpansion),
}

impl ProfileInput {
    fn components(&self) -> Vec<(u32, &dyn RadialProfile)> {
        match self {
            ProfileInput::Radial(p) => vec![(0, p.as_ref())],
            ProfileInput::Modes(e) => e
                .modes()
                .iter()
                .map(|m| (m.n, m.profile.as_ref()))
                .collect(),
        }
    }

    fn is_radial(&self) -> bool {
        matches!(self, ProfileInput::Radial(_))
    }

    fn check_dim(&self, dim: Dimension) -> Result<(), IdentityError> {
        if let ProfileInput::Modes(e) = self {
            if e.dim() != dim {
                return Err(IdentityError::DimensionMismatch {
                    input: e.dim().get(),
                    requested: dim.get(),
                });
            }
        }
        Ok(())
    }
}

/// One labeled term of a verified identity.
#[derive(Debug, Clone, Serialize)]
pub struct Term {
    /// Stable snake_case label.
    pub label: String,
    /// Value of the term, constant included.
    pub value: f64,
}

/// Verification verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Residual within tolerance (and gap nonnegative where applicable).
    Pass,
    /// Residual exceeded tolerance or the gap came out negative.
    Fail,
}

/// Full record of one identity verification.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    /// Catalogue id string.
    pub identity_id: String,
    /// Dimension.
    pub dim: u32,
    /// Spectral parameter used (the fixed one for fixed-λ entries).
    pub lambda: Option<f64>,
    /// Left-hand side value.
    pub lhs: f64,
    /// Right-hand side terms, in display order.
    pub terms: Vec<Term>,
    /// Computed nonnegative slack for inequality entries.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    /// `|lhs − Σ terms − gap|`.
    pub residual: f64,
    /// Residual over the largest participating magnitude.
    pub rel_residual: f64,
    /// Summed quadrature error estimates across all integrals.
    pub quadrature_error_budget: f64,
    /// Pass/fail at the requested tolerance.
    pub verdict: Verdict,
}

impl IdentityReport {
    /// Sum of the right-hand side terms (gap excluded).
    pub fn rhs(&self) -> f64 {
        self.terms.iter().map(|t| t.value).sum()
    }
}

/// Budget-accumulating integral evaluator shared by all assemblies.
struct Acc {
    k: i32,
    tol: f64,
    budget: f64,
}

impl Acc {
    fn new(dim: Dimension, tol: f64) -> Self {
        Acc {
            k: dim.get() as i32,
            tol,
            budget: 0.0,
        }
    }

    /// `coeff · ∫ f sinh^(k_shift + N) dr` with `k_shift` relative to the
    /// volume weight exponent `N−1` (0 → `ψ^(N-1)`, −2 → `ψ^(N-3)`, …).
    fn int(
        &mut self,
        f: &dyn Fn(f64) -> f64,
        k_shift: i32,
        support: (f64, f64),
        coeff: f64,
    ) -> Result<f64, IdentityError> {
        if coeff == 0.0 {
            return Ok(0.0);
        }
        let q = quadrature::integrate_weighted(f, self.k - 1 + k_shift, support, self.tol)?;
        self.budget += coeff.abs() * q.abs_error_estimate;
        Ok(coeff * q.value)
    }
}

/// Verifies a catalogue entry on an input function.
///
/// `lambda` must be given exactly for the λ-family entries
/// ([`IdentityId::accepts_lambda`]) and omitted for the fixed-λ ones.
/// Pair-based entries use the canonical pair at that λ; to use a custom
/// pair call [`verify_with_pair`].
pub fn verify_identity(
    id: IdentityId,
    dim: Dimension,
    lambda: Option<f64>,
    input: &ProfileInput,
    tol: f64,
) -> Result<IdentityReport, IdentityError> {
    let lam = resolve_lambda(id, dim, lambda)?;
    if id.pair_capable() {
        let params = pairs::lambda_params(dim, lam.unwrap_or(0.0))?;
        let pair = BesselPair::canonical(params);
        return verify_with_pair(id, &pair, input, tol);
    }
    gate(id, dim, input)?;
    input.check_dim(dim)?;

    match id {
        IdentityId::RadialHr => radial_hr(id, dim, lam.unwrap(), input, tol),
        IdentityId::HardyRellich0 => radial_hr(id, dim, 0.0, input, tol),
        IdentityId::PoincareL1 => radial_hr(id, dim, dim.lambda1(), input, tol),
        IdentityId::Rellich => rellich(dim, input, tol),
        IdentityId::PoincareL0 => poincare_l0(dim, input, tol),
        IdentityId::FllmHardyGrad => fllm_hardy_grad(dim, input, tol),
        IdentityId::FllmPoincare => first_order(id, dim, dim.lambda1(), input, tol),
        IdentityId::AppendixHp => first_order(id, dim, lam.unwrap(), input, tol),
        IdentityId::AppendixHardy => first_order(id, dim, dim.nf() - 2.0, input, tol),
        IdentityId::NonradialHr => nonradial_hr(dim, lam.unwrap(), input, tol),
        _ => unreachable!("pair-capable ids handled above"),
    }
}

/// Verifies a pair-based entry against an explicit weight pair.
pub fn verify_with_pair(
    id: IdentityId,
    pair: &BesselPair,
    input: &ProfileInput,
    tol: f64,
) -> Result<IdentityReport, IdentityError> {
    if !id.pair_capable() {
        return Err(IdentityError::PairNotAccepted(id));
    }
    let dim = pair.dim();
    gate(id, dim, input)?;
    input.check_dim(dim)?;
    match id {
        IdentityId::AbstractHardy => abstract_hardy(pair, input, tol),
        IdentityId::AbstractRellichRad | IdentityId::AbstractRellichRop => {
            abstract_rellich_exact(id, pair, input, tol)
        }
        IdentityId::AbstractRellichNr => abstract_rellich_nr(pair, input, tol),
        _ => Err(IdentityError::PairNotAccepted(id)),
    }
}

fn resolve_lambda(
    id: IdentityId,
    dim: Dimension,
    lambda: Option<f64>,
) -> Result<Option<f64>, IdentityError> {
    if id.accepts_lambda() {
        match lambda {
            Some(l) => {
                // Range-check through the parameter constructor.
                pairs::lambda_params(dim, l)?;
                Ok(Some(l))
            }
            None => Err(IdentityError::LambdaRequired(id)),
        }
    } else {
        if lambda.is_some() {
            return Err(IdentityError::LambdaNotAccepted(id));
        }
        Ok(id.fixed_lambda(dim))
    }
}

fn gate(id: IdentityId, dim: Dimension, input: &ProfileInput) -> Result<(), IdentityError> {
    if dim.get() < id.min_dim() {
        return Err(IdentityError::DimensionGate {
            id,
            min: id.min_dim(),
            got: dim.get(),
        });
    }
    if !id.mode_capable() && !input.is_radial() {
        return Err(IdentityError::RadialOnly(id));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish(
    id: IdentityId,
    dim: Dimension,
    lambda: Option<f64>,
    lhs: f64,
    terms: Vec<Term>,
    gap: Option<f64>,
    budget: f64,
    tol: f64,
) -> IdentityReport {
    let rhs: f64 = terms.iter().map(|t| t.value).sum();
    let residual = (lhs - rhs - gap.unwrap_or(0.0)).abs();
    let scale = terms
        .iter()
        .map(|t| t.value.abs())
        .fold(lhs.abs(), f64::max)
        .max(gap.map_or(0.0, f64::abs));
    let rel_residual = if scale > 0.0 {
        residual / scale
    } else {
        residual
    };
    let tol_eff = (tol * scale).max(10.0 * budget);
    let pass = residual <= tol_eff && gap.is_none_or(|g| g >= -tol_eff);
    IdentityReport {
        identity_id: id.as_str().to_string(),
        dim: dim.get(),
        lambda,
        lhs,
        terms,
        gap,
        residual,
        rel_residual,
        quadrature_error_budget: budget,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
    }
}

fn term(label: &str, value: f64) -> Term {
    Term {
        label: label.to_string(),
        value,
    }
}

// ---------------------------------------------------------------------------
// Shared integrand builders for a single radial profile.
// ---------------------------------------------------------------------------

fn grad_sq(p: &dyn RadialProfile) -> impl Fn(f64) -> f64 + '_ {
    move |r| {
        let d = p.jet(r).d1;
        d * d
    }
}

fn value_sq(p: &dyn RadialProfile) -> impl Fn(f64) -> f64 + '_ {
    move |r| {
        let v = p.value(r);
        v * v
    }
}

fn radial_laplacian_sq(p: &dyn RadialProfile, nf: f64) -> impl Fn(f64) -> f64 + '_ {
    move |r| {
        let j = p.jet(r);
        let lap = j.d2 + (nf - 1.0) * geometry::coth(r) * j.d1;
        lap * lap
    }
}

/// `(u'' − L1·u')²` — the second-order remainder integrand, where `L1` is
/// the logarithmic derivative of the multiplier.
fn grad_remainder_sq(p: &dyn RadialProfile, params: LambdaParams) -> impl Fn(f64) -> f64 + '_ {
    move |r| {
        let j = p.jet(r);
        let s = j.d2 - params.psi_log_deriv(r) * j.d1;
        s * s
    }
}

/// `(u' − L1·u)²` — the first-order remainder integrand.
fn value_remainder_sq(p: &dyn RadialProfile, params: LambdaParams) -> impl Fn(f64) -> f64 + '_ {
    move |r| {
        let j = p.jet(r);
        let s = j.d1 - params.psi_log_deriv(r) * j.v;
        s * s
    }
}

// ---------------------------------------------------------------------------
// Catalogue assemblies.
// ---------------------------------------------------------------------------

/// RADIAL_HR, plus its fixed-λ displays HARDY_RELLICH_0 and POINCARE_L1.
///
/// ```text
/// ∫(Δ_r u)² w = λ∫u'²w + h²∫u'²/r²·w + ((N/2)²−h²)∫u'²/sinh²·w
///             + γh∫(X/r)u'²w + ∫(u'' − L1_λ u')²w
/// ```
///
/// At λ=0 the 1/sinh² coefficient vanishes ((N/2)² = h²); at λ=λ₁ the
/// mixed X/r coefficient vanishes (γ = 0); the reports list only the
/// surviving displayed terms of each variant.
fn radial_hr(
    id: IdentityId,
    dim: Dimension,
    lam: f64,
    input: &ProfileInput,
    tol: f64,
) -> Result<IdentityReport, IdentityError> {
    let p = radial_profile(input)?;
    let params = pairs::lambda_params(dim, lam)?;
    let (nf, h, g) = (dim.nf(), params.h(), params.gamma());
    let support = p.support();
    let mut acc = Acc::new(dim, tol);

    let lhs = acc.int(&radial_laplacian_sq(p, nf), 0, support, 1.0)?;
    let du2 = grad_sq(p);
    let csch_coeff = nf * nf / 4.0 - h * h;

    let mut terms = Vec::new();
    if id != IdentityId::HardyRellich0 {
        terms.push(term("lambda_grad", acc.int(&du2, 0, support, lam)?));
    }
    terms.push(term(
        "hardy_grad",
        acc.int(&|r| du2(r) / (r * r), 0, support, h * h)?,
    ));
    if id != IdentityId::HardyRellich0 {
        terms.push(term(
            "csch_grad",
            acc.int(&|r| du2(r) * geometry::csch_sq(r), 0, support, csch_coeff)?,
        ));
    }
    if id != IdentityId::PoincareL1 {
        terms.push(term(
            "mixed_grad",
            acc.int(
                &|r| du2(r) * geometry::coth_minus_inv_r(r) / r,
                0,
                support,
                g * h,
            )?,
        ));
    }
    terms.push(term(
        "remainder_grad",
        acc.int(&grad_remainder_sq(p, params), 0, support, 1.0)?,
    ));
    Ok(finish(
        id,
        dim,
        Some(lam),
        lhs,
        terms,
        None,
        acc.budget,
        tol,
    ))
}

/// RELLICH (N ≥ 5):
///
/// ```text
/// ∫(Δ_r u)² w = N²(N−4)²/16 ∫u²/r⁴·w + N²(N−4)(N−1)/8 ∫(X/r³)u²w
///             + N(N−1)/2 ∫(X/r)u'²w + N²/4 ∫(u' − (4−N)/(2r)·u)²/r²·w
///             + ∫(u'' − L1_0 u')²w
/// ```
fn rellich(
    dim: Dimension,
    input: &ProfileInput,
    tol: f64,
) -> Result<IdentityReport, IdentityError> {
    let p = radial_profile(input)?;
    let params = pairs::lambda_params(dim, 0.0)?;
    let nf = dim.nf();
    let support = p.support();
    let mut acc = Acc::new(dim, tol);

    let lhs = acc.int(&radial_laplacian_sq(p, nf), 0, support, 1.0)?;
    let u2 = value_sq(p);
    let du2 = grad_sq(p);
    let terms = vec![
        term(
            "weight_r4",
            acc.int(
                &|r| u2(r) / (r * r * r * r),
                0,
                support,
                nf * nf * (nf - 4.0) * (nf - 4.0) / 16.0,
            )?,
        ),
        term(
            "mixed_r3",
            acc.int(
                &|r| u2(r) * geometry::coth_minus_inv_r(r) / (r * r * r),
                0,
                support,
                nf * nf * (nf - 4.0) * (nf - 1.0) / 8.0,
            )?,
        ),
        term(
            "mixed_grad",
            acc.int(
                &|r| du2(r) * geometry::coth_minus_inv_r(r) / r,
                0,
                support,
                nf * (nf - 1.0) / 2.0,
            )?,
        ),
        term(
            "hardy_remainder",
            acc.int(
                &|r| {
                    let j = p.jet(r);
                    let s = j.d1 - (4.0 - nf) / (2.0 * r) * j.v;
                    s * s / (r * r)
                },
                0,
                support,
                nf * nf / 4.0,
            )?,
        ),
        term(
            "remainder_grad",
            acc.int(&grad_remainder_sq(p, params), 0, support, 1.0)?,
        ),
    ];
    Ok(finish(
        IdentityId::Rellich,
        dim,
        Some(0.0),
        lhs,
        terms,
        None,
        acc.budget,
        tol,
    ))
}

/// POINCARE_L0 (split form):
///
/// ```text
/// ∫(Δ_r u)² w = λ₁²∫u²w + λ₁/4 ∫u²/r²·w + (N−1)³(N−3)/16 ∫u²/sinh²·w
///             + 1/4 ∫u'²/r²·w + (N²−1)/4 ∫u'²/sinh²·w
///             + λ₁∫(u' − L1 u)²w + ∫(u'' − L1 u')²w
/// ```
///
/// with `L1 = L1_{λ₁}`. Both remainders use the same top-of-range
/// multiplier; the u-remainder enters scaled by λ₁.
fn poincare_l0(
    dim: Dimension,
    input: &ProfileInput,
    tol: f64,
) -> Result<IdentityReport, IdentityError> {
    let p = radial_profile(input)?;
    let l1 = dim.lambda1();
    let params = pairs::lambda_params(dim, l1)?;
    let nf = dim.nf();
    let support = p.support();
    let mut acc = Acc::new(dim, tol);

    let lhs = acc.int(&radial_laplacian_sq(p, nf), 0, support, 1.0)?;
    let u2 = value_sq(p);
    let du2 = grad_sq(p);
    let terms = vec![
        term("lambda_sq_plain", acc.int(&u2, 0, support, l1 * l1)?),
        term(
            "hardy_plain",
            acc.int(&|r| u2(r) / (r * r), 0, support, l1 / 4.0)?,
        ),
        term(
            "csch_plain",
            acc.int(
                &|r| u2(r) * geometry::csch_sq(r),
                0,
                support,
                (nf - 1.0).powi(3) * (nf - 3.0) / 16.0,
            )?,
        ),
        term(
            "hardy_grad",
            acc.int(&|r| du2(r) / (r * r), 0, support, 0.25)?,
        ),
        term(
            "csch_grad",
            acc.int(
                &|r| du2(r) * geometry::csch_sq(r),
                0,
                support,
                (nf * nf - 1.0) / 4.0,
            )?,
        ),
        term(
            "remainder_plain_scaled",
            acc.int(&value_remainder_sq(p, params), 0, support, l1)?,
        ),
        term(
            "remainder_grad",
            acc.int(&grad_remainder_sq(p, params), 0, support, 1.0)?,
        ),
    ];
    Ok(finish(
        IdentityId::PoincareL0,
        dim,
        Some(l1),
        lhs,
        terms,
        None,
        acc.budget,
        tol,
    ))
}

/// FLLM_HARDY_GRAD (N ≥ 5):
///
/// ```text
/// ∫u'²/r²·w = ((N−4)/2)²∫u²/r⁴·w + (N−4)(N−1)/2 ∫(X/r³)u²w
///           + ∫(u' − (4−N)/(2r)·u)²/r²·w
/// ```
fn fllm_hardy_grad(
    dim: Dimension,
    input: &ProfileInput,
    tol: f64,
) -> Result<IdentityReport, IdentityError> {
    let p = radial_profile(input)?;
    let nf = dim.nf();
    let support = p.support();
    let mut acc = Acc::new(dim, tol);

    let du2 = grad_sq(p);
    let u2 = value_sq(p);
    let lhs = acc.int(&|r| du2(r) / (r * r), 0, support, 1.0)?;
    let terms = vec![
        term(
            "weight_r4",
            acc.int(
                &|r| u2(r) / (r * r * r * r),
                0,
                support,
                (nf - 4.0) * (nf - 4.0) / 4.0,
            )?,
        ),
        term(
            "mixed_r3",
            acc.int(
                &|r| u2(r) * geometry::coth_minus_inv_r(r) / (r * r * r),
                0,
                support,
                (nf - 4.0) * (nf - 1.0) / 2.0,
            )?,
        ),
        term(
            "hardy_remainder",
            acc.int(
                &|r| {
                    let j = p.jet(r);
                    let s = j.d1 - (4.0 - nf) / (2.0 * r) * j.v;
                    s * s / (r * r)
                },
                0,
                support,
                1.0,
            )?,
        ),
    ];
    Ok(finish(
        IdentityId::FllmHardyGrad,
        dim,
        None,
        lhs,
        terms,
        None,
        acc.budget,
        tol,
    ))
}

/// First-order λ-family: APPENDIX_HP (free λ), FLLM_POINCARE (λ = λ₁) and
/// APPENDIX_HARDY (λ = N−2). Mode-capable:
///
/// ```text
/// ∫|∇u|² dv = λ∫u² + h²∫u²/r² + (((N−2)/2)²−h²)∫u²/sinh²
///           + γh∫(X/r)u² + Σ_n [∫(a_n'−L1_λ a_n)²w + λ_n∫a_n²ψ^(N-3)]
/// ```
///
/// where the last bracket is `∫Ψ_λ²|∇(u/Ψ_λ)|² dv` written through the
/// multiplier's logarithmic derivative. At λ = N−2 the 1/sinh² coefficient
/// is exactly zero and is omitted from the display.
fn first_order(
    id: IdentityId,
    dim: Dimension,
    lam: f64,
    input: &ProfileInput,
    tol: f64,
) -> Result<IdentityReport, IdentityError> {
    let params = pairs::lambda_params(dim, lam)?;
    let (nf, h, g) = (dim.nf(), params.h(), params.gamma());
    let comps = input.components();
    let mut acc = Acc::new(dim, tol);

    let q = (nf - 2.0) * (nf - 2.0) / 4.0;
    let csch_coeff = q - h * h;

    let mut lhs = 0.0;
    let mut lambda_plain = 0.0;
    let mut hardy_plain = 0.0;
    let mut csch_plain = 0.0;
    let mut mixed_plain = 0.0;
    let mut remainder = 0.0;
    for &(deg, p) in &comps {
        let support = p.support();
        let lam_n = modes::mode_eigenvalue(dim, deg);
        let du2 = grad_sq(p);
        let u2 = value_sq(p);
        lhs += acc.int(&du2, 0, support, 1.0)?;
        lhs += acc.int(&u2, -2, support, lam_n)?;
        lambda_plain += acc.int(&u2, 0, support, lam)?;
        hardy_plain += acc.int(&|r| u2(r) / (r * r), 0, support, h * h)?;
        csch_plain += acc.int(&u2, -2, support, csch_coeff)?;
        mixed_plain += acc.int(
            &|r| u2(r) * geometry::coth_minus_inv_r(r) / r,
            0,
            support,
            g * h,
        )?;
        remainder += acc.int(&value_remainder_sq(p, params), 0, support, 1.0)?;
        remainder += acc.int(&u2, -2, support, lam_n)?;
    }

    let mut terms = vec![
        term("lambda_plain", lambda_plain),
        term("hardy_plain", hardy_plain),
    ];
    if id != IdentityId::AppendixHardy {
        terms.push(term("csch_plain", csch_plain));
    }
    if id != IdentityId::FllmPoincare {
        terms.push(term("mixed_plain", mixed_plain));
    }
    terms.push(term("remainder_twisted", remainder));
    Ok(finish(
        id,
        dim,
        Some(lam),
        lhs,
        terms,
        None,
        acc.budget,
        tol,
    ))
}

/// NONRADIAL_HR (N ≥ 5), λ-family, mode-capable, inequality:
///
/// ```text
/// ∫(Δu)² dv = λ∫|∇u|² + h²∫|∇u|²/r² + ((N/2)²−h²)∫|∇u|²/sinh²
///           + γh∫(X/r)|∇u|²
///           + Σ_n [∫(a_n''−L1_λ a_n')²w + λ_n∫a_n'²ψ^(N-3)]
///           + Σ_n B_n,            B_n ≥ 0
/// ```
///
/// with `B_n` the per-mode gap functional at the canonical pair.
fn nonradial_hr(
    dim: Dimension,
    lam: f64,
    input: &ProfileInput,
    tol: f64,
) -> Result<IdentityReport, IdentityError> {
    let params = pairs::lambda_params(dim, lam)?;
    let pair = BesselPair::canonical(params);
    let (nf, h, g) = (dim.nf(), params.h(), params.gamma());
    let comps = input.components();
    let mut acc = Acc::new(dim, tol);

    let csch_coeff = nf * nf / 4.0 - h * h;
    let mut lhs = 0.0;
    let mut lambda_grad = 0.0;
    let mut hardy_grad = 0.0;
    let mut csch_grad = 0.0;
    let mut mixed_grad = 0.0;
    let mut remainder = 0.0;
    let mut gap = 0.0;
    for &(deg, p) in &comps {
        let support = p.support();
        let lam_n = modes::mode_eigenvalue(dim, deg);
        let q = modes::mode_laplacian_sq(dim, deg, p, &|_| 1.0, modes::LaplacianForm::Fused, tol)?;
        acc.budget += q.abs_error_estimate;
        lhs += q.value;

        // Each ∫|∇u|²·g dv splits as ∫a'²·g·w + λ_n∫a²·g·ψ^(N-3).
        let du2 = grad_sq(p);
        let u2 = value_sq(p);
        let grad_with = |acc: &mut Acc, gfn: &dyn Fn(f64) -> f64, coeff: f64| {
            let a = acc.int(&|r| du2(r) * gfn(r), 0, support, coeff)?;
            let b = acc.int(&|r| u2(r) * gfn(r), -2, support, coeff * lam_n)?;
            Ok::<f64, IdentityError>(a + b)
        };
        lambda_grad += grad_with(&mut acc, &|_| 1.0, lam)?;
        hardy_grad += grad_with(&mut acc, &|r| 1.0 / (r * r), h * h)?;
        csch_grad += grad_with(&mut acc, &geometry::csch_sq, csch_coeff)?;
        mixed_grad += grad_with(&mut acc, &|r| geometry::coth_minus_inv_r(r) / r, g * h)?;

        remainder += acc.int(&grad_remainder_sq(p, params), 0, support, 1.0)?;
        remainder += acc.int(&du2, -2, support, lam_n)?;

        let b = modes::gap_functional(&pair, deg, p, tol)?;
        acc.budget += b.budget;
        gap += b.value();
    }

    let terms = vec![
        term("lambda_grad", lambda_grad),
        term("hardy_grad", hardy_grad),
        term("csch_grad", csch_grad),
        term("mixed_grad", mixed_grad),
        term("remainder_modes", remainder),
    ];
    Ok(finish(
        IdentityId::NonradialHr,
        dim,
        Some(lam),
        lhs,
        terms,
        Some(gap),
        acc.budget,
        tol,
    ))
}

/// ABSTRACT_HARDY for a weight pair `(V, W, f)`, mode-capable:
///
/// ```text
/// ∫V|∇u|² dv = ∫W u² dv − (N−1)∫V (f'/f)(coth r − 1/r) u² dv
///            + Σ_n [∫V(a_n' − (f'/f)a_n)²w + λ_n∫V a_n²ψ^(N-3)]
/// ```
fn abstract_hardy(
    pair: &BesselPair,
    input: &ProfileInput,
    tol: f64,
) -> Result<IdentityReport, IdentityError> {
    let dim = pair.dim();
    let nf = dim.nf();
    let v = pair.v();
    let comps = input.components();
    let mut acc = Acc::new(dim, tol);

    let mut lhs = 0.0;
    let mut companion = 0.0;
    let mut curvature_cancel = 0.0;
    let mut remainder = 0.0;
    for &(deg, p) in &comps {
        let support = p.support();
        let lam_n = modes::mode_eigenvalue(dim, deg);
        let du2 = grad_sq(p);
        let u2 = value_sq(p);
        lhs += acc.int(&|r| v.value(r) * du2(r), 0, support, 1.0)?;
        lhs += acc.int(&|r| v.value(r) * u2(r), -2, support, lam_n)?;
        companion += acc.int(&|r| pair.w(r) * u2(r), 0, support, 1.0)?;
        curvature_cancel += acc.int(
            &|r| v.value(r) * pair.f().log_deriv(r) * geometry::coth_minus_inv_r(r) * u2(r),
            0,
            support,
            -(nf - 1.0),
        )?;
        remainder += acc.int(
            &|r| {
                let j = p.jet(r);
                let s = j.d1 - pair.f().log_deriv(r) * j.v;
                v.value(r) * s * s
            },
            0,
            support,
            1.0,
        )?;
        remainder += acc.int(&|r| v.value(r) * u2(r), -2, support, lam_n)?;
    }
    let terms = vec![
        term("companion_plain", companion),
        term("curvature_cancel", curvature_cancel),
        term("remainder_twisted", remainder),
    ];
    Ok(finish(
        IdentityId::AbstractHardy,
        dim,
        None,
        lhs,
        terms,
        None,
        acc.budget,
        tol,
    ))
}

/// ABSTRACT_RELLICH_RAD / ABSTRACT_RELLICH_ROP — the exact second-order
/// pair identity in radial-operator semantics:
///
/// ```text
/// ∫V(Δ_r u)² dv = ∫W|∇_r u|² + (N−1)∫(V/sinh² − V' coth r)|∇_r u|²
///               − (N−1)∫V(f'/f)(coth r − 1/r)|∇_r u|²
///               + Σ_n ∫V(a_n'' − (f'/f)a_n')² w
/// ```
///
/// For the RAD variant the input must be radial; ROP accepts any mode
/// expansion (the identity applies per mode with no angular terms, because
/// `Δ_r` and `∇_r` act on the radial factor alone).
fn abstract_rellich_exact(
    id: IdentityId,
    pair: &BesselPair,
    input: &ProfileInput,
    tol: f64,
) -> Result<IdentityReport, IdentityError> {
    let dim = pair.dim();
    let nf = dim.nf();
    let v = pair.v();
    let comps = input.components();
    let mut acc = Acc::new(dim, tol);

    let mut lhs = 0.0;
    let mut companion = 0.0;
    let mut curvature = 0.0;
    let mut logd = 0.0;
    let mut remainder = 0.0;
    for &(_deg, p) in &comps {
        let support = p.support();
        let du2 = grad_sq(p);
        lhs += acc.int(
            &|r| {
                let j = p.jet(r);
                let lap = j.d2 + (nf - 1.0) * geometry::coth(r) * j.d1;
                v.value(r) * lap * lap
            },
            0,
            support,
            1.0,
        )?;
        companion += acc.int(&|r| pair.w(r) * du2(r), 0, support, 1.0)?;
        curvature += acc.int(
            &|r| (v.value(r) * geometry::csch_sq(r) - v.deriv(r) * geometry::coth(r)) * du2(r),
            0,
            support,
            nf - 1.0,
        )?;
        logd += acc.int(
            &|r| v.value(r) * pair.f().log_deriv(r) * geometry::coth_minus_inv_r(r) * du2(r),
            0,
            support,
            -(nf - 1.0),
        )?;
        remainder += acc.int(
            &|r| {
                let j = p.jet(r);
                let s = j.d2 - pair.f().log_deriv(r) * j.d1;
                v.value(r) * s * s
            },
            0,
            support,
            1.0,
        )?;
    }
    let terms = vec![
        term("companion_grad", companion),
        term("curvature_grad", curvature),
        term("log_deriv_grad", logd),
        term("remainder_twisted", remainder),
    ];
    Ok(finish(id, dim, None, lhs, terms, None, acc.budget, tol))
}

/// ABSTRACT_RELLICH_NR (N ≥ 5, admissible pair) — the full-Laplacian
/// inequality, mode-capable:
///
/// ```text
/// ∫V(Δu)² dv = ∫W|∇u|² + (N−1)∫(V/sinh² − V' coth r)|∇u|²
///            − (N−1)∫V(f'/f)(coth r − 1/r)|∇u|²
///            + Σ_n [∫V(a_n''−(f'/f)a_n')²w + λ_n∫V a_n'²ψ^(N-3)]
///            + Σ_n B_n,            B_n ≥ 0
/// ```
fn abstract_rellich_nr(
    pair: &BesselPair,
    input: &ProfileInput,
    tol: f64,
) -> Result<IdentityReport, IdentityError> {
    let dim = pair.dim();
    let nf = dim.nf();
    let v = pair.v();

    // Fail closed if the weight does not satisfy the admissibility
    // condition on the working grid.
    let grid = pairs::log_grid(1e-3, 20.0, 400);
    let cond = pairs::check_nonradial_condition(pair, &grid)?;
    if !cond.satisfied {
        return Err(IdentityError::ConditionNotMet {
            worst_margin: cond.worst_margin,
            worst_r: cond.worst_r,
        });
    }

    let comps = input.components();
    let mut acc = Acc::new(dim, tol);
    let mut lhs = 0.0;
    let mut companion = 0.0;
    let mut curvature = 0.0;
    let mut logd = 0.0;
    let mut remainder = 0.0;
    let mut gap = 0.0;
    for &(deg, p) in &comps {
        let support = p.support();
        let lam_n = modes::mode_eigenvalue(dim, deg);
        let q = modes::mode_laplacian_sq(
            dim,
            deg,
            p,
            &|r| v.value(r),
            modes::LaplacianForm::Fused,
            tol,
        )?;
        acc.budget += q.abs_error_estimate;
        lhs += q.value;

        let du2 = grad_sq(p);
        let u2 = value_sq(p);
        let grad_with = |acc: &mut Acc, gfn: &dyn Fn(f64) -> f64, coeff: f64| {
            let a = acc.int(&|r| du2(r) * gfn(r), 0, support, coeff)?;
            let b = acc.int(&|r| u2(r) * gfn(r), -2, support, coeff * lam_n)?;
            Ok::<f64, IdentityError>(a + b)
        };
        companion += grad_with(&mut acc, &|r| pair.w(r), 1.0)?;
        curvature += grad_with(
            &mut acc,
            &|r| v.value(r) * geometry::csch_sq(r) - v.deriv(r) * geometry::coth(r),
            nf - 1.0,
        )?;
        logd += grad_with(
            &mut acc,
            &|r| v.value(r) * pair.f().log_deriv(r) * geometry::coth_minus_inv_r(r),
            -(nf - 1.0),
        )?;

        remainder += acc.int(
            &|r| {
                let j = p.jet(r);
                let s = j.d2 - pair.f().log_deriv(r) * j.d1;
                v.value(r) * s * s
            },
            0,
            support,
            1.0,
        )?;
        remainder += acc.int(&|r| v.value(r) * du2(r), -2, support, lam_n)?;

        let b = modes::gap_functional(pair, deg, p, tol)?;
        acc.budget += b.budget;
        gap += b.value();
    }
    let terms = vec![
        term("companion_grad", companion),
        term("curvature_grad", curvature),
        term("log_deriv_grad", logd),
        term("remainder_twisted", remainder),
    ];
    Ok(finish(
        IdentityId::AbstractRellichNr,
        dim,
        None,
        lhs,
        terms,
        Some(gap),
        acc.budget,
        tol,
    ))
}

fn radial_profile(input: &ProfileInput) -> Result<&dyn RadialProfile, IdentityError> {
    match input {
        ProfileInput::Radial(p) => Ok(p.as_ref()),
        ProfileInput::Modes(_) => unreachable!("gated before dispatch"),
    }
}

// ---------------------------------------------------------------------------
// Displayed-constant tables and cross-consistency.
// ---------------------------------------------------------------------------

/// Closed-form displayed constants of an entry at `(N, λ)`.
///
/// These are the numbers printed next to each term in the catalogue
/// displays. For [`IdentityId::PoincareL0`] the list also carries the
/// combined constant `((N−1)/2)² + 1` that the compact one-line display
/// attaches to the gradient Hardy term after merging the two remainders;
/// the verifier itself always works with the split form.
pub fn coefficient_table(
    id: IdentityId,
    dim: Dimension,
    lambda: Option<f64>,
) -> Result<Vec<(String, f64)>, IdentityError> {
    let nf = dim.nf();
    let lam = resolve_lambda(id, dim, lambda)?;
    let params = match lam {
        Some(l) => Some(pairs::lambda_params(dim, l)?),
        None => None,
    };
    let h = params.map_or(0.0, |p| p.h());
    let g = params.map_or(0.0, |p| p.gamma());
    let row = |label: &str, value: f64| (label.to_string(), value);

    Ok(match id {
        IdentityId::RadialHr => vec![
            row("lambda_grad", lam.unwrap()),
            row("hardy_grad", h * h),
            row("csch_grad", nf * nf / 4.0 - h * h),
            row("mixed_grad", g * h),
        ],
        IdentityId::HardyRellich0 => vec![
            row("hardy_grad", nf * nf / 4.0),
            row("mixed_grad", nf * (nf - 1.0) / 2.0),
        ],
        IdentityId::Rellich => vec![
            row("weight_r4", nf * nf * (nf - 4.0) * (nf - 4.0) / 16.0),
            row("mixed_r3", nf * nf * (nf - 4.0) * (nf - 1.0) / 8.0),
            row("mixed_grad", nf * (nf - 1.0) / 2.0),
            row("hardy_remainder", nf * nf / 4.0),
        ],
        IdentityId::PoincareL1 => vec![
            row("lambda_grad", dim.lambda1()),
            row("hardy_grad", 0.25),
            row("csch_grad", (nf * nf - 1.0) / 4.0),
        ],
        IdentityId::PoincareL0 => {
            let l1 = dim.lambda1();
            vec![
                row("lambda_sq_plain", l1 * l1),
                row("hardy_plain", l1 / 4.0),
                row("csch_plain", (nf - 1.0).powi(3) * (nf - 3.0) / 16.0),
                row("hardy_grad", 0.25),
                row("csch_grad", (nf * nf - 1.0) / 4.0),
                row("combined_display", (nf - 1.0) * (nf - 1.0) / 4.0 + 1.0),
            ]
        }
        IdentityId::FllmHardyGrad => vec![
            row("weight_r4", (nf - 4.0) * (nf - 4.0) / 4.0),
            row("mixed_r3", (nf - 4.0) * (nf - 1.0) / 2.0),
        ],
        IdentityId::FllmPoincare => vec![
            row("lambda_plain", dim.lambda1()),
            row("hardy_plain", 0.25),
            row("csch_plain", (nf - 1.0) * (nf - 3.0) / 4.0),
        ],
        IdentityId::NonradialHr => vec![
            row("lambda_grad", lam.unwrap()),
            row("hardy_grad", h * h),
            row("csch_grad", nf * nf / 4.0 - h * h),
            row("mixed_grad", g * h),
        ],
        IdentityId::AppendixHp => vec![
            row("lambda_plain", lam.unwrap()),
            row("hardy_plain", h * h),
            row("csch_plain", (nf - 2.0) * (nf - 2.0) / 4.0 - h * h),
            row("mixed_plain", g * h),
        ],
        IdentityId::AppendixHardy => vec![
            row("lambda_plain", nf - 2.0),
            row("hardy_plain", (nf - 2.0) * (nf - 2.0) / 4.0),
            row("mixed_plain", (nf - 2.0) * (nf - 3.0) / 2.0),
        ],
        IdentityId::AbstractHardy
        | IdentityId::AbstractRellichRad
        | IdentityId::AbstractRellichRop
        | IdentityId::AbstractRellichNr => vec![row("curvature_factor", nf - 1.0)],
    })
}

/// Cross-consistency record tying the pair identities to the λ-family
/// displays at the canonical pair.
#[derive(Debug, Clone, Serialize)]
pub struct CrossConsistency {
    /// `∫W_λ u'² w` computed directly from the companion weight.
    pub w_direct: f64,
    /// The same number reassembled from the five decomposed pieces.
    pub w_decomposed: f64,
    /// `|w_direct − w_decomposed|`.
    pub residual: f64,
    /// Scale for the residual.
    pub scale: f64,
    /// Quadrature budget of all participating integrals.
    pub budget: f64,
    /// `(N−1)·∫u'²/sinh²·w` — the curvature shift that moves the
    /// u²-display coefficient `((N−2)/2)²−h²` to the gradient-display
    /// coefficient `(N/2)²−h²`.
    pub curvature_shift: f64,
    /// `((N/2)²−h²)·∫u'²/sinh²·w`, rebuilt as the sum of the raw
    /// companion piece and the curvature shift; exact to rounding.
    pub csch_displayed: f64,
    /// `−(N−1)·∫(Ψ'/Ψ)(coth−1/r)u'²w`, the term that cancels the
    /// log-derivative part folded into `W_λ`.
    pub curvature_cancel: f64,
}

/// Decomposes `∫W_λ u'² w` into the five displayed pieces and checks the
/// recombination, tying the abstract pair route and the λ-display route to
/// the same numbers.
pub fn cross_consistency(
    dim: Dimension,
    lambda: f64,
    p: &dyn RadialProfile,
    tol: f64,
) -> Result<CrossConsistency, IdentityError> {
    let params = pairs::lambda_params(dim, lambda)?;
    let (nf, h, g) = (dim.nf(), params.h(), params.gamma());
    let q = (nf - 2.0) * (nf - 2.0) / 4.0;
    let support = p.support();
    let mut acc = Acc::new(dim, tol);
    let du2 = grad_sq(p);

    let w_direct = acc.int(&|r| params.w_lambda(r) * du2(r), 0, support, 1.0)?;
    let u_plain = acc.int(&du2, 0, support, 1.0)?;
    let u_hardy = acc.int(&|r| du2(r) / (r * r), 0, support, 1.0)?;
    let u_csch = acc.int(&|r| du2(r) * geometry::csch_sq(r), 0, support, 1.0)?;
    let u_x = acc.int(
        &|r| du2(r) * geometry::coth_minus_inv_r(r) / r,
        0,
        support,
        1.0,
    )?;
    let u_logd = acc.int(
        &|r| params.psi_log_deriv(r) * geometry::coth_minus_inv_r(r) * du2(r),
        0,
        support,
        1.0,
    )?;

    let w_decomposed = lambda * u_plain
        + h * h * u_hardy
        + (q - h * h) * u_csch
        + g * h * u_x
        + (nf - 1.0) * u_logd;
    let scale = [
        lambda * u_plain,
        h * h * u_hardy,
        (q - h * h) * u_csch,
        g * h * u_x,
        (nf - 1.0) * u_logd,
    ]
    .iter()
    .map(|t| t.abs())
    .fold(w_direct.abs(), f64::max);

    Ok(CrossConsistency {
        w_direct,
        w_decomposed,
        residual: (w_direct - w_decomposed).abs(),
        scale,
        budget: acc.budget,
        curvature_shift: (nf - 1.0) * u_csch,
        csch_displayed: (q - h * h) * u_csch + (nf - 1.0) * u_csch,
        curvature_cancel: -(nf - 1.0) * u_logd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::ModeFunction;
    use crate::pairs::{lambda_params, Solution, WeightFamily};
    use crate::profiles::{make_bump, PolyBridge, SineBump};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn dim(n: u32) -> Dimension {
        Dimension::new(n).unwrap()
    }

    fn bump_input() -> ProfileInput {
        ProfileInput::Radial(Box::new(make_bump(0.5, 2.5, 1.0).unwrap()))
    }

    fn two_mode_input(d: Dimension) -> ProfileInput {
        ProfileInput::Modes(
            ModeExpansion::new(
                d,
                vec![
                    ModeFunction::new(0, Box::new(make_bump(0.5, 2.5, 1.0).unwrap())),
                    ModeFunction::new(2, Box::new(SineBump::new(0.8, 3.0, 0.6).unwrap())),
                ],
            )
            .unwrap(),
        )
    }

    fn assert_pass(rep: &IdentityReport) {
        assert_eq!(
            rep.verdict,
            Verdict::Pass,
            "{} N={} λ={:?}: lhs={} rhs={} gap={:?} residual={} budget={}",
            rep.identity_id,
            rep.dim,
            rep.lambda,
            rep.lhs,
            rep.rhs(),
            rep.gap,
            rep.residual,
            rep.quadrature_error_budget
        );
    }

    #[test]
    fn radial_family_passes_across_dimensions_and_lambdas() {
        let input = bump_input();
        for n in [2u32, 3, 5, 8] {
            let d = dim(n);
            for lam in [0.0, 0.3 * d.lambda1(), d.lambda1()] {
                let rep =
                    verify_identity(IdentityId::RadialHr, d, Some(lam), &input, 1e-10).unwrap();
                assert_pass(&rep);
                assert!(rep.rel_residual < 1e-8);
            }
        }
    }

    #[test]
    fn fixed_lambda_displays_pass() {
        let input = bump_input();
        for n in [2u32, 3, 5, 8] {
            let d = dim(n);
            for id in [
                IdentityId::HardyRellich0,
                IdentityId::PoincareL1,
                IdentityId::PoincareL0,
            ] {
                let rep = verify_identity(id, d, None, &input, 1e-10).unwrap();
                assert_pass(&rep);
            }
            let rep = verify_identity(IdentityId::FllmPoincare, d, None, &input, 1e-10).unwrap();
            assert_pass(&rep);
        }
    }

    #[test]
    fn fourth_power_entries_pass_where_stated() {
        let input = bump_input();
        for n in [5u32, 6, 8, 12] {
            let d = dim(n);
            let rep = verify_identity(IdentityId::Rellich, d, None, &input, 1e-10).unwrap();
            assert_pass(&rep);
            let rep = verify_identity(IdentityId::FllmHardyGrad, d, None, &input, 1e-10).unwrap();
            assert_pass(&rep);
        }
    }

    #[test]
    fn endpoint_displays_agree_with_the_family() {
        // λ=0 and λ=λ₁ reports carry exactly the same numbers as the
        // λ-family evaluated there, term by displayed term.
        let input = bump_input();
        let d = dim(5);

        let family0 = verify_identity(IdentityId::RadialHr, d, Some(0.0), &input, 1e-10).unwrap();
        let display0 = verify_identity(IdentityId::HardyRellich0, d, None, &input, 1e-10).unwrap();
        assert_relative_eq!(family0.lhs, display0.lhs, max_relative = 1e-12);
        for t in &display0.terms {
            let f = family0.terms.iter().find(|ft| ft.label == t.label).unwrap();
            assert_relative_eq!(f.value, t.value, max_relative = 1e-10, epsilon = 1e-12);
        }

        let family1 =
            verify_identity(IdentityId::RadialHr, d, Some(d.lambda1()), &input, 1e-10).unwrap();
        let display1 = verify_identity(IdentityId::PoincareL1, d, None, &input, 1e-10).unwrap();
        for t in &display1.terms {
            let f = family1.terms.iter().find(|ft| ft.label == t.label).unwrap();
            assert_relative_eq!(f.value, t.value, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn endpoint_coefficients_collapse_exactly() {
        for n in [2u32, 3, 5, 8, 17] {
            let d = dim(n);
            let nf = d.nf();
            let p0 = lambda_params(d, 0.0).unwrap();
            assert_eq!(p0.h() * p0.h(), nf * nf / 4.0);
            assert_eq!(nf * nf / 4.0 - p0.h() * p0.h(), 0.0);
            assert_eq!(p0.gamma() * p0.h(), nf * (nf - 1.0) / 2.0);
            let p1 = lambda_params(d, d.lambda1()).unwrap();
            assert!((p1.h() * p1.h() - 0.25).abs() < 1e-14);
            assert!((nf * nf / 4.0 - p1.h() * p1.h() - (nf * nf - 1.0) / 4.0).abs() < 1e-13);
            assert!((p1.gamma() * p1.h()).abs() < 1e-7);
        }
    }

    #[test]
    fn first_order_family_passes_with_modes() {
        for n in [3u32, 5, 8] {
            let d = dim(n);
            let input = two_mode_input(d);
            for lam in [0.0, 0.5 * d.lambda1(), d.lambda1()] {
                let rep =
                    verify_identity(IdentityId::AppendixHp, d, Some(lam), &input, 1e-10).unwrap();
                assert_pass(&rep);
            }
            let rep = verify_identity(IdentityId::AppendixHardy, d, None, &input, 1e-10).unwrap();
            assert_pass(&rep);
        }
    }

    #[test]
    fn appendix_hardy_csch_coefficient_is_exactly_zero() {
        // λ = N−2 ⇒ γ = N−3, h = (N−2)/2, and ((N−2)/2)² − h² = 0: the
        // sinh⁻² term drops from the display.
        for n in [3u32, 4, 5, 8, 33] {
            let d = dim(n);
            let p = lambda_params(d, d.nf() - 2.0).unwrap();
            assert_relative_eq!(p.gamma(), d.nf() - 3.0, max_relative = 1e-14);
            assert_relative_eq!(p.h(), (d.nf() - 2.0) / 2.0, max_relative = 1e-14);
            let table = coefficient_table(IdentityId::AppendixHardy, d, None).unwrap();
            assert!(table.iter().all(|(l, _)| l != "csch_plain"));
            let hp = coefficient_table(IdentityId::AppendixHp, d, Some(d.nf() - 2.0)).unwrap();
            let csch = hp.iter().find(|(l, _)| l == "csch_plain").unwrap().1;
            assert!(csch.abs() < 1e-12, "N={n}: {csch}");
        }
    }

    #[test]
    fn nonradial_hr_accounts_for_the_gap() {
        let d = dim(5);
        let input = two_mode_input(d);
        for lam in [0.0, 2.0, d.lambda1()] {
            let rep =
                verify_identity(IdentityId::NonradialHr, d, Some(lam), &input, 1e-10).unwrap();
            assert_pass(&rep);
            let gap = rep.gap.unwrap();
            assert!(gap > 0.0, "λ={lam}: gap {gap}");
            // With the gap dropped the residual must become exactly the
            // gap: the inequality is strict for genuine non-radial input.
            assert_relative_eq!(rep.lhs - rep.rhs(), gap, max_relative = 1e-6);
        }
    }

    #[test]
    fn nonradial_hr_gap_vanishes_for_radial_input() {
        let d = dim(6);
        let rep =
            verify_identity(IdentityId::NonradialHr, d, Some(1.0), &bump_input(), 1e-10).unwrap();
        assert_pass(&rep);
        assert_eq!(rep.gap, Some(0.0));
    }

    #[test]
    fn abstract_entries_pass_at_canonical_pairs() {
        for n in [2u32, 3, 5] {
            let d = dim(n);
            let rep = verify_identity(
                IdentityId::AbstractHardy,
                d,
                Some(0.4 * d.lambda1()),
                &bump_input(),
                1e-10,
            )
            .unwrap();
            assert_pass(&rep);
            let rep = verify_identity(
                IdentityId::AbstractRellichRad,
                d,
                Some(0.9 * d.lambda1()),
                &bump_input(),
                1e-10,
            )
            .unwrap();
            assert_pass(&rep);
        }
    }

    #[test]
    fn abstract_hardy_handles_mode_input() {
        let d = dim(5);
        let rep = verify_identity(
            IdentityId::AbstractHardy,
            d,
            Some(1.0),
            &two_mode_input(d),
            1e-10,
        )
        .unwrap();
        assert_pass(&rep);
    }

    #[test]
    fn rop_is_exact_for_mode_expansions() {
        // The radial-operator variant stays an equality for non-radial
        // input — the gap lives entirely in the full-Laplacian variant.
        let d = dim(5);
        let rep = verify_identity(
            IdentityId::AbstractRellichRop,
            d,
            Some(2.0),
            &two_mode_input(d),
            1e-10,
        )
        .unwrap();
        assert_pass(&rep);
        assert!(rep.gap.is_none());
        assert!(rep.rel_residual < 1e-8);
    }

    #[test]
    fn nr_matches_rop_plus_angular_terms() {
        let d = dim(5);
        let input = two_mode_input(d);
        let rep =
            verify_identity(IdentityId::AbstractRellichNr, d, Some(1.0), &input, 1e-10).unwrap();
        assert_pass(&rep);
        assert!(rep.gap.unwrap() > 0.0);
    }

    #[test]
    fn nr_on_custom_pair_with_admissible_weight() {
        // V = r², N = 6: condition = (N−5)r²/sinh² + 6r coth − 2 + (N−4)r²,
        // positive on the grid; the identity-with-gap must still balance.
        let d = dim(6);
        let pair = BesselPair::from_registry(d, WeightFamily::Power(2.0), Solution::One);
        let input = two_mode_input(d);
        let rep = verify_with_pair(IdentityId::AbstractRellichNr, &pair, &input, 1e-10).unwrap();
        assert_pass(&rep);
    }

    #[test]
    fn fllm_hardy_grad_is_abstract_hardy_at_the_gradient_pair() {
        // Same decomposition, two very different assembly routes.
        let d = dim(7);
        let input = bump_input();
        let direct = verify_identity(IdentityId::FllmHardyGrad, d, None, &input, 1e-10).unwrap();
        let pair = BesselPair::gradient_hardy(d).unwrap();
        let via_pair = verify_with_pair(IdentityId::AbstractHardy, &pair, &input, 1e-10).unwrap();
        assert_relative_eq!(direct.lhs, via_pair.lhs, max_relative = 1e-9);
        // weight_r4 = companion, mixed_r3 = curvature cancel,
        // hardy_remainder = twisted remainder.
        let get = |rep: &IdentityReport, label: &str| {
            rep.terms.iter().find(|t| t.label == label).unwrap().value
        };
        assert_relative_eq!(
            get(&direct, "weight_r4"),
            get(&via_pair, "companion_plain"),
            max_relative = 1e-9
        );
        assert_relative_eq!(
            get(&direct, "mixed_r3"),
            get(&via_pair, "curvature_cancel"),
            max_relative = 1e-9
        );
        assert_relative_eq!(
            get(&direct, "hardy_remainder"),
            get(&via_pair, "remainder_twisted"),
            max_relative = 1e-9
        );
    }

    #[test]
    fn abstract_hardy_regroups_to_first_order_display() {
        // At the canonical pair, companion + curvature-cancel equals the
        // four displayed λ-family terms.
        let d = dim(5);
        let lam = 1.7;
        let input = bump_input();
        let hardy =
            verify_identity(IdentityId::AbstractHardy, d, Some(lam), &input, 1e-10).unwrap();
        let display = verify_identity(IdentityId::AppendixHp, d, Some(lam), &input, 1e-10).unwrap();
        let sum_pair = hardy.terms[0].value + hardy.terms[1].value;
        let sum_display: f64 = display.terms[..4].iter().map(|t| t.value).sum();
        assert_relative_eq!(sum_pair, sum_display, max_relative = 1e-8);
        assert_relative_eq!(
            hardy.terms[2].value,
            display.terms[4].value,
            max_relative = 1e-8
        );
    }

    #[test]
    fn gates_and_input_kinds_are_enforced() {
        let d4 = dim(4);
        let input = bump_input();
        assert!(matches!(
            verify_identity(IdentityId::Rellich, d4, None, &input, 1e-10),
            Err(IdentityError::DimensionGate { min: 5, .. })
        ));
        assert!(matches!(
            verify_identity(IdentityId::FllmHardyGrad, d4, None, &input, 1e-10),
            Err(IdentityError::DimensionGate { .. })
        ));
        assert!(matches!(
            verify_identity(IdentityId::AppendixHardy, dim(2), None, &input, 1e-10),
            Err(IdentityError::DimensionGate { min: 3, .. })
        ));
        let modes = two_mode_input(dim(5));
        assert!(matches!(
            verify_identity(IdentityId::RadialHr, dim(5), Some(1.0), &modes, 1e-10),
            Err(IdentityError::RadialOnly(IdentityId::RadialHr))
        ));
        assert!(matches!(
            verify_identity(IdentityId::RadialHr, dim(5), None, &input, 1e-10),
            Err(IdentityError::LambdaRequired(_))
        ));
        assert!(matches!(
            verify_identity(IdentityId::PoincareL1, dim(5), Some(1.0), &input, 1e-10),
            Err(IdentityError::LambdaNotAccepted(_))
        ));
        assert!(matches!(
            verify_identity(IdentityId::RadialHr, dim(5), Some(99.0), &input, 1e-10),
            Err(IdentityError::Pair(PairError::LambdaOutOfRange { .. }))
        ));
        // Mode expansion built for a different dimension.
        assert!(matches!(
            verify_identity(
                IdentityId::AppendixHp,
                dim(6),
                Some(1.0),
                &two_mode_input(dim(5)),
                1e-10
            ),
            Err(IdentityError::DimensionMismatch {
                input: 5,
                requested: 6
            })
        ));
        // Custom pairs only for the pair-capable entries.
        let pair = BesselPair::canonical(lambda_params(dim(5), 0.0).unwrap());
        assert!(matches!(
            verify_with_pair(IdentityId::RadialHr, &pair, &input, 1e-10),
            Err(IdentityError::PairNotAccepted(_))
        ));
    }

    #[test]
    fn nr_rejects_inadmissible_weights() {
        // V = e^{-r²} decays so fast the admissibility expression goes
        // negative; the NR entry must refuse rather than report.
        let d = dim(5);
        let pair =
            BesselPair::from_registry(d, WeightFamily::GaussExponential(-1.0), Solution::One);
        let err = verify_with_pair(
            IdentityId::AbstractRellichNr,
            &pair,
            &two_mode_input(d),
            1e-10,
        )
        .unwrap_err();
        assert!(matches!(err, IdentityError::ConditionNotMet { .. }));
    }

    #[test]
    fn identity_ids_round_trip_through_strings() {
        for id in IdentityId::all() {
            let s = id.as_str();
            let back: IdentityId = s.parse().unwrap();
            assert_eq!(back, id);
        }
        assert!("NOT_AN_ID".parse::<IdentityId>().is_err());
    }

    #[test]
    fn cross_consistency_holds_at_canonical_pairs() {
        let p = make_bump(0.5, 2.5, 1.0).unwrap();
        for n in [2u32, 3, 5, 8] {
            let d = dim(n);
            for lam in [0.0, 0.6 * d.lambda1(), d.lambda1()] {
                let c = cross_consistency(d, lam, &p, 1e-11).unwrap();
                assert!(
                    c.residual <= 1e-8 * c.scale + 10.0 * c.budget,
                    "N={n} λ={lam}: residual {} scale {}",
                    c.residual,
                    c.scale
                );
            }
        }
    }

    #[test]
    fn report_serializes_with_stable_fields() {
        let rep =
            verify_identity(IdentityId::PoincareL1, dim(3), None, &bump_input(), 1e-10).unwrap();
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["identity_id"], "POINCARE_L1");
        assert_eq!(json["dim"], 3);
        assert_eq!(json["verdict"], "pass");
        assert!(json["terms"].as_array().unwrap().len() == 4);
        assert!(json.get("gap").is_none());
    }

    #[test]
    fn different_profile_shapes_agree_on_verdicts() {
        let inputs = [
            ProfileInput::Radial(Box::new(make_bump(0.3, 1.8, 2.0).unwrap()) as Box<_>),
            ProfileInput::Radial(Box::new(PolyBridge::new(0.5, 3.0, 1.0).unwrap()) as Box<_>),
            ProfileInput::Radial(Box::new(SineBump::new(1.0, 4.0, 0.5).unwrap()) as Box<_>),
        ];
        let d = dim(5);
        for input in &inputs {
            for id in [
                IdentityId::Rellich,
                IdentityId::PoincareL0,
                IdentityId::FllmPoincare,
            ] {
                let rep = verify_identity(id, d, None, input, 1e-10).unwrap();
                assert_pass(&rep);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        // The λ-family second-order identity holds at random (N, λ).
        #[test]
        fn radial_hr_random(n in 2u32..=10, t in 0.0f64..=1.0) {
            let d = dim(n);
            let rep = verify_identity(
                IdentityId::RadialHr,
                d,
                Some(t * d.lambda1()),
                &bump_input(),
                1e-9,
            )
            .unwrap();
            prop_assert_eq!(rep.verdict, Verdict::Pass);
        }

        // The first-order λ-family holds at random (N, λ).
        #[test]
        fn appendix_hp_random(n in 2u32..=10, t in 0.0f64..=1.0) {
            let d = dim(n);
            let rep = verify_identity(
                IdentityId::AppendixHp,
                d,
                Some(t * d.lambda1()),
                &bump_input(),
                1e-9,
            )
            .unwrap();
            prop_assert_eq!(rep.verdict, Verdict::Pass);
        }
    }
}
