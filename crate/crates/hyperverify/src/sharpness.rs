//! Sharp-constant saturation scans and uncertainty-product checks.
//!
//! Two families of evidence that the catalogue constants cannot be
//! improved:
//!
//! * **Uncertainty products** (`hpw_*`): Heisenberg-type inequalities of
//!   the shape `(second-order energy)·(dispersion) ≥ C·(first-order
//!   energy)²`, obtained by chaining a catalogue identity with
//!   Cauchy–Schwarz. Each check computes both sides by quadrature and
//!   reports the gap, which must be nonnegative.
//!
//! * **Sharpness scans** (`sharpness_scan`): one-parameter families of
//!   trial functions that annihilate the remainder term of the relevant
//!   identity, driving the defining Rayleigh-type quotient down to the
//!   sharp constant. Quotients are certified one-sided (never below the
//!   target) and extrapolated to the limit with successive two-point
//!   linear (Richardson) extrapolation in the scan parameter.
//!
//! Concentrating scans push mass toward the pole `r = 0` with profiles
//! `r^(power+ε)·η(r)`; their integrands behave like `r^(2ε−1)` near zero,
//! so every core integral is evaluated in the substituted variable
//! `t = ln r`, where the singular factor becomes a smooth exponential
//! `e^(2εt)` and the truncated tail has the closed form
//! `g(0⁺)·e^(q·t_min)/q`. Spreading scans push mass toward `r = ∞` with
//! profiles `sinh^(−(N−1)/2)·η`, whose assembled integrands are bounded
//! for every dimension; they converge at rate `O(1/L)` in the support
//! length `L`.

use crate::geometry::{self, Dimension};
use crate::identities::ProfileInput;
use crate::jet::Jet3;
use crate::modes::{self, ModeError};
use crate::pairs::{self, BesselPair, PairError};
use crate::profiles::{smoothstep_jet, ProfileError, RadialProfile, SmoothWindow};
use crate::quadrature::{self, QuadratureError};
use serde::Serialize;
use thiserror::Error;

/// Errors from uncertainty checks and sharpness scans.
#[derive(Debug, Error)]
pub enum SharpnessError {
    /// No scan with this id.
    #[error("unknown scan id {0:?}")]
    UnknownScan(String),
    /// No uncertainty-check variant with this name.
    #[error("unknown uncertainty-check variant {0:?}")]
    UnknownVariant(String),
    /// Dimension below the gate of the requested check.
    #[error("{what} requires N >= {min}, got N={got}")]
    DimensionGate {
        /// Which check was gated.
        what: &'static str,
        /// Its minimum dimension.
        min: u32,
        /// The requested dimension.
        got: u32,
    },
    /// Scan parameter outside its admissible range.
    #[error("invalid scan parameter {value} for {what}")]
    InvalidParameter {
        /// The offending value.
        value: f64,
        /// Which scan rejected it.
        what: &'static str,
    },
    /// The requested variant needs an explicit λ.
    #[error("variant {0} needs an explicit lambda")]
    LambdaRequired(&'static str),
    /// The requested variant has a built-in λ.
    #[error("variant {0} has a built-in lambda; pass none")]
    LambdaNotAccepted(&'static str),
    /// The effective second-order weight `W̃` must be positive on the
    /// support for product-form checks.
    #[error("effective weight not positive: {value} at r={r}")]
    WeightNotPositive {
        /// Where positivity failed.
        r: f64,
        /// The offending value.
        value: f64,
    },
    /// The admissibility condition for full-Laplacian checks failed.
    #[error("weight pair fails the admissibility condition: margin {worst_margin} at r={worst_r}")]
    ConditionNotMet {
        /// Most negative value of the admissibility expression.
        worst_margin: f64,
        /// Where it was attained.
        worst_r: f64,
    },
    /// The input expansion was built for a different dimension.
    #[error("input expansion is for N={input}, requested N={requested}")]
    DimensionMismatch {
        /// Dimension the expansion was built for.
        input: u32,
        /// Dimension of the check.
        requested: u32,
    },
    /// Parameter construction failed.
    #[error(transparent)]
    Pair(#[from] PairError),
    /// Mode machinery failed.
    #[error(transparent)]
    Mode(#[from] ModeError),
    /// Profile construction failed.
    #[error(transparent)]
    Profile(#[from] ProfileError),
    /// Quadrature failed.
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

// ---------------------------------------------------------------------------
// Uncertainty-product checks.
// ---------------------------------------------------------------------------

/// Which uncertainty product to verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HpwVariant {
    /// `(∫(|Δu|² − λ|∇u|²))·(∫r²|∇u|²) ≥ h²(∫|∇u|²)²`.
    Plain,
    /// Plain with the two dropped identity terms restored on the right:
    /// `rhs += (∫r²|∇u|²)·[((N/2)²−h²)∫|∇u|²/sinh² + γh∫(X/r)|∇u|²]`.
    Improved,
    /// Product form at λ = 0 against the full displayed weight:
    /// `(∫|Δu|²)·(∫|∇u|²/W̃₀) ≥ (∫|∇u|²)²` with
    /// `W̃₀ = (N/2)²/r² + (N(N−1)/2)·X/r`. Pointwise `W̃₀ ≥ (N/2)²/r²`,
    /// so this bound dominates the plain λ = 0 product.
    Stringent,
    /// The same product form for an arbitrary admissible weight pair:
    /// `(∫V|Δu|²)·(∫|∇u|²/W̃) ≥ (∫|∇u|²)²`, where
    /// `W̃ = W + (N−1)(V/sinh² − V' coth r) − (N−1)V(f'/f)(coth r − 1/r)`.
    Abstract,
}

impl HpwVariant {
    /// All variants.
    pub fn all() -> [HpwVariant; 4] {
        [
            HpwVariant::Plain,
            HpwVariant::Improved,
            HpwVariant::Stringent,
            HpwVariant::Abstract,
        ]
    }

    /// Stable name.
    pub fn as_str(self) -> &'static str {
        match self {
            HpwVariant::Plain => "plain",
            HpwVariant::Improved => "improved",
            HpwVariant::Stringent => "stringent",
            HpwVariant::Abstract => "abstract",
        }
    }
}

impl std::str::FromStr for HpwVariant {
    type Err = SharpnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HpwVariant::all()
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| SharpnessError::UnknownVariant(s.to_string()))
    }
}

/// Operator semantics of an uncertainty check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorFlavor {
    /// Full Laplacian and gradient; needs N ≥ 5 (and, for pair-based
    /// variants, the admissibility condition on the weight).
    Full,
    /// Radial operators `Δ_r`, `∇_r` acting on the radial factor of each
    /// mode; valid for every N ≥ 2 with no extra condition.
    RadialOp,
}

impl OperatorFlavor {
    /// Stable name.
    pub fn as_str(self) -> &'static str {
        match self {
            OperatorFlavor::Full => "full",
            OperatorFlavor::RadialOp => "radial",
        }
    }
}

impl std::str::FromStr for OperatorFlavor {
    type Err = SharpnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(OperatorFlavor::Full),
            "radial" => Ok(OperatorFlavor::RadialOp),
            other => Err(SharpnessError::UnknownVariant(other.to_string())),
        }
    }
}

/// Record of one uncertainty-product check.
#[derive(Debug, Clone, Serialize)]
pub struct HpwReport {
    /// Variant name.
    pub variant: String,
    /// Operator semantics ("full" or "radial").
    pub flavor: String,
    /// Dimension.
    pub dim: u32,
    /// Spectral parameter, where the variant takes one.
    pub lambda: Option<f64>,
    /// First product factor (second-order energy, λ-shifted for plain /
    /// improved).
    pub energy: f64,
    /// Second product factor (`∫r²|∇u|²`, or `∫|∇u|²/W̃` for the product
    /// forms).
    pub dispersion: f64,
    /// `energy · dispersion`.
    pub lhs_product: f64,
    /// Right-hand side (constant times the squared first-order energy,
    /// plus restored terms for the improved variant).
    pub rhs_square: f64,
    /// `lhs_product − rhs_square`; must be ≥ −tolerance.
    pub gap: f64,
    /// `max(|lhs_product|, |rhs_square|)`.
    pub scale: f64,
    /// For the stringent variant: `(∫r²|∇u|²)/(∫|∇u|²/W̃₀)`, the
    /// effective plain-form constant this bound implies; ≥ (N/2)².
    #[serde(skip_serializing_if = "Option::is_none")]
    pub implied_constant: Option<f64>,
    /// First-order propagated quadrature error for the two sides.
    pub budget: f64,
    /// Whether the gap clears `−max(tol·scale, 10·budget)`.
    pub satisfied: bool,
}

/// Accumulates integrals with first-order error budgets.
struct Budgeted {
    k: i32,
    tol: f64,
}

struct Valued {
    value: f64,
    budget: f64,
}

impl Budgeted {
    fn new(dim: Dimension, tol: f64) -> Self {
        Budgeted {
            k: dim.get() as i32 - 1,
            tol,
        }
    }

    fn int(
        &self,
        f: &dyn Fn(f64) -> f64,
        k_shift: i32,
        support: (f64, f64),
    ) -> Result<Valued, SharpnessError> {
        let q = quadrature::integrate_weighted(f, self.k + k_shift, support, self.tol)?;
        Ok(Valued {
            value: q.value,
            budget: q.abs_error_estimate,
        })
    }
}

/// Normalized input components (degree, radial factor).
fn components(input: &ProfileInput) -> Vec<(u32, &dyn RadialProfile)> {
    match input {
        ProfileInput::Radial(p) => vec![(0, p.as_ref())],
        ProfileInput::Modes(e) => e
            .modes()
            .iter()
            .map(|m| (m.n, m.profile.as_ref()))
            .collect(),
    }
}

fn check_input_dim(input: &ProfileInput, dim: Dimension) -> Result<(), SharpnessError> {
    if let ProfileInput::Modes(e) = input {
        if e.dim() != dim {
            return Err(SharpnessError::DimensionMismatch {
                input: e.dim().get(),
                requested: dim.get(),
            });
        }
    }
    Ok(())
}

/// `Σ_n ∫ g·a_n'²·w [+ λ_n ∫ g·a_n²·ψ^(N−3) for the full flavor]` — the
/// weighted squared gradient in the requested operator semantics.
fn weighted_grad_sq(
    acc: &Budgeted,
    dim: Dimension,
    comps: &[(u32, &dyn RadialProfile)],
    flavor: OperatorFlavor,
    g: &dyn Fn(f64) -> f64,
) -> Result<Valued, SharpnessError> {
    let mut out = Valued {
        value: 0.0,
        budget: 0.0,
    };
    for &(deg, p) in comps {
        let support = p.support();
        let d = acc.int(
            &|r| {
                let d1 = p.jet(r).d1;
                g(r) * d1 * d1
            },
            0,
            support,
        )?;
        out.value += d.value;
        out.budget += d.budget;
        if flavor == OperatorFlavor::Full && deg > 0 {
            let lam_n = modes::mode_eigenvalue(dim, deg);
            let a = acc.int(
                &|r| {
                    let v = p.value(r);
                    g(r) * v * v
                },
                -2,
                support,
            )?;
            out.value += lam_n * a.value;
            out.budget += lam_n * a.budget;
        }
    }
    Ok(out)
}

/// `Σ_n ∫ v·(Δu)_n²·dv` in the requested operator semantics.
fn weighted_laplacian_sq(
    acc: &Budgeted,
    dim: Dimension,
    comps: &[(u32, &dyn RadialProfile)],
    flavor: OperatorFlavor,
    v: &dyn Fn(f64) -> f64,
) -> Result<Valued, SharpnessError> {
    let nf = dim.nf();
    let mut out = Valued {
        value: 0.0,
        budget: 0.0,
    };
    for &(deg, p) in comps {
        let support = p.support();
        let lam_n = if flavor == OperatorFlavor::Full {
            modes::mode_eigenvalue(dim, deg)
        } else {
            0.0
        };
        let d = acc.int(
            &|r| {
                let j = p.jet(r);
                let mut lap = j.d2 + (nf - 1.0) * geometry::coth(r) * j.d1;
                if lam_n > 0.0 {
                    lap -= lam_n * j.v * geometry::csch_sq(r);
                }
                v(r) * lap * lap
            },
            0,
            support,
        )?;
        out.value += d.value;
        out.budget += d.budget;
    }
    Ok(out)
}

fn gate_flavor(
    flavor: OperatorFlavor,
    dim: Dimension,
    what: &'static str,
) -> Result<(), SharpnessError> {
    let min = match flavor {
        OperatorFlavor::Full => 5,
        OperatorFlavor::RadialOp => 2,
    };
    if dim.get() < min {
        return Err(SharpnessError::DimensionGate {
            what,
            min,
            got: dim.get(),
        });
    }
    Ok(())
}

/// Checks that `wt` is strictly positive on a log grid spanning the
/// support hull of the input.
fn check_weight_positive(
    wt: &dyn Fn(f64) -> f64,
    comps: &[(u32, &dyn RadialProfile)],
) -> Result<(), SharpnessError> {
    let lo = comps
        .iter()
        .map(|(_, p)| p.support().0)
        .fold(f64::INFINITY, f64::min);
    let hi = comps.iter().map(|(_, p)| p.support().1).fold(0.0, f64::max);
    for &r in &pairs::log_grid(lo.max(1e-8), hi, 200) {
        let v = wt(r);
        // NaN must fail the positivity check, so the comparison is
        // written to reject everything that is not finite-positive.
        if !v.is_finite() || v <= 0.0 {
            return Err(SharpnessError::WeightNotPositive { r, value: v });
        }
    }
    Ok(())
}

/// Runs an uncertainty-product check on the canonical weights.
///
/// `lambda` is required for the plain, improved and abstract variants
/// (the abstract one then uses the canonical pair at that λ) and must be
/// omitted for the stringent variant, which is the λ = 0 product form.
pub fn hpw_check(
    variant: HpwVariant,
    flavor: OperatorFlavor,
    dim: Dimension,
    lambda: Option<f64>,
    input: &ProfileInput,
    tol: f64,
) -> Result<HpwReport, SharpnessError> {
    gate_flavor(flavor, dim, variant.as_str())?;
    check_input_dim(input, dim)?;
    match variant {
        HpwVariant::Plain | HpwVariant::Improved => {
            let lam = lambda.ok_or(SharpnessError::LambdaRequired(variant.as_str()))?;
            hpw_lambda_family(variant, flavor, dim, lam, input, tol)
        }
        HpwVariant::Stringent => {
            if lambda.is_some() {
                return Err(SharpnessError::LambdaNotAccepted("stringent"));
            }
            let params = pairs::lambda_params(dim, 0.0)?;
            let nf = dim.nf();
            let wt = move |r: f64| {
                nf * nf / 4.0 / (r * r) + nf * (nf - 1.0) / 2.0 * geometry::coth_minus_inv_r(r) / r
            };
            let rep = hpw_product_form(
                HpwVariant::Stringent,
                flavor,
                dim,
                Some(0.0),
                &|_| 1.0,
                &wt,
                input,
                tol,
            )?;
            // Consistency: the closed form above is exactly the displayed
            // gradient-version weight of the λ=0 pair.
            debug_assert!({
                let r = 0.7;
                (wt(r) - (params.w_lambda_displayed(r) + (nf - 1.0) * geometry::csch_sq(r))).abs()
                    < 1e-10
            });
            Ok(rep)
        }
        HpwVariant::Abstract => {
            let lam = lambda.ok_or(SharpnessError::LambdaRequired("abstract"))?;
            let params = pairs::lambda_params(dim, lam)?;
            let pair = BesselPair::canonical(params);
            hpw_check_with_pair(&pair, flavor, input, tol)
        }
    }
}

/// Runs the abstract uncertainty-product check for an explicit weight
/// pair. For the full flavor the pair must satisfy the admissibility
/// condition; for every flavor the effective weight `W̃` must be positive
/// on the support.
pub fn hpw_check_with_pair(
    pair: &BesselPair,
    flavor: OperatorFlavor,
    input: &ProfileInput,
    tol: f64,
) -> Result<HpwReport, SharpnessError> {
    let dim = pair.dim();
    gate_flavor(flavor, dim, "abstract")?;
    check_input_dim(input, dim)?;
    if flavor == OperatorFlavor::Full {
        let grid = pairs::log_grid(1e-3, 20.0, 400);
        let cond = pairs::check_nonradial_condition(pair, &grid)?;
        if !cond.satisfied {
            return Err(SharpnessError::ConditionNotMet {
                worst_margin: cond.worst_margin,
                worst_r: cond.worst_r,
            });
        }
    }
    let nf = dim.nf();
    let v = pair.v();
    let wt = move |r: f64| {
        pair.w(r)
            + (nf - 1.0) * (v.value(r) * geometry::csch_sq(r) - v.deriv(r) * geometry::coth(r))
            - (nf - 1.0) * v.value(r) * pair.f().log_deriv(r) * geometry::coth_minus_inv_r(r)
    };
    hpw_product_form(
        HpwVariant::Abstract,
        flavor,
        dim,
        None,
        &|r| v.value(r),
        &wt,
        input,
        tol,
    )
}

/// Plain / improved product: both sides of
/// `(∫(|Δu|² − λ|∇u|²))·(∫r²|∇u|²) ≥ h²(∫|∇u|²)² [+ improvements]`.
fn hpw_lambda_family(
    variant: HpwVariant,
    flavor: OperatorFlavor,
    dim: Dimension,
    lam: f64,
    input: &ProfileInput,
    tol: f64,
) -> Result<HpwReport, SharpnessError> {
    let params = pairs::lambda_params(dim, lam)?;
    let (nf, h, g) = (dim.nf(), params.h(), params.gamma());
    let comps = components(input);
    let acc = Budgeted::new(dim, tol);

    let lap = weighted_laplacian_sq(&acc, dim, &comps, flavor, &|_| 1.0)?;
    let grad = weighted_grad_sq(&acc, dim, &comps, flavor, &|_| 1.0)?;
    let disp = weighted_grad_sq(&acc, dim, &comps, flavor, &|r| r * r)?;

    let energy = lap.value - lam * grad.value;
    let energy_budget = lap.budget + lam.abs() * grad.budget;
    let lhs = energy * disp.value;
    let lhs_budget = energy.abs() * disp.budget + disp.value.abs() * energy_budget;

    let mut rhs = h * h * grad.value * grad.value;
    let mut rhs_budget = 2.0 * h * h * grad.value.abs() * grad.budget;
    if variant == HpwVariant::Improved {
        let csch = weighted_grad_sq(&acc, dim, &comps, flavor, &geometry::csch_sq)?;
        let mixed = weighted_grad_sq(&acc, dim, &comps, flavor, &|r| {
            geometry::coth_minus_inv_r(r) / r
        })?;
        let extra = (nf * nf / 4.0 - h * h) * csch.value + g * h * mixed.value;
        let extra_budget = (nf * nf / 4.0 - h * h) * csch.budget + g * h * mixed.budget;
        rhs += disp.value * extra;
        rhs_budget += disp.value.abs() * extra_budget + extra.abs() * disp.budget;
    }

    Ok(finish_hpw(
        variant,
        flavor,
        dim,
        Some(lam),
        energy,
        disp.value,
        lhs,
        rhs,
        None,
        lhs_budget + rhs_budget,
        tol,
    ))
}

/// Product form `(∫V|Δu|²)·(∫|∇u|²/W̃) ≥ (∫|∇u|²)²`.
#[allow(clippy::too_many_arguments)]
fn hpw_product_form(
    variant: HpwVariant,
    flavor: OperatorFlavor,
    dim: Dimension,
    lambda: Option<f64>,
    v: &dyn Fn(f64) -> f64,
    wt: &(dyn Fn(f64) -> f64 + '_),
    input: &ProfileInput,
    tol: f64,
) -> Result<HpwReport, SharpnessError> {
    let comps = components(input);
    check_weight_positive(wt, &comps)?;
    let acc = Budgeted::new(dim, tol);

    let lap = weighted_laplacian_sq(&acc, dim, &comps, flavor, v)?;
    let grad = weighted_grad_sq(&acc, dim, &comps, flavor, &|_| 1.0)?;
    let disp = weighted_grad_sq(&acc, dim, &comps, flavor, &|r| 1.0 / wt(r))?;

    let lhs = lap.value * disp.value;
    let rhs = grad.value * grad.value;
    let budget = lap.value.abs() * disp.budget
        + disp.value.abs() * lap.budget
        + 2.0 * grad.value.abs() * grad.budget;

    let implied = if variant == HpwVariant::Stringent {
        let plain_disp = weighted_grad_sq(&acc, dim, &comps, flavor, &|r| r * r)?;
        Some(plain_disp.value / disp.value)
    } else {
        None
    };

    Ok(finish_hpw(
        variant, flavor, dim, lambda, lap.value, disp.value, lhs, rhs, implied, budget, tol,
    ))
}

#[allow(clippy::too_many_arguments)]
fn finish_hpw(
    variant: HpwVariant,
    flavor: OperatorFlavor,
    dim: Dimension,
    lambda: Option<f64>,
    energy: f64,
    dispersion: f64,
    lhs: f64,
    rhs: f64,
    implied_constant: Option<f64>,
    budget: f64,
    tol: f64,
) -> HpwReport {
    let gap = lhs - rhs;
    let scale = lhs.abs().max(rhs.abs());
    let satisfied = gap >= -(tol * scale).max(10.0 * budget);
    HpwReport {
        variant: variant.as_str().to_string(),
        flavor: flavor.as_str().to_string(),
        dim: dim.get(),
        lambda,
        energy,
        dispersion,
        lhs_product: lhs,
        rhs_square: rhs,
        gap,
        scale,
        implied_constant,
        budget,
        satisfied,
    }
}

// ---------------------------------------------------------------------------
// Sharpness scans.
// ---------------------------------------------------------------------------

/// Which sharp constant to scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanId {
    /// `(N/2)²` — second-order Hardy constant; concentrating family.
    HardyRellich,
    /// `((N−1)/2)² = λ₁` — spectral-gap constant; spreading family.
    Lambda1,
    /// `N²(N−4)²/16` — fourth-power-weight constant; concentrating
    /// family, N ≥ 5.
    Rellich,
    /// `((N−1)/2)⁴ = λ₁²` — second-order spectral-gap constant;
    /// spreading family, N ≥ 3.
    Lambda1Sq,
    /// `(N/2)² − h²` at interior λ = 0.75·λ₁ with `h²` held at its exact
    /// value — joint sharpness of the pair of constants; concentrating
    /// family.
    JointCsch,
}

impl ScanId {
    /// All scans.
    pub fn all() -> [ScanId; 5] {
        [
            ScanId::HardyRellich,
            ScanId::Lambda1,
            ScanId::Rellich,
            ScanId::Lambda1Sq,
            ScanId::JointCsch,
        ]
    }

    /// Stable machine name.
    pub fn as_str(self) -> &'static str {
        match self {
            ScanId::HardyRellich => "hardy_rellich",
            ScanId::Lambda1 => "lambda1",
            ScanId::Rellich => "rellich",
            ScanId::Lambda1Sq => "lambda1_sq",
            ScanId::JointCsch => "joint_csch",
        }
    }

    /// Minimum dimension for which the scanned constant is certified
    /// one-sided.
    pub fn min_dim(self) -> u32 {
        match self {
            ScanId::Rellich => 5,
            ScanId::Lambda1Sq => 3,
            _ => 2,
        }
    }

    /// Whether the trial family concentrates at the pole (`true`) or
    /// spreads to large radius (`false`).
    pub fn concentrating(self) -> bool {
        !matches!(self, ScanId::Lambda1 | ScanId::Lambda1Sq)
    }

    /// The λ the scan runs at (where the underlying identity takes one).
    pub fn lambda(self, dim: Dimension) -> Option<f64> {
        match self {
            ScanId::HardyRellich | ScanId::Rellich => Some(0.0),
            ScanId::JointCsch => Some(0.75 * dim.lambda1()),
            ScanId::Lambda1 | ScanId::Lambda1Sq => Some(dim.lambda1()),
        }
    }

    /// The target constant in dimension `dim`.
    pub fn target(self, dim: Dimension) -> f64 {
        let nf = dim.nf();
        match self {
            ScanId::HardyRellich => nf * nf / 4.0,
            ScanId::Lambda1 => dim.lambda1(),
            ScanId::Rellich => nf * nf * (nf - 4.0) * (nf - 4.0) / 16.0,
            ScanId::Lambda1Sq => dim.lambda1() * dim.lambda1(),
            ScanId::JointCsch => {
                let params = pairs::lambda_params(dim, 0.75 * dim.lambda1())
                    .expect("0.75·λ₁ is always in range");
                nf * nf / 4.0 - params.h() * params.h()
            }
        }
    }

    /// Default scan parameters: ε values for concentrating scans, support
    /// lengths `L` for spreading scans.
    pub fn default_params(self) -> Vec<f64> {
        if self.concentrating() {
            vec![0.4, 0.2, 0.1, 0.05, 0.025]
        } else {
            vec![10.0, 20.0, 40.0]
        }
    }

    /// The reporting band for the extrapolated limit, where one is
    /// asserted (relative half-width); `None` means advisory only.
    pub fn band(self, dim: Dimension) -> Option<f64> {
        match (self, dim.get()) {
            (ScanId::HardyRellich, 5) | (ScanId::JointCsch, 5) => Some(0.05),
            (ScanId::Lambda1, 3) => Some(0.10),
            _ => None,
        }
    }
}

impl std::fmt::Display for ScanId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScanId {
    type Err = SharpnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScanId::all()
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| SharpnessError::UnknownScan(s.to_string()))
    }
}

/// One scan point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanSample {
    /// Scan parameter (ε or L).
    pub param: f64,
    /// Rayleigh-type quotient at that parameter.
    pub quotient: f64,
}

/// Record of one sharpness scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    /// Scan name.
    pub scan_id: String,
    /// Dimension.
    pub dim: u32,
    /// λ of the underlying identity.
    pub lambda: Option<f64>,
    /// The sharp constant being approached.
    pub target: f64,
    /// Raw quotients, one per parameter, in input order.
    pub samples: Vec<ScanSample>,
    /// Successive two-point linear extrapolants (in ε, or in 1/L).
    pub extrapolants: Vec<f64>,
    /// Final extrapolant (or the lone quotient if only one sample).
    pub limit_estimate: f64,
    /// `|limit_estimate − target| / |target|`.
    pub rel_gap: f64,
    /// Every quotient ≥ target − slack (mandatory certificate).
    pub one_sided: bool,
    /// Quotients are nonincreasing along the scan.
    pub monotone: bool,
    /// Asserted relative band for the limit, where one applies.
    pub band: Option<f64>,
    /// Whether the limit landed inside the band (when one applies).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_band: Option<bool>,
    /// `one_sided` and (if a band applies) `within_band`.
    pub satisfied: bool,
    /// Summed propagated quadrature error across quotients.
    pub budget: f64,
}

/// Integral in the substituted variable `t = ln r`:
/// `∫₀ᵇ g(r) r^(q−1) dr = ∫_{−∞}^{ln b} g(eᵗ) e^(qt) dt`, truncated at
/// `t_min = max(ln b − 60/q, −690)` with the analytic tail
/// `g(e^{t_min})·e^(q·t_min)/q` restored (relative truncation error is of
/// order e⁻⁶⁰; the hard floor keeps `eᵗ` normal).
fn log_substituted(
    g: &dyn Fn(f64) -> f64,
    q: f64,
    b: f64,
    tol: f64,
) -> Result<Valued, SharpnessError> {
    let t_max = b.ln();
    let t_min = (t_max - 60.0 / q).max(-690.0);
    let integrand = move |t: f64| g(t.exp()) * (q * t).exp();
    let res = quadrature::integrate_interval(&integrand, (t_min, t_max), tol)?;
    let tail = g(t_min.exp()) * (q * t_min).exp() / q;
    Ok(Valued {
        value: res.value + tail,
        budget: res.abs_error_estimate,
    })
}

/// Smooth cutoff equal to 1 on `[0, r2]`, falling to 0 on `[r2, r3]`.
#[derive(Clone, Copy)]
struct FallWindow {
    r2: f64,
    r3: f64,
}

impl FallWindow {
    fn jet(&self, r: f64) -> Jet3 {
        if r >= self.r3 {
            return Jet3::constant(0.0);
        }
        if r <= self.r2 {
            return Jet3::constant(1.0);
        }
        Jet3::constant(1.0)
            - smoothstep_jet((Jet3::var(r) - Jet3::constant(self.r2)) * (1.0 / (self.r3 - self.r2)))
    }
}

/// Quotient of a concentrating scan at one ε.
///
/// The trial function annihilates the remainder of the underlying
/// identity up to the ε-perturbation, so the quotient exceeds the target
/// by the ratio of bounded cutoff terms to the divergent core integral
/// and converges one-sided at rate O(ε).
fn concentrating_quotient(
    id: ScanId,
    dim: Dimension,
    eps: f64,
    tol: f64,
) -> Result<Valued, SharpnessError> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(SharpnessError::InvalidParameter {
            value: eps,
            what: id.as_str(),
        });
    }
    let nf = dim.nf();
    let q = 2.0 * eps;

    match id {
        ScanId::HardyRellich | ScanId::JointCsch => {
            // u'(r) = Ψ_λ(r)·r^ε·η(r): the second-order remainder is
            // O(ε²) while the Hardy-type core diverges like b^q/q.
            // All integrands are fused through Ψ_λ²·sinh^(N−1) = r·(r/sinh r)^γ.
            let lam = id.lambda(dim).unwrap();
            let params = pairs::lambda_params(dim, lam)?;
            let (h, g) = (params.h(), params.gamma());
            let eta = FallWindow { r2: 1.0, r3: 2.0 };
            let b = 2.0;
            let core = move |r: f64| (g * geometry::ln_r_over_sinh(r)).exp();
            let lap_sq = move |r: f64| {
                let e = eta.jet(r);
                let rl =
                    e.v * ((h + eps) + (nf - 1.0 - g) / 2.0 * r * geometry::coth(r)) + r * e.d1;
                core(r) * rl * rl
            };
            let a = log_substituted(&lap_sq, q, b, tol)?;
            let hardy = log_substituted(&|r| core(r) * eta.jet(r).v.powi(2), q, b, tol)?;
            match id {
                ScanId::HardyRellich => {
                    // Q = ∫(Δ_r u)² / ∫u'²/r² → h² = (N/2)² at λ = 0.
                    let quotient = a.value / hardy.value;
                    let budget = a.budget / hardy.value.abs()
                        + quotient.abs() * hardy.budget / hardy.value.abs();
                    Ok(Valued {
                        value: quotient,
                        budget,
                    })
                }
                _ => {
                    // Qc = (A − λG − h²B − γh·XT)/C → (N/2)² − h², with
                    // h² held at its exact value.
                    let grad =
                        log_substituted(&|r| core(r) * eta.jet(r).v.powi(2), q + 2.0, b, tol)?;
                    let mixed = log_substituted(
                        &|r| core(r) * geometry::coth_minus_inv_r(r) / r * eta.jet(r).v.powi(2),
                        q + 2.0,
                        b,
                        tol,
                    )?;
                    let csch = log_substituted(
                        &|r| ((g + 2.0) * geometry::ln_r_over_sinh(r)).exp() * eta.jet(r).v.powi(2),
                        q,
                        b,
                        tol,
                    )?;
                    let num =
                        a.value - lam * grad.value - h * h * hardy.value - g * h * mixed.value;
                    let num_budget = a.budget
                        + lam.abs() * grad.budget
                        + h * h * hardy.budget
                        + g * h * mixed.budget;
                    let quotient = num / csch.value;
                    let budget = num_budget / csch.value.abs()
                        + quotient.abs() * csch.budget / csch.value.abs();
                    Ok(Valued {
                        value: quotient,
                        budget,
                    })
                }
            }
        }
        ScanId::Rellich => {
            // u = r^((4−N)/2 + ε)·η with support [0, 1/2]: the shrunken
            // support keeps the bounded identity terms small against the
            // divergent fourth-power core.
            let alpha = (4.0 - nf) / 2.0 + eps;
            let eta = FallWindow { r2: 0.25, r3: 0.5 };
            let b = 0.5;
            let core = move |r: f64| (-(nf - 1.0) * geometry::ln_r_over_sinh(r)).exp();
            let lap_sq = move |r: f64| {
                let e = eta.jet(r);
                let m = alpha * (alpha - 1.0) * e.v
                    + 2.0 * alpha * r * e.d1
                    + r * r * e.d2
                    + (nf - 1.0) * r * geometry::coth(r) * (alpha * e.v + r * e.d1);
                core(r) * m * m
            };
            let a = log_substituted(&lap_sq, q, b, tol)?;
            let w4 = log_substituted(&|r| core(r) * eta.jet(r).v.powi(2), q, b, tol)?;
            let quotient = a.value / w4.value;
            let budget = a.budget / w4.value.abs() + quotient.abs() * w4.budget / w4.value.abs();
            Ok(Valued {
                value: quotient,
                budget,
            })
        }
        _ => unreachable!("spreading scans dispatch separately"),
    }
}

/// Quotient of a spreading scan at support length `L`.
///
/// The trial function `u = sinh^(−(N−1)/2)·η` annihilates the remainder
/// at λ = λ₁; in assembled form every integrand is an expression in η and
/// hyperbolic factors that stays O(1) pointwise for every dimension.
fn spreading_quotient(
    id: ScanId,
    dim: Dimension,
    l: f64,
    tol: f64,
) -> Result<Valued, SharpnessError> {
    if !(l >= 9.0 && l.is_finite()) {
        return Err(SharpnessError::InvalidParameter {
            value: l,
            what: id.as_str(),
        });
    }
    let lam1 = dim.lambda1();
    let c1 = (dim.nf() - 1.0) / 2.0;
    let c2 = (dim.nf() - 1.0) * (3.0 - dim.nf()) / 4.0;
    let window = SmoothWindow::new((0.5, 4.0), (l / 2.0, l))?;
    let support = (0.5, l);

    let lap_sq = |r: f64| {
        let e = window.jet(r);
        let m = e.d2 + e.v * (-lam1 + c2 * geometry::csch_sq(r));
        m * m
    };
    let a = quadrature::integrate_radial(&lap_sq, support, tol)?;
    let denom = match id {
        ScanId::Lambda1 => {
            // Q = ∫(Δ_r u)²/∫u'² → λ₁.
            let grad_sq = |r: f64| {
                let e = window.jet(r);
                let s = e.d1 - c1 * geometry::coth(r) * e.v;
                s * s
            };
            quadrature::integrate_radial(&grad_sq, support, tol)?
        }
        ScanId::Lambda1Sq => {
            // Q = ∫(Δ_r u)²/∫u² → λ₁².
            quadrature::integrate_radial(&|r| window.jet(r).v.powi(2), support, tol)?
        }
        _ => unreachable!("concentrating scans dispatch separately"),
    };
    let quotient = a.value / denom.value;
    let budget = a.abs_error_estimate / denom.value.abs()
        + quotient.abs() * denom.abs_error_estimate / denom.value.abs();
    Ok(Valued {
        value: quotient,
        budget,
    })
}

/// Runs a sharpness scan.
///
/// `params` are ε values for concentrating scans (each in `(0, 0.5)`) and
/// support lengths `L ≥ 9` for spreading scans; an empty slice selects
/// the defaults. Quotients are extrapolated linearly in ε (respectively
/// `1/L`) by successive two-point elimination; the final extrapolant is
/// the reported limit.
pub fn sharpness_scan(
    id: ScanId,
    dim: Dimension,
    params: &[f64],
    tol: f64,
) -> Result<ScanReport, SharpnessError> {
    if dim.get() < id.min_dim() {
        return Err(SharpnessError::DimensionGate {
            what: id.as_str(),
            min: id.min_dim(),
            got: dim.get(),
        });
    }
    let params = if params.is_empty() {
        id.default_params()
    } else {
        params.to_vec()
    };

    let mut samples = Vec::with_capacity(params.len());
    let mut budget = 0.0;
    for &p in &params {
        let v = if id.concentrating() {
            concentrating_quotient(id, dim, p, tol)?
        } else {
            spreading_quotient(id, dim, p, tol)?
        };
        samples.push(ScanSample {
            param: p,
            quotient: v.value,
        });
        budget += v.budget;
    }

    // Extrapolation variable: ε for concentrating scans, 1/L for
    // spreading ones (both → 0 in the sharp limit).
    let ts: Vec<f64> = samples
        .iter()
        .map(|s| {
            if id.concentrating() {
                s.param
            } else {
                1.0 / s.param
            }
        })
        .collect();
    let mut extrapolants = Vec::new();
    for i in 0..samples.len().saturating_sub(1) {
        let (t0, q0) = (ts[i], samples[i].quotient);
        let (t1, q1) = (ts[i + 1], samples[i + 1].quotient);
        extrapolants.push((t0 * q1 - t1 * q0) / (t0 - t1));
    }
    let limit_estimate = extrapolants
        .last()
        .copied()
        .unwrap_or_else(|| samples.last().map_or(f64::NAN, |s| s.quotient));

    let target = id.target(dim);
    let slack = (1e-8 * target.abs()).max(10.0 * budget);
    let one_sided = samples.iter().all(|s| s.quotient >= target - slack);
    let monotone = samples
        .windows(2)
        .all(|w| w[1].quotient <= w[0].quotient + slack);
    let rel_gap = (limit_estimate - target).abs() / target.abs();
    let band = id.band(dim);
    let within_band = band.map(|b| rel_gap <= b);
    let satisfied = one_sided && within_band.unwrap_or(true);

    Ok(ScanReport {
        scan_id: id.as_str().to_string(),
        dim: dim.get(),
        lambda: id.lambda(dim),
        target,
        samples,
        extrapolants,
        limit_estimate,
        rel_gap,
        one_sided,
        monotone,
        band,
        within_band,
        satisfied,
        budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{ModeExpansion, ModeFunction};
    use crate::pairs::{lambda_params, Solution, WeightFamily};
    use crate::profiles::{make_bump, SineBump};
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

    #[test]
    fn plain_product_holds_on_radial_and_mode_input() {
        let d = dim(5);
        for input in [bump_input(), two_mode_input(d)] {
            for lam in [0.0, 2.0, d.lambda1()] {
                let rep = hpw_check(
                    HpwVariant::Plain,
                    OperatorFlavor::Full,
                    d,
                    Some(lam),
                    &input,
                    1e-10,
                )
                .unwrap();
                assert!(rep.satisfied, "λ={lam}: gap {}", rep.gap);
                assert!(rep.gap >= 0.0);
            }
        }
    }

    #[test]
    fn improved_dominates_plain() {
        let d = dim(6);
        let input = bump_input();
        for lam in [0.0, 1.0, d.lambda1()] {
            let plain = hpw_check(
                HpwVariant::Plain,
                OperatorFlavor::Full,
                d,
                Some(lam),
                &input,
                1e-10,
            )
            .unwrap();
            let improved = hpw_check(
                HpwVariant::Improved,
                OperatorFlavor::Full,
                d,
                Some(lam),
                &input,
                1e-10,
            )
            .unwrap();
            assert!(improved.satisfied && plain.satisfied);
            assert_relative_eq!(
                improved.lhs_product,
                plain.lhs_product,
                max_relative = 1e-12
            );
            assert!(
                improved.rhs_square >= plain.rhs_square,
                "λ={lam}: improved rhs {} < plain rhs {}",
                improved.rhs_square,
                plain.rhs_square
            );
            assert!(improved.gap <= plain.gap);
        }
    }

    #[test]
    fn radial_flavor_works_down_to_n2() {
        for n in [2u32, 3, 5] {
            let d = dim(n);
            for lam in [0.0, 0.5 * d.lambda1(), d.lambda1()] {
                for variant in [HpwVariant::Plain, HpwVariant::Improved] {
                    let rep = hpw_check(
                        variant,
                        OperatorFlavor::RadialOp,
                        d,
                        Some(lam),
                        &bump_input(),
                        1e-10,
                    )
                    .unwrap();
                    assert!(
                        rep.satisfied,
                        "N={n} λ={lam} {:?}: gap {}",
                        variant, rep.gap
                    );
                }
            }
            let rep = hpw_check(
                HpwVariant::Stringent,
                OperatorFlavor::RadialOp,
                d,
                None,
                &bump_input(),
                1e-10,
            )
            .unwrap();
            assert!(rep.satisfied, "N={n} stringent: gap {}", rep.gap);
        }
    }

    #[test]
    fn stringent_gap_nonneg_and_implies_at_least_the_plain_constant() {
        let d = dim(5);
        for input in [bump_input(), two_mode_input(d)] {
            let rep = hpw_check(
                HpwVariant::Stringent,
                OperatorFlavor::Full,
                d,
                None,
                &input,
                1e-10,
            )
            .unwrap();
            assert!(rep.satisfied && rep.gap >= 0.0);
            let implied = rep.implied_constant.unwrap();
            assert!(implied >= 6.25, "implied constant {implied} below N²/4");
        }
    }

    #[test]
    fn abstract_variant_at_canonical_pair_accepts_modes() {
        let d = dim(5);
        let rep = hpw_check(
            HpwVariant::Abstract,
            OperatorFlavor::Full,
            d,
            Some(1.5),
            &two_mode_input(d),
            1e-10,
        )
        .unwrap();
        assert!(rep.satisfied, "gap {}", rep.gap);
        assert!(rep.implied_constant.is_none());
    }

    #[test]
    fn abstract_variant_with_inverse_square_pair() {
        let d = dim(7);
        let pair = BesselPair::gradient_hardy(d).unwrap();
        let rep =
            hpw_check_with_pair(&pair, OperatorFlavor::RadialOp, &bump_input(), 1e-10).unwrap();
        assert!(rep.satisfied, "gap {}", rep.gap);
    }

    #[test]
    fn effective_weight_closed_form_matches_pair_assembly() {
        // For the canonical pair, W + (N−1)(V/sinh² − V'coth) −
        // (N−1)(Ψ'/Ψ)X collapses to λ + h²/r² + ((N/2)²−h²)/sinh² + γh·X/r.
        for n in [2u32, 5, 9] {
            let d = dim(n);
            let nf = d.nf();
            for lam in [0.0, 0.4 * d.lambda1(), d.lambda1()] {
                let params = lambda_params(d, lam).unwrap();
                let pair = BesselPair::canonical(params);
                for &r in &pairs::log_grid(1e-2, 15.0, 60) {
                    let assembled = pair.w(r) + (nf - 1.0) * geometry::csch_sq(r)
                        - (nf - 1.0) * pair.f().log_deriv(r) * geometry::coth_minus_inv_r(r);
                    let closed = params.w_lambda_displayed(r) + (nf - 1.0) * geometry::csch_sq(r);
                    assert_relative_eq!(assembled, closed, max_relative = 1e-9, epsilon = 1e-12);
                    assert!(closed > 0.0);
                }
            }
        }
    }

    #[test]
    fn product_form_rejects_sign_changing_weight() {
        // V = r² with f ≡ 1 has companion W = 0, so the effective weight
        // is (N−1)(r²/sinh² − 2r·coth) < 0 at large r.
        let d = dim(6);
        let pair = BesselPair::from_registry(d, WeightFamily::Power(2.0), Solution::One);
        let err =
            hpw_check_with_pair(&pair, OperatorFlavor::RadialOp, &bump_input(), 1e-10).unwrap_err();
        assert!(
            matches!(err, SharpnessError::WeightNotPositive { .. }),
            "{err}"
        );
    }

    #[test]
    fn gates_and_lambda_rules() {
        let input = bump_input();
        assert!(matches!(
            hpw_check(
                HpwVariant::Plain,
                OperatorFlavor::Full,
                dim(4),
                Some(0.0),
                &input,
                1e-10
            ),
            Err(SharpnessError::DimensionGate { min: 5, .. })
        ));
        assert!(matches!(
            hpw_check(
                HpwVariant::Plain,
                OperatorFlavor::RadialOp,
                dim(3),
                None,
                &input,
                1e-10
            ),
            Err(SharpnessError::LambdaRequired("plain"))
        ));
        assert!(matches!(
            hpw_check(
                HpwVariant::Stringent,
                OperatorFlavor::RadialOp,
                dim(3),
                Some(0.5),
                &input,
                1e-10
            ),
            Err(SharpnessError::LambdaNotAccepted("stringent"))
        ));
        assert!(matches!(
            sharpness_scan(ScanId::Rellich, dim(4), &[], 1e-10),
            Err(SharpnessError::DimensionGate { min: 5, .. })
        ));
        assert!(matches!(
            sharpness_scan(ScanId::Lambda1Sq, dim(2), &[], 1e-10),
            Err(SharpnessError::DimensionGate { min: 3, .. })
        ));
        assert!(matches!(
            sharpness_scan(ScanId::HardyRellich, dim(5), &[0.7], 1e-10),
            Err(SharpnessError::InvalidParameter { .. })
        ));
        assert!(matches!(
            sharpness_scan(ScanId::Lambda1, dim(3), &[4.0], 1e-10),
            Err(SharpnessError::InvalidParameter { .. })
        ));
    }

    #[test]
    fn cauchy_schwarz_near_equality_on_narrow_support() {
        // On a width-0.01 bump at r = 1 the two dispersion weights r² and
        // r⁻² are nearly proportional, so the product bound is nearly an
        // equality.
        let d = dim(5);
        let p = make_bump(0.995, 1.005, 1.0).unwrap();
        let acc = Budgeted::new(d, 1e-12);
        let comps: Vec<(u32, &dyn RadialProfile)> = vec![(0, &p)];
        let g2 = weighted_grad_sq(&acc, d, &comps, OperatorFlavor::RadialOp, &|_| 1.0)
            .unwrap()
            .value;
        let disp = weighted_grad_sq(&acc, d, &comps, OperatorFlavor::RadialOp, &|r| r * r)
            .unwrap()
            .value;
        let hardy = weighted_grad_sq(&acc, d, &comps, OperatorFlavor::RadialOp, &|r| {
            1.0 / (r * r)
        })
        .unwrap()
        .value;
        let ratio = g2 * g2 / (disp * hardy);
        assert!(ratio <= 1.0 + 1e-12);
        assert!((1.0 - ratio).abs() < 1e-4, "ratio {ratio}");
    }

    #[test]
    fn hardy_rellich_scan_saturates_at_n5() {
        let rep = sharpness_scan(ScanId::HardyRellich, dim(5), &[], 1e-10).unwrap();
        assert!(rep.one_sided);
        assert!(rep.monotone);
        assert_eq!(rep.band, Some(0.05));
        assert_eq!(rep.within_band, Some(true));
        assert!(rep.satisfied);
        assert!(
            rep.rel_gap < 0.05,
            "limit {} target {}",
            rep.limit_estimate,
            rep.target
        );
        assert!(rep.samples.iter().all(|s| s.quotient > 6.25));
    }

    #[test]
    fn joint_csch_scan_extracts_the_companion_constant() {
        let rep = sharpness_scan(ScanId::JointCsch, dim(5), &[], 1e-10).unwrap();
        assert!(rep.one_sided);
        assert_relative_eq!(rep.target, 4.0, max_relative = 1e-12);
        assert!(rep.satisfied);
        assert!(rep.rel_gap < 0.05, "limit {}", rep.limit_estimate);
    }

    #[test]
    fn rellich_scan_is_one_sided_and_converges() {
        let rep = sharpness_scan(ScanId::Rellich, dim(5), &[], 1e-10).unwrap();
        assert!(rep.one_sided);
        assert!(rep.monotone);
        assert_relative_eq!(rep.target, 25.0 / 16.0, max_relative = 1e-12);
        assert!(rep.band.is_none());
        assert!(rep.satisfied);
        assert!(
            rep.rel_gap < 0.10,
            "limit {} target {}",
            rep.limit_estimate,
            rep.target
        );
    }

    #[test]
    fn spreading_scans_approach_spectral_constants() {
        let rep = sharpness_scan(ScanId::Lambda1, dim(3), &[], 1e-10).unwrap();
        assert!(rep.one_sided);
        assert_eq!(rep.band, Some(0.10));
        assert_eq!(rep.within_band, Some(true));
        assert!(rep.satisfied);
        assert_relative_eq!(rep.target, 1.0, max_relative = 1e-12);

        let rep = sharpness_scan(ScanId::Lambda1Sq, dim(3), &[], 1e-10).unwrap();
        assert!(rep.one_sided);
        assert!(rep.rel_gap < 0.10, "limit {}", rep.limit_estimate);

        // Advisory dimensions still certify one-sidedness and should land
        // close for these families.
        let rep = sharpness_scan(ScanId::Lambda1, dim(5), &[], 1e-10).unwrap();
        assert!(rep.one_sided && rep.band.is_none() && rep.satisfied);
        assert!(
            rep.rel_gap < 0.05,
            "limit {} target {}",
            rep.limit_estimate,
            rep.target
        );
        let rep = sharpness_scan(ScanId::Lambda1Sq, dim(5), &[], 1e-10).unwrap();
        assert!(rep.one_sided);
        assert!(
            rep.rel_gap < 0.05,
            "limit {} target {}",
            rep.limit_estimate,
            rep.target
        );
    }

    #[test]
    fn scan_ids_and_variants_round_trip() {
        for id in ScanId::all() {
            assert_eq!(id.as_str().parse::<ScanId>().unwrap(), id);
        }
        for v in HpwVariant::all() {
            assert_eq!(v.as_str().parse::<HpwVariant>().unwrap(), v);
        }
        assert_eq!(
            "full".parse::<OperatorFlavor>().unwrap(),
            OperatorFlavor::Full
        );
        assert_eq!(
            "radial".parse::<OperatorFlavor>().unwrap(),
            OperatorFlavor::RadialOp
        );
        assert!("bogus".parse::<ScanId>().is_err());
    }

    #[test]
    fn scan_report_serializes() {
        let rep = sharpness_scan(ScanId::Lambda1, dim(3), &[10.0, 20.0], 1e-9).unwrap();
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["scan_id"], "lambda1");
        assert_eq!(json["samples"].as_array().unwrap().len(), 2);
        assert_eq!(json["extrapolants"].as_array().unwrap().len(), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        // Uncertainty products never go negative for random admissible λ.
        #[test]
        fn hpw_gap_nonneg_random(n in 2u32..=8, t in 0.0f64..=1.0) {
            let d = dim(n);
            let rep = hpw_check(
                HpwVariant::Improved,
                OperatorFlavor::RadialOp,
                d,
                Some(t * d.lambda1()),
                &bump_input(),
                1e-9,
            )
            .unwrap();
            prop_assert!(rep.satisfied);
        }

        // Concentrating quotients stay one-sided at arbitrary ε.
        #[test]
        fn hardy_rellich_quotient_one_sided(eps in 0.03f64..0.45) {
            let d = dim(5);
            let v = concentrating_quotient(ScanId::HardyRellich, d, eps, 1e-9).unwrap();
            prop_assert!(v.value >= 6.25 - 1e-7);
        }
    }
}
