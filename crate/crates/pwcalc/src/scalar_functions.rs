//! Extended-real scalar functions: a small catalog, the one-variable
//! functional calculus, integral representations of operator convex
//! functions with their monotone approximants, and sampled falsifiers for
//! operator convexity and power monotonicity.

use std::fmt;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extended_sa::{ExtendedError, ExtendedReal, ExtendedSelfAdjoint, Finite, Infinite};
use crate::harness::generators::{log_uniform, random_isometry, rng_for, with_spectrum};
use crate::matrix_core::{eigh, CMatrix, CVector, LinalgError};

#[derive(Debug, Error)]
pub enum FunctionError {
    #[error("power {0} is not operator convex (allowed: [-1, 0] and [1, 2])")]
    NotOperatorConvex(f64),
    #[error("unknown function `{0}`")]
    Unknown(String),
    #[error("function `{name}` needs parameter {what}")]
    BadParameter { name: String, what: String },
    #[error("`{name}` evaluated to {value} at t = {t}")]
    BadValue { name: String, t: f64, value: f64 },
    #[error("eigenvalue {eigenvalue} lies outside the domain {domain} of `{name}`")]
    Domain { name: String, eigenvalue: f64, domain: Interval },
    #[error("representation coefficient `{field}` must be non-negative, got {value}")]
    NegativeCoefficient { field: &'static str, value: f64 },
    #[error("measure atom ({location}, {weight}) needs location > 0 and weight ≥ 0")]
    BadAtom { location: f64, weight: f64 },
    #[error("cannot read representation file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed representation file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Extended(#[from] ExtendedError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub const NONNEGATIVE: Interval = Interval { lo: 0.0, hi: f64::INFINITY, lo_closed: true, hi_closed: false };
    pub const POSITIVE: Interval = Interval { lo: 0.0, hi: f64::INFINITY, lo_closed: false, hi_closed: false };
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0, lo_closed: true, hi_closed: true };

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn contains(&self, t: f64) -> bool {
        let above = if self.lo_closed { t >= self.lo } else { t > self.lo };
        let below = if self.hi_closed { t <= self.hi } else { t < self.hi };
        above && below
    }

    /// Moves `t` onto a closed endpoint when within `tol` of it.
    pub fn snap(&self, t: f64, tol: f64) -> f64 {
        if self.lo_closed && (t - self.lo).abs() <= tol {
            self.lo
        } else if self.hi_closed && (t - self.hi).abs() <= tol {
            self.hi
        } else {
            t
        }
    }

    pub fn interior(&self) -> Self {
        Self { lo_closed: false, hi_closed: false, ..*self }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

/// Declared (not inferred) properties, checked by the falsifiers below.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tags {
    pub operator_convex: bool,
    pub operator_concave: bool,
    pub operator_monotone: bool,
    pub operator_monotone_decreasing: bool,
    pub power_monotone_increasing: bool,
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function J → (-∞, ∞] with boundary metadata f(0⁺) and f′(∞).
#[derive(Clone)]
pub struct ExtendedFunction {
    name: String,
    domain: Interval,
    eval: ScalarFn,
    at_zero_plus: Option<ExtendedReal>,
    slope_at_infinity: Option<ExtendedReal>,
    tags: Tags,
}

impl fmt::Debug for ExtendedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExtendedFunction")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("at_zero_plus", &self.at_zero_plus)
            .field("slope_at_infinity", &self.slope_at_infinity)
            .field("tags", &self.tags)
            .finish()
    }
}

impl ExtendedFunction {
    pub fn new(name: impl Into<String>, domain: Interval, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), domain, eval: Arc::new(eval), at_zero_plus: None, slope_at_infinity: None, tags: Tags::default() }
    }

    /// Sets f(0⁺) and f′(∞).
    pub fn with_boundary(mut self, at_zero_plus: ExtendedReal, slope_at_infinity: ExtendedReal) -> Self {
        self.at_zero_plus = Some(at_zero_plus);
        self.slope_at_infinity = Some(slope_at_infinity);
        self
    }

    pub fn with_tags(mut self, tags: Tags) -> Self {
        self.tags = tags;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn tags(&self) -> Tags {
        self.tags
    }

    /// f(0⁺), also written β.
    pub fn at_zero_plus(&self) -> Option<ExtendedReal> {
        self.at_zero_plus
    }

    /// f′(∞) = lim f(t)/t, also written α.
    pub fn slope_at_infinity(&self) -> Option<ExtendedReal> {
        self.slope_at_infinity
    }

    /// Unchecked evaluation.
    pub fn raw(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn eval(&self, t: f64) -> Result<ExtendedReal, FunctionError> {
        if !self.domain.contains(t) {
            return Err(FunctionError::Domain { name: self.name.clone(), eigenvalue: t, domain: self.domain });
        }
        let value = self.raw(t);
        ExtendedReal::new(value).map_err(|_| FunctionError::BadValue { name: self.name.clone(), t, value })
    }

    pub fn at_one(&self) -> Result<ExtendedReal, FunctionError> {
        self.eval(1.0)
    }
}

fn convex() -> Tags {
    Tags { operator_convex: true, ..Tags::default() }
}

/// t^p for p ∈ [-1, 0] ∪ [1, 2].
pub fn power(p: f64) -> Result<ExtendedFunction, FunctionError> {
    let allowed = (-1.0..=0.0).contains(&p) || (1.0..=2.0).contains(&p);
    if !allowed {
        return Err(FunctionError::NotOperatorConvex(p));
    }
    let (beta, alpha) = if p > 1.0 {
        (Finite(0.0), Infinite)
    } else if p == 1.0 {
        (Finite(0.0), Finite(1.0))
    } else if p == 0.0 {
        (Finite(1.0), Finite(0.0))
    } else {
        (Infinite, Finite(0.0))
    };
    let at_zero = beta.to_f64();
    let tags = Tags {
        operator_convex: true,
        operator_concave: p == 0.0 || p == 1.0,
        operator_monotone: p == 0.0 || p == 1.0,
        operator_monotone_decreasing: p <= 0.0,
        power_monotone_increasing: true,
    };
    Ok(ExtendedFunction::new(format!("power:{p}"), Interval::NONNEGATIVE, move |t| if t == 0.0 { at_zero } else { t.powf(p) })
        .with_boundary(beta, alpha)
        .with_tags(tags))
}

/// t^p for any real p, without the operator convexity check; used to feed
/// falsifiers. Requires p ≠ 0 and p ≠ 1 (use [`power`] there).
pub fn power_unchecked(p: f64) -> Result<ExtendedFunction, FunctionError> {
    if !p.is_finite() || p == 0.0 || p == 1.0 {
        return Err(FunctionError::BadParameter { name: "anypower".into(), what: "finite p other than 0 and 1".into() });
    }
    let (beta, alpha) = match p {
        p if p > 1.0 => (Finite(0.0), Infinite),
        p if p > 0.0 => (Finite(0.0), Finite(0.0)),
        _ => (Infinite, Finite(0.0)),
    };
    let at_zero = beta.to_f64();
    Ok(ExtendedFunction::new(format!("anypower:{p}"), Interval::NONNEGATIVE, move |t| if t == 0.0 { at_zero } else { t.powf(p) })
        .with_boundary(beta, alpha))
}

/// t log t.
pub fn tlogt() -> ExtendedFunction {
    ExtendedFunction::new("tlogt", Interval::NONNEGATIVE, |t| if t == 0.0 { 0.0 } else { t * t.ln() })
        .with_boundary(Finite(0.0), Infinite)
        .with_tags(convex())
}

/// -log t.
pub fn neglog() -> ExtendedFunction {
    ExtendedFunction::new("neglog", Interval::NONNEGATIVE, |t| if t == 0.0 { f64::INFINITY } else { -t.ln() })
        .with_boundary(Infinite, Finite(0.0))
        .with_tags(Tags { operator_convex: true, operator_monotone_decreasing: true, ..Tags::default() })
}

/// Diagonal t ↦ (1-t) log(t/(1-t)) of y log(x/y), on (0, 1].
pub fn ylogxy_diagonal() -> ExtendedFunction {
    let domain = Interval { lo: 0.0, hi: 1.0, lo_closed: false, hi_closed: true };
    ExtendedFunction::new("ylogxy", domain, |t| if t == 1.0 { 0.0 } else { (1.0 - t) * (t / (1.0 - t)).ln() })
        .with_tags(Tags { operator_concave: true, ..Tags::default() })
}

/// (t-1)² / (t+λ).
pub fn g_lambda(lambda: f64) -> Result<ExtendedFunction, FunctionError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(FunctionError::BadParameter { name: "glambda".into(), what: "λ > 0".into() });
    }
    Ok(ExtendedFunction::new(format!("glambda:{lambda}"), Interval::NONNEGATIVE, move |t| (t - 1.0).powi(2) / (t + lambda))
        .with_boundary(Finite(1.0 / lambda), Finite(1.0))
        .with_tags(convex()))
}

/// n(t-1)² / (t+n).
pub fn g_n(n: f64) -> Result<ExtendedFunction, FunctionError> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(FunctionError::BadParameter { name: "gn".into(), what: "n > 0".into() });
    }
    Ok(ExtendedFunction::new(format!("gn:{n}"), Interval::NONNEGATIVE, move |t| n * (t - 1.0).powi(2) / (t + n))
        .with_boundary(Finite(1.0), Finite(n))
        .with_tags(convex()))
}

/// a + b t.
pub fn affine(a: f64, b: f64) -> ExtendedFunction {
    let tags = Tags { operator_convex: true, operator_concave: true, operator_monotone: b >= 0.0, ..Tags::default() };
    ExtendedFunction::new(format!("affine:{a},{b}"), Interval::NONNEGATIVE, move |t| a + b * t)
        .with_boundary(Finite(a), Finite(b))
        .with_tags(tags)
}

/// (t-1)².
pub fn square_minus() -> ExtendedFunction {
    ExtendedFunction::new("square_minus", Interval::NONNEGATIVE, |t| (t - 1.0).powi(2))
        .with_boundary(Finite(1.0), Infinite)
        .with_tags(convex())
}

/// Catalog lookup by name with an optional list of numeric parameters.
pub fn catalog(name: &str, params: &[f64]) -> Result<ExtendedFunction, FunctionError> {
    let need = |k: usize, what: &str| -> Result<(), FunctionError> {
        if params.len() == k {
            Ok(())
        } else {
            Err(FunctionError::BadParameter { name: name.to_string(), what: what.to_string() })
        }
    };
    match name {
        "power" => {
            need(1, "p")?;
            power(params[0])
        }
        "anypower" => {
            need(1, "p")?;
            power_unchecked(params[0])
        }
        "tlogt" => need(0, "none").map(|_| tlogt()),
        "neglog" => need(0, "none").map(|_| neglog()),
        "ylogxy" => need(0, "none").map(|_| ylogxy_diagonal()),
        "glambda" | "g_lambda" => {
            need(1, "λ")?;
            g_lambda(params[0])
        }
        "gn" | "g_n" => {
            need(1, "n")?;
            g_n(params[0])
        }
        "affine" => {
            need(2, "a,b")?;
            Ok(affine(params[0], params[1]))
        }
        "square_minus" => need(0, "none").map(|_| square_minus()),
        other => Err(FunctionError::Unknown(other.to_string())),
    }
}

fn split_spec(spec: &str) -> Result<(&str, Vec<f64>), FunctionError> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let params = if rest.is_empty() {
        Vec::new()
    } else {
        rest.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| FunctionError::Unknown(spec.to_string())))
            .collect::<Result<_, _>>()?
    };
    Ok((name, params))
}

/// Parses `power:2`, `anypower:3`, `tlogt`, `neglog`, `glambda:0.5`, `gn:5`, `affine:a,b`,
/// `square_minus` or `repr77:<path>`.
pub fn parse_spec(spec: &str) -> Result<ExtendedFunction, FunctionError> {
    if let Some(path) = spec.strip_prefix("repr77:") {
        let text = std::fs::read_to_string(path)?;
        return Ok(from_repr77(&IntegralRepr77::from_json(&text)?));
    }
    let (name, params) = split_spec(spec)?;
    catalog(name, &params)
}

/// Non-negative operator monotone generators of connections.
pub fn monotone_catalog(name: &str, params: &[f64]) -> Result<ExtendedFunction, FunctionError> {
    let monotone = Tags { operator_monotone: true, operator_concave: true, ..Tags::default() };
    match (name, params) {
        ("power", [p]) if (0.0..=1.0).contains(p) => {
            let p = *p;
            let (beta, alpha) = if p == 0.0 {
                (Finite(1.0), Finite(0.0))
            } else if p == 1.0 {
                (Finite(0.0), Finite(1.0))
            } else {
                (Finite(0.0), Finite(0.0))
            };
            let at_zero = beta.to_f64();
            Ok(ExtendedFunction::new(format!("power:{p}"), Interval::NONNEGATIVE, move |t| if t == 0.0 { at_zero } else { t.powf(p) })
                .with_boundary(beta, alpha)
                .with_tags(monotone))
        }
        ("geometric", []) => monotone_catalog("power", &[0.5]),
        ("parallel", []) => Ok(ExtendedFunction::new("parallel", Interval::NONNEGATIVE, |t| t / (1.0 + t))
            .with_boundary(Finite(0.0), Finite(0.0))
            .with_tags(monotone)),
        ("arithmetic", []) => Ok(ExtendedFunction::new("arithmetic", Interval::NONNEGATIVE, |t| (1.0 + t) / 2.0)
            .with_boundary(Finite(0.5), Finite(0.5))
            .with_tags(monotone)),
        ("harmonic", []) => Ok(ExtendedFunction::new("harmonic", Interval::NONNEGATIVE, |t| 2.0 * t / (1.0 + t))
            .with_boundary(Finite(0.0), Finite(0.0))
            .with_tags(monotone)),
        _ => Err(FunctionError::Unknown(name.to_string())),
    }
}

pub fn parse_monotone_spec(spec: &str) -> Result<ExtendedFunction, FunctionError> {
    let (name, params) = split_spec(spec)?;
    monotone_catalog(name, &params)
}

/// f̃(t) = t f(1/t), with f̃(0⁺) = f′(∞) and f̃′(∞) = f(0⁺).
pub fn transpose(f: &ExtendedFunction) -> ExtendedFunction {
    let inner = f.clone();
    let alpha = f.slope_at_infinity;
    let at_zero = alpha.map_or(f64::NAN, ExtendedReal::to_f64);
    let domain = if alpha.is_some() { Interval::NONNEGATIVE } else { Interval::POSITIVE };
    let mut g = ExtendedFunction::new(format!("transpose({})", f.name), domain, move |t| {
        if t == 0.0 {
            at_zero
        } else {
            t * inner.raw(1.0 / t)
        }
    });
    g.at_zero_plus = f.slope_at_infinity;
    g.slope_at_infinity = f.at_zero_plus;
    g.tags = Tags { operator_convex: f.tags.operator_convex, ..Tags::default() };
    g
}

/// f(A) through the spectral decomposition; eigenvalues where f = ∞ form the ∞-part.
pub fn calculus(f: &ExtendedFunction, a: &CMatrix) -> Result<ExtendedSelfAdjoint, FunctionError> {
    calculus_with_tol(f, a, None)
}

/// [`calculus`] with eigenvalues within `endpoint_tol` of a closed domain endpoint
/// snapped onto it; `None` uses n · eps · max |λ|.
pub fn calculus_with_tol(f: &ExtendedFunction, a: &CMatrix, endpoint_tol: Option<f64>) -> Result<ExtendedSelfAdjoint, FunctionError> {
    let e = eigh(a)?;
    let tol = endpoint_tol.unwrap_or_else(|| e.psd_tolerance());
    let mut pairs = Vec::with_capacity(e.dim());
    for (k, &lambda) in e.values.iter().enumerate() {
        let t = f.domain.snap(lambda, tol);
        pairs.push((f.eval(t)?, e.column(k)));
    }
    if pairs.is_empty() {
        return Ok(ExtendedSelfAdjoint::zero(0));
    }
    Ok(ExtendedSelfAdjoint::make_extended(&pairs)?)
}

/// A measure on (0, ∞) realized as weighted atoms. The two flags record
/// divergence of ∫_{(1,∞)} dμ and of ∫_{(0,1)} dμ/λ for continuous measures
/// whose quadrature atoms are necessarily finite.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    pub atoms: Vec<(f64, f64)>,
    #[serde(default)]
    pub diverges_at_infinity: bool,
    #[serde(default)]
    pub inverse_diverges_at_zero: bool,
}

impl Measure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn atoms(atoms: Vec<(f64, f64)>) -> Result<Self, FunctionError> {
        let m = Self { atoms, ..Self::default() };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), FunctionError> {
        for &(location, weight) in &self.atoms {
            if !(location > 0.0 && location.is_finite() && weight >= 0.0 && weight.is_finite()) {
                return Err(FunctionError::BadAtom { location, weight });
            }
        }
        Ok(())
    }

    /// `density(λ) dλ` discretized by Gauss–Legendre under λ = s/(1-s), with
    /// s = sin²(πu/2) so that λ^{-1/2}-type endpoint behavior becomes smooth in u.
    pub fn from_density(density: impl Fn(f64) -> f64, nodes: usize) -> Self {
        let rule = GaussLegendre::new(nodes.max(1).try_into().expect("non-zero node count"));
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut atoms = Vec::with_capacity(nodes);
        for &(x, w) in rule.as_node_weight_pairs() {
            let u = 0.5 * (x + 1.0);
            let s = (half_pi * u).sin().powi(2);
            let one_minus = (half_pi * u).cos().powi(2);
            let lambda = s / one_minus;
            let ds_du = half_pi * (std::f64::consts::PI * u).sin();
            let weight = 0.5 * w * ds_du / (one_minus * one_minus) * density(lambda);
            if lambda > 0.0 && lambda.is_finite() && weight > 0.0 && weight.is_finite() {
                atoms.push((lambda, weight));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { atoms, ..Self::default() }
    }

    pub fn with_tails(mut self, diverges_at_infinity: bool, inverse_diverges_at_zero: bool) -> Self {
        self.diverges_at_infinity = diverges_at_infinity;
        self.inverse_diverges_at_zero = inverse_diverges_at_zero;
        self
    }

    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(l, w)| w * g(l)).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    /// Atoms inside [lo, hi].
    pub fn restricted(&self, lo: f64, hi: f64) -> Measure {
        Measure { atoms: self.atoms.iter().copied().filter(|&(l, _)| l >= lo && l <= hi).collect(), ..Measure::default() }
    }
}

/// f(t) = a + b(t-1) + c(t-1)² + d(t-1)²/t + ∫ (t-1)²/(t+λ) dμ(λ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralRepr77 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    #[serde(default)]
    pub mu: Measure,
}

impl IntegralRepr77 {
    pub fn new(a: f64, b: f64, c: f64, d: f64, mu: Measure) -> Result<Self, FunctionError> {
        let r = Self { a, b, c, d, mu };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), FunctionError> {
        if !(self.c >= 0.0) {
            return Err(FunctionError::NegativeCoefficient { field: "c", value: self.c });
        }
        if !(self.d >= 0.0) {
            return Err(FunctionError::NegativeCoefficient { field: "d", value: self.d });
        }
        self.mu.validate()
    }

    pub fn from_json(text: &str) -> Result<Self, FunctionError> {
        let r: Self = serde_json::from_str(text)?;
        r.validate()?;
        Ok(r)
    }

    /// f′(∞) = b + c·∞ + d + ∫ dμ.
    pub fn slope_at_infinity(&self) -> ExtendedReal {
        if self.c > 0.0 || self.mu.diverges_at_infinity {
            Infinite
        } else {
            Finite(self.b + self.d + self.mu.total_mass())
        }
    }

    /// f(0⁺) = a - b + c + d·∞ + ∫ dμ/λ.
    pub fn at_zero_plus(&self) -> ExtendedReal {
        if self.d > 0.0 || self.mu.inverse_diverges_at_zero {
            Infinite
        } else {
            Finite(self.a - self.b + self.c + self.mu.integrate(|l| 1.0 / l))
        }
    }
}

pub fn from_repr77(r: &IntegralRepr77) -> ExtendedFunction {
    let beta = r.at_zero_plus();
    let at_zero = beta.to_f64();
    let rep = r.clone();
    ExtendedFunction::new("repr77", Interval::NONNEGATIVE, move |t| {
        if t == 0.0 {
            return at_zero;
        }
        let s = (t - 1.0).powi(2);
        rep.a + rep.b * (t - 1.0) + rep.c * s + rep.d * s / t + rep.mu.integrate(|l| s / (t + l))
    })
    .with_boundary(beta, r.slope_at_infinity())
    .with_tags(convex())
}

/// f(t) = f(0⁺) + f′(0⁺) t + c t² + ∫ t²/(t+λ) dν(λ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralRepr97 {
    pub f0: f64,
    pub fp0: f64,
    pub c: f64,
    #[serde(default)]
    pub nu: Measure,
}

impl IntegralRepr97 {
    pub fn new(f0: f64, fp0: f64, c: f64, nu: Measure) -> Result<Self, FunctionError> {
        if !(c >= 0.0) {
            return Err(FunctionError::NegativeCoefficient { field: "c", value: c });
        }
        nu.validate()?;
        Ok(Self { f0, fp0, c, nu })
    }

    pub fn to_function(&self) -> ExtendedFunction {
        let rep = self.clone();
        let alpha =
            if self.c > 0.0 || self.nu.diverges_at_infinity { Infinite } else { Finite(self.fp0 + self.nu.total_mass()) };
        ExtendedFunction::new("repr97", Interval::NONNEGATIVE, move |t| {
            rep.f0 + rep.fp0 * t + rep.c * t * t + rep.nu.integrate(|l| t * t / (t + l))
        })
        .with_boundary(Finite(self.f0), alpha)
        .with_tags(convex())
    }
}

/// The n-th monotone approximant of an operator convex f and its rewritten
/// form f_n(t) = α_n t + β_n - h_n(t).
#[derive(Debug, Clone)]
pub struct Approximant {
    pub n: f64,
    pub f_n: ExtendedFunction,
    pub alpha_n: f64,
    pub beta_n: f64,
    pub nu_n: Measure,
    /// h_n(t) = ∫ t(1+λ)/(t+λ) dν_n(λ), non-negative operator monotone.
    pub h_n: ExtendedFunction,
}

impl Approximant {
    /// α_n t + β_n - h_n(t).
    pub fn rewritten(&self, t: f64) -> f64 {
        self.alpha_n * t + self.beta_n - self.h_n.raw(t)
    }
}

pub fn approximants(r: &IntegralRepr77, n: usize) -> Result<Approximant, FunctionError> {
    if n == 0 {
        return Err(FunctionError::BadParameter { name: "approximants".into(), what: "n ≥ 1".into() });
    }
    let nf = n as f64;
    let lo = 1.0 / nf;
    let window = r.mu.restricted(lo, nf);
    let alpha_n = r.b + nf * r.c + r.d + window.total_mass();
    let beta_n = r.a - r.b + r.c + nf * r.d + window.integrate(|l| 1.0 / l);

    let mut atoms = Vec::new();
    if r.c > 0.0 {
        atoms.push((nf, (1.0 + nf) * r.c));
    }
    if r.d > 0.0 {
        atoms.push((lo, (1.0 + nf) * r.d));
    }
    atoms.extend(window.atoms.iter().map(|&(l, w)| (l, (1.0 + l) / l * w)));
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let nu_n = Measure { atoms, ..Measure::default() };

    let rep = r.clone();
    let win = window.clone();
    let f_n = ExtendedFunction::new(format!("approximant:{n}"), Interval::NONNEGATIVE, move |t| {
        let s = (t - 1.0).powi(2);
        rep.a + rep.b * (t - 1.0) + nf * rep.c * s / (t + nf) + rep.d * s / (t + lo) + win.integrate(|l| s / (t + l))
    })
    .with_boundary(Finite(beta_n), Finite(alpha_n))
    .with_tags(convex());

    let nu = nu_n.clone();
    let h_n = ExtendedFunction::new(format!("h:{n}"), Interval::NONNEGATIVE, move |t| nu.integrate(|l| t * (1.0 + l) / (t + l)))
        .with_boundary(Finite(0.0), Finite(0.0))
        .with_tags(Tags { operator_monotone: true, operator_concave: true, ..Tags::default() });

    Ok(Approximant { n: nf, f_n, alpha_n, beta_n, nu_n, h_n })
}

/// One sampled counterexample to f(V*AV) ≤ V*f(A)V.
#[derive(Debug, Clone)]
pub struct ConvexityWitness {
    pub trial: u64,
    pub a: CMatrix,
    pub v: CMatrix,
    pub xi: CVector,
    pub lhs: ExtendedReal,
    pub rhs: ExtendedReal,
}

#[derive(Debug, Clone)]
pub struct ConvexityReport {
    pub trials: u64,
    pub passes: u64,
    pub witnesses: Vec<ConvexityWitness>,
}

impl ConvexityReport {
    pub fn passed(&self) -> bool {
        self.witnesses.is_empty()
    }
}

fn sample_point(rng: &mut impl Rng, j: Interval) -> f64 {
    let roll: f64 = rng.gen();
    if j.lo_closed && roll < 0.15 {
        return j.lo;
    }
    if j.hi_closed && j.hi.is_finite() && roll > 0.85 {
        return j.hi;
    }
    if j.hi.is_infinite() {
        let base = if j.lo > 0.0 { j.lo } else { 0.0 };
        base + log_uniform(rng, 1e-2, 1e2)
    } else {
        let x = rng.gen_range(0.0..1.0);
        let t = j.lo + (j.hi - j.lo) * x;
        if j.contains(t) {
            t
        } else {
            0.5 * (j.lo + j.hi)
        }
    }
}

/// Falsifier for operator convexity: f(V*AV) ≤ V*f(A)V on random A with
/// spectrum in `sample` and random isometries V: C^k → C^n.
pub fn check_operator_convex_on(
    f: &ExtendedFunction,
    sample: Interval,
    dims: (usize, usize),
    trials: u64,
    seed: u64,
) -> Result<ConvexityReport, FunctionError> {
    let (n, k) = dims;
    let mut witnesses = Vec::new();
    for trial in 0..trials {
        let mut rng = rng_for(seed, trial);
        let spectrum: Vec<f64> = (0..n).map(|_| sample_point(&mut rng, sample)).collect();
        let a = with_spectrum(&mut rng, &spectrum);
        let v = random_isometry(&mut rng, n, k);
        let compressed = v.adjoint() * &a * &v;
        // V may land in a spectral subspace of A where V*AV is rounding noise
        let noise = n as f64 * f64::EPSILON * spectrum.iter().fold(1.0f64, |m, t| m.max(t.abs()));
        let lhs = calculus_with_tol(f, &compressed, Some(noise))?;
        let rhs = calculus(f, &a)?.congruence(&v)?;
        let scale = 1.0 + spectrum.iter().map(|&t| f.raw(t).abs()).filter(|x| x.is_finite()).fold(0.0, f64::max);
        let cmp = lhs.form_leq(&rhs, 1e-8 * scale);
        if !cmp.holds {
            let xi = cmp.witness.expect("failed comparison carries a witness");
            witnesses.push(ConvexityWitness {
                trial,
                lhs: lhs.quadratic_form(&xi)?,
                rhs: rhs.quadratic_form(&xi)?,
                a,
                v,
                xi,
            });
        }
    }
    Ok(ConvexityReport { trials, passes: trials - witnesses.len() as u64, witnesses })
}

pub fn check_operator_convex(f: &ExtendedFunction, dims: (usize, usize), trials: u64, seed: u64) -> Result<ConvexityReport, FunctionError> {
    check_operator_convex_on(f, f.domain, dims, trials, seed)
}

#[derive(Debug, Clone)]
pub struct EndpointCheck {
    pub endpoint: f64,
    pub value: ExtendedReal,
    /// One-sided limit estimated on a geometric approach grid (∞ if the grid diverges).
    pub limit: ExtendedReal,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct BoundaryReport {
    pub lower: Option<EndpointCheck>,
    pub upper: Option<EndpointCheck>,
    pub interior_real_valued: bool,
    pub interior_convexity: ConvexityReport,
}

impl BoundaryReport {
    pub fn passed(&self) -> bool {
        self.lower.as_ref().is_none_or(|e| e.holds)
            && self.upper.as_ref().is_none_or(|e| e.holds)
            && self.interior_real_valued
            && self.interior_convexity.passed()
    }
}

const DIVERGENCE_FACTOR: f64 = 1e8;

fn endpoint_check(f: &ExtendedFunction, endpoint: f64, toward: f64) -> Result<EndpointCheck, FunctionError> {
    let value = f.eval(endpoint)?;
    let reference = f.raw(0.5 * (endpoint + toward)).abs();
    let grid: Vec<f64> = (2..=12).map(|k| f.raw(endpoint + (toward - endpoint) * 10f64.powi(-k))).collect();
    let last = *grid.last().expect("non-empty grid");
    let limit = if !last.is_finite() || last.abs() > DIVERGENCE_FACTOR * (1.0 + reference) {
        if last > 0.0 { Infinite } else { Finite(f64::MIN) }
    } else {
        Finite(last)
    };
    let holds = match (value, limit) {
        (Infinite, _) => true,
        (Finite(_), Infinite) => false,
        (Finite(v), Finite(l)) => v >= l - 1e-6 * (1.0 + l.abs()),
    };
    Ok(EndpointCheck { endpoint, value, limit, holds })
}

/// Boundary behavior of an operator convex function on a closed or half-closed
/// interval: f(a) ≥ f(a⁺), f(b) ≥ f(b⁻), ℝ-valued interior, convex interior.
pub fn check_theorem37_boundary(f: &ExtendedFunction, trials: u64, seed: u64) -> Result<BoundaryReport, FunctionError> {
    let j = f.domain;
    let lower = if j.lo_closed { Some(endpoint_check(f, j.lo, if j.hi.is_finite() { j.hi } else { j.lo + 1.0 })?) } else { None };
    let upper = if j.hi_closed && j.hi.is_finite() { Some(endpoint_check(f, j.hi, j.lo)?) } else { None };
    let hi = if j.hi.is_finite() { j.hi } else { j.lo + 100.0 };
    let interior_real_valued = (1..200).all(|k| {
        let t = j.lo + (hi - j.lo) * k as f64 / 200.0;
        f.raw(t).is_finite()
    });
    let interior_convexity = check_operator_convex_on(f, j.interior(), (3, 2), trials, seed)?;
    Ok(BoundaryReport { lower, upper, interior_real_valued, interior_convexity })
}

#[derive(Debug, Clone)]
pub struct PmiReport {
    pub trials: u64,
    /// (t, p, f(t^p), f(t)^p) for each violation.
    pub failures: Vec<(f64, f64, f64, f64)>,
}

impl PmiReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// f(t^p) ≥ f(t)^p on log-uniform samples t ∈ [1e-3, 1e3], p ∈ [1, 8].
pub fn check_pmi(f: &ExtendedFunction, trials: u64, seed: u64) -> PmiReport {
    let mut failures = Vec::new();
    for trial in 0..trials {
        let mut rng = rng_for(seed, trial);
        let t = log_uniform(&mut rng, 1e-3, 1e3);
        let p = log_uniform(&mut rng, 1.0, 8.0);
        let lhs = f.raw(t.powf(p));
        let rhs = f.raw(t).powf(p);
        if lhs < rhs - 1e-10 * rhs.abs().max(1.0) {
            failures.push((t, p, lhs, rhs));
        }
    }
    PmiReport { trials, failures }
}

/// Declared f(0⁺), f′(∞) against geometric sample grids: finite values must
/// match within 1e-6, declared ∞ must show growth.
pub fn verify_boundary_metadata(f: &ExtendedFunction) -> bool {
    let near_zero: Vec<f64> = (4..=12).map(|k| f.raw(10f64.powi(-k))).collect();
    let far: Vec<f64> = (4..=12).map(|k| {
        let t = 10f64.powi(k);
        f.raw(t) / t
    }).collect();
    let agrees = |declared: Option<ExtendedReal>, seq: &[f64]| match declared {
        None => true,
        Some(Finite(v)) => (seq[seq.len() - 1] - v).abs() <= 1e-6 * (1.0 + v.abs()),
        Some(Infinite) => seq.windows(2).all(|w| w[1] >= w[0]) && seq[seq.len() - 1] > seq[0] + 1.0,
    };
    agrees(f.at_zero_plus, &near_zero) && agrees(f.slope_at_infinity, &far)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generators::random_unitary;
    use crate::matrix_core::{diag, max_abs_entry};

    fn tlogt_measure(nodes: usize) -> Measure {
        Measure::from_density(|l| l / (1.0 + l).powi(2), nodes).with_tails(true, false)
    }

    #[test]
    fn catalog_metadata() {
        let sq = catalog("power", &[2.0]).unwrap();
        assert_eq!(sq.at_one().unwrap(), Finite(1.0));
        assert_eq!(sq.at_zero_plus(), Some(Finite(0.0)));
        assert_eq!(sq.slope_at_infinity(), Some(Infinite));

        let t = tlogt();
        assert_eq!(t.at_one().unwrap(), Finite(0.0));
        assert_eq!((t.at_zero_plus(), t.slope_at_infinity()), (Some(Finite(0.0)), Some(Infinite)));

        let nl = neglog();
        assert_eq!(nl.at_one().unwrap(), Finite(0.0));
        assert_eq!((nl.at_zero_plus(), nl.slope_at_infinity()), (Some(Infinite), Some(Finite(0.0))));

        let inv = power(-0.5).unwrap();
        assert_eq!((inv.at_zero_plus(), inv.slope_at_infinity()), (Some(Infinite), Some(Finite(0.0))));
    }

    #[test]
    fn catalog_rejects_non_convex_powers() {
        for p in [0.5, 2.5, -1.5, 3.0] {
            assert!(matches!(power(p), Err(FunctionError::NotOperatorConvex(_))));
        }
        assert!(matches!(catalog("nope", &[]), Err(FunctionError::Unknown(_))));
    }

    #[test]
    fn catalog_metadata_matches_samples() {
        for spec in ["power:2", "power:1.5", "power:-1", "power:-0.3", "power:1", "tlogt", "neglog", "glambda:0.5", "gn:5", "square_minus"] {
            let f = parse_spec(spec).unwrap();
            assert!(verify_boundary_metadata(&f), "{spec}");
        }
    }

    #[test]
    fn repr77_examples() {
        let f = from_repr77(&IntegralRepr77::new(0.0, 1.0, 0.0, 0.0, Measure::zero()).unwrap());
        assert_eq!(f.raw(3.0), 2.0);
        assert_eq!((f.slope_at_infinity(), f.at_zero_plus()), (Some(Finite(1.0)), Some(Finite(-1.0))));

        let f = from_repr77(&IntegralRepr77::new(0.0, 0.0, 1.0, 0.0, Measure::zero()).unwrap());
        assert_eq!(f.raw(3.0), 4.0);
        assert_eq!((f.slope_at_infinity(), f.at_zero_plus()), (Some(Infinite), Some(Finite(1.0))));
    }

    #[test]
    fn repr77_of_tlogt_matches_catalog() {
        let f = from_repr77(&IntegralRepr77::new(0.0, 1.0, 0.0, 0.0, tlogt_measure(200)).unwrap());
        let g = tlogt();
        for k in 0..=40 {
            let t = 0.1 * 100f64.powf(k as f64 / 40.0);
            assert!((f.raw(t) - g.raw(t)).abs() < 1e-8, "t = {t}: {} vs {}", f.raw(t), g.raw(t));
        }
        assert_eq!(f.slope_at_infinity(), Some(Infinite));
        assert!((f.at_zero_plus().unwrap().finite().unwrap()).abs() < 1e-8);
    }

    #[test]
    fn repr77_at_one_is_exactly_a() {
        let r = IntegralRepr77::new(0.37, -2.0, 1.5, 0.25, tlogt_measure(50)).unwrap();
        assert_eq!(from_repr77(&r).raw(1.0), 0.37);
    }

    #[test]
    fn approximant_of_square_minus_at_one() {
        let r = IntegralRepr77::new(0.0, 0.0, 1.0, 0.0, Measure::zero()).unwrap();
        let ap = approximants(&r, 1).unwrap();
        assert_eq!((ap.alpha_n, ap.beta_n), (1.0, 1.0));
        assert_eq!(ap.nu_n.atoms, vec![(1.0, 2.0)]);
        for t in [0.0, 0.3, 1.0, 2.0, 7.5] {
            assert!((ap.f_n.raw(t) - (t - 1.0).powi(2) / (t + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn approximant_of_affine_is_itself() {
        let r = IntegralRepr77::new(0.0, 1.0, 0.0, 0.0, Measure::zero()).unwrap();
        for n in [1, 2, 10] {
            let ap = approximants(&r, n).unwrap();
            assert!(ap.nu_n.atoms.is_empty());
            for t in [0.0, 0.5, 4.0] {
                assert_eq!(ap.f_n.raw(t), t - 1.0);
            }
        }
    }

    #[test]
    fn approximants_rewrite_and_increase() {
        let reprs = [
            IntegralRepr77::new(0.2, -0.5, 1.0, 0.7, tlogt_measure(64)).unwrap(),
            IntegralRepr77::new(0.0, 1.0, 0.0, 0.0, tlogt_measure(200)).unwrap(),
            IntegralRepr77::new(0.0, 0.0, 0.0, 1.0, Measure::atoms(vec![(0.5, 1.0), (3.0, 0.25)]).unwrap()).unwrap(),
        ];
        for r in &reprs {
            let f = from_repr77(r);
            let mut prev: Option<Approximant> = None;
            for n in [1, 2, 5, 20, 100] {
                let ap = approximants(r, n).unwrap();
                for k in 0..=60 {
                    let t = 1e-3 * 1e6f64.powf(k as f64 / 60.0);
                    let direct = ap.f_n.raw(t);
                    assert!((direct - ap.rewritten(t)).abs() <= 1e-9 * (1.0 + direct.abs()), "n={n} t={t}");
                    assert!(direct <= f.raw(t) + 1e-12 * (1.0 + direct.abs()));
                    if let Some(p) = &prev {
                        assert!(p.f_n.raw(t) <= direct + 1e-12 * (1.0 + direct.abs()));
                    }
                }
                prev = Some(ap);
            }
            let tail = approximants(r, 100_000).unwrap();
            assert!((tail.f_n.raw(2.0) - f.raw(2.0)).abs() < 1e-3);
        }
    }

    #[test]
    fn transpose_examples() {
        let t2 = transpose(&power(2.0).unwrap());
        let inv = power(-1.0).unwrap();
        for t in [0.1, 1.0, 3.0] {
            assert!((t2.raw(t) - inv.raw(t)).abs() < 1e-14);
        }
        assert_eq!(t2.at_zero_plus(), inv.at_zero_plus());
        assert_eq!(t2.slope_at_infinity(), inv.slope_at_infinity());

        let tl = transpose(&tlogt());
        for t in [0.1, 1.0, 3.0] {
            assert!((tl.raw(t) - neglog().raw(t)).abs() < 1e-14);
        }
        let f = g_lambda(0.3).unwrap();
        let ff = transpose(&transpose(&f));
        for t in [0.0, 0.2, 1.7, 9.0] {
            assert!((ff.raw(t) - f.raw(t)).abs() < 1e-12);
        }
        assert_eq!(ff.at_zero_plus(), f.at_zero_plus());
        assert_eq!(tl.at_zero_plus(), tlogt().slope_at_infinity());
        assert_eq!(tl.slope_at_infinity(), tlogt().at_zero_plus());
    }

    #[test]
    fn calculus_examples() {
        let sq = calculus(&power(2.0).unwrap(), &diag(&[1.0, 3.0])).unwrap();
        assert!(max_abs_entry(&(sq.to_matrix().unwrap() - diag(&[1.0, 9.0]))) < 1e-13);

        let nl = calculus(&neglog(), &diag(&[0.0, 1.0])).unwrap();
        assert_eq!(nl.infinity_dim(), 1);
        assert_eq!(nl.quadratic_form(&crate::harness::generators::real_unit(2, 1)).unwrap(), Finite(0.0));
        assert_eq!(nl.quadratic_form(&crate::harness::generators::real_unit(2, 0)).unwrap(), Infinite);

        let e = std::f64::consts::E;
        let tl = calculus(&tlogt(), &diag(&[1.0, e])).unwrap();
        assert!(max_abs_entry(&(tl.to_matrix().unwrap() - diag(&[0.0, e]))) < 1e-14);
    }

    #[test]
    fn calculus_rejects_out_of_domain() {
        let err = calculus(&power(2.0).unwrap(), &diag(&[-1.0, 1.0])).unwrap_err();
        assert!(matches!(err, FunctionError::Domain { eigenvalue, .. } if eigenvalue == -1.0));
    }

    #[test]
    fn calculus_is_unitarily_covariant() {
        for trial in 0..20 {
            let mut rng = rng_for(21, trial);
            let a = crate::harness::generators::random_psd(&mut rng, 4, 3);
            let u = random_unitary(&mut rng, 4);
            for f in [tlogt(), neglog(), power(1.5).unwrap()] {
                let lhs = calculus(&f, &(u.adjoint() * &a * &u)).unwrap();
                let rhs = calculus(&f, &a).unwrap().congruence(&u).unwrap();
                assert!(lhs.approx_eq(&rhs, 1e-9), "{}", f.name());
                assert_eq!(lhs.infinity_dim(), rhs.infinity_dim());
            }
        }
    }

    #[test]
    fn convexity_falsifier() {
        let sq = power(2.0).unwrap();
        assert!(check_operator_convex(&sq, (4, 2), 300, 1).unwrap().passed());
        let cube = ExtendedFunction::new("cube", Interval::NONNEGATIVE, |t| t.powi(3)).with_boundary(Finite(0.0), Infinite);
        let report = check_operator_convex(&cube, (4, 2), 300, 1).unwrap();
        assert!(!report.witnesses.is_empty());
        let w = &report.witnesses[0];
        assert!(w.lhs > w.rhs);
        // infinite everywhere except at 1: vacuous
        let spike = ExtendedFunction::new("spike", Interval::NONNEGATIVE, |t| if t == 1.0 { 0.0 } else { f64::INFINITY });
        assert!(check_operator_convex(&spike, (4, 2), 100, 2).unwrap().passed());
    }

    #[test]
    fn boundary_checks() {
        let diag_sq = ExtendedFunction::new("t2 diagonal", Interval::UNIT, |t| if t == 1.0 { f64::INFINITY } else { t * t / (1.0 - t) });
        assert!(check_theorem37_boundary(&diag_sq, 100, 3).unwrap().passed());

        let diag_tlogt = ExtendedFunction::new("tlogt diagonal", Interval::UNIT, |t| {
            if t == 0.0 {
                0.0
            } else if t == 1.0 {
                f64::INFINITY
            } else {
                t * (t / (1.0 - t)).ln()
            }
        });
        assert!(check_theorem37_boundary(&diag_tlogt, 100, 3).unwrap().passed());

        let dropped = ExtendedFunction::new("drop at 1", Interval::UNIT, |t| if t == 1.0 { 0.0 } else { t });
        let report = check_theorem37_boundary(&dropped, 20, 3).unwrap();
        assert!(!report.passed());
        let upper = report.upper.unwrap();
        assert_eq!(upper.value, Finite(0.0));
        assert!((upper.limit.finite().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pmi_checks() {
        assert!(check_pmi(&power(2.0).unwrap(), 500, 4).passed());
        let shifted = ExtendedFunction::new("t+1", Interval::NONNEGATIVE, |t| t + 1.0);
        assert!(!check_pmi(&shifted, 500, 4).passed());
        let kink = ExtendedFunction::new("max(t,1)", Interval::NONNEGATIVE, |t| t.max(1.0));
        assert!(check_pmi(&kink, 500, 4).passed());
    }
}
