//! Functions on the unit circle.
//!
//! The workhorse kinds are coefficient-backed: trigonometric polynomials and
//! truncated absolutely convergent series `f(z) = sum c_n z^n`. The sawtooth
//! `f(e^{i theta}) = |theta|` is kept as a deliberately non-smooth witness:
//! it is Lipschitz on the circle but not operator Lipschitz, and its
//! derivative does not exist at `theta in {0, pi}`. Library callers may also
//! wrap arbitrary eval/deriv closures.
//!
//! Derivatives are with respect to `z`, so `d/dtheta f(e^{i theta})
//! = i e^{i theta} f'(e^{i theta})`. Under this convention contour integrals
//! `\oint f'(z) xi(z) dz` reduce to exact arc sums for piecewise-constant xi.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::linalg::{cis, normalize_angle, Complex64};

/// Cap on `sum |n c_n|` past which a supplied series is rejected.
const DIVERGENCE_CAP: f64 = 1e12;
/// Exact-hit tolerance for the sawtooth's singular angles.
const SINGULAR_ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CircleFnError {
    #[error("derivative is undefined at angle {theta}")]
    DerivativeUndefined { theta: f64 },
    #[error("series weight sum |n c_n| = {mass:.3e} exceeds {cap:.1e}")]
    DivergentSeries { mass: f64, cap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircleFunctionKind {
    TrigPoly,
    AbsSeries,
    Sawtooth,
    Custom,
}

type EvalFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;
type DerivFn = Arc<dyn Fn(Complex64) -> Result<Complex64, CircleFnError> + Send + Sync>;

#[derive(Clone)]
enum Repr {
    TrigPoly {
        coeffs: BTreeMap<i64, Complex64>,
    },
    AbsSeries {
        coeffs: BTreeMap<i64, Complex64>,
        tail_bound: f64,
    },
    Sawtooth,
    Custom {
        eval: EvalFn,
        deriv: DerivFn,
    },
}

#[derive(Clone)]
pub struct CircleFunction {
    repr: Repr,
}

impl std::fmt::Debug for CircleFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.repr {
            Repr::TrigPoly { coeffs } => f.debug_struct("TrigPoly").field("coeffs", coeffs).finish(),
            Repr::AbsSeries { coeffs, tail_bound } => f
                .debug_struct("AbsSeries")
                .field("support", &coeffs.len())
                .field("tail_bound", tail_bound)
                .finish(),
            Repr::Sawtooth => f.write_str("Sawtooth"),
            Repr::Custom { .. } => f.write_str("Custom"),
        }
    }
}

fn prune(coeffs: BTreeMap<i64, Complex64>) -> BTreeMap<i64, Complex64> {
    coeffs
        .into_iter()
        .filter(|(_, c)| c.norm() != 0.0)
        .collect()
}

impl CircleFunction {
    /// Trigonometric polynomial `sum c_n z^n` from finitely many coefficients.
    pub fn trig_poly(coeffs: BTreeMap<i64, Complex64>) -> Self {
        Self {
            repr: Repr::TrigPoly {
                coeffs: prune(coeffs),
            },
        }
    }

    /// Single monomial `c z^n`.
    pub fn monomial(n: i64, c: Complex64) -> Self {
        Self::trig_poly([(n, c)].into_iter().collect())
    }

    /// Truncation of an absolutely convergent series at `|n| <= truncation`.
    /// Records the discarded weight `sum_{|n| > truncation} |n c_n|` over the
    /// supplied support as the tail bound.
    pub fn abs_conv_series(
        coeffs: BTreeMap<i64, Complex64>,
        truncation: i64,
    ) -> Result<Self, CircleFnError> {
        let mass: f64 = coeffs.iter().map(|(&n, c)| n.abs() as f64 * c.norm()).sum();
        if !mass.is_finite() || mass > DIVERGENCE_CAP {
            return Err(CircleFnError::DivergentSeries {
                mass,
                cap: DIVERGENCE_CAP,
            });
        }
        let tail_bound: f64 = coeffs
            .iter()
            .filter(|(&n, _)| n.abs() > truncation)
            .map(|(&n, c)| n.abs() as f64 * c.norm())
            .sum();
        let kept = coeffs
            .into_iter()
            .filter(|(n, _)| n.abs() <= truncation)
            .collect();
        Ok(Self {
            repr: Repr::AbsSeries {
                coeffs: prune(kept),
                tail_bound,
            },
        })
    }

    /// The sawtooth `f(e^{i theta}) = |theta|`, `theta in (-pi, pi]`:
    /// Lipschitz on the circle but not operator Lipschitz, with no derivative
    /// at `theta in {0, pi}`.
    pub fn sawtooth() -> Self {
        Self { repr: Repr::Sawtooth }
    }

    /// Arbitrary eval/deriv pair supplied by a library caller.
    pub fn custom(
        eval: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        deriv: impl Fn(Complex64) -> Result<Complex64, CircleFnError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            repr: Repr::Custom {
                eval: Arc::new(eval),
                deriv: Arc::new(deriv),
            },
        }
    }

    pub fn kind(&self) -> CircleFunctionKind {
        match &self.repr {
            Repr::TrigPoly { .. } => CircleFunctionKind::TrigPoly,
            Repr::AbsSeries { .. } => CircleFunctionKind::AbsSeries,
            Repr::Sawtooth => CircleFunctionKind::Sawtooth,
            Repr::Custom { .. } => CircleFunctionKind::Custom,
        }
    }

    /// Fourier coefficients, for the coefficient-backed kinds.
    pub fn coeffs(&self) -> Option<&BTreeMap<i64, Complex64>> {
        match &self.repr {
            Repr::TrigPoly { coeffs } | Repr::AbsSeries { coeffs, .. } => Some(coeffs),
            _ => None,
        }
    }

    /// Discarded series weight `sum_{|n| > N} |n c_n|`, for truncations.
    pub fn tail_bound(&self) -> Option<f64> {
        match &self.repr {
            Repr::AbsSeries { tail_bound, .. } => Some(*tail_bound),
            _ => None,
        }
    }

    /// `sum |n c_n|`: the L1 mass of the derivative's Fourier coefficients.
    pub fn deriv_coeff_mass(&self) -> Option<f64> {
        self.coeffs()
            .map(|c| c.iter().map(|(&n, v)| n.abs() as f64 * v.norm()).sum())
    }

    /// `sum |n^2 c_n|`: controls second-order finite-difference error.
    pub fn second_deriv_coeff_mass(&self) -> Option<f64> {
        self.coeffs()
            .map(|c| c.iter().map(|(&n, v)| (n * n) as f64 * v.norm()).sum())
    }

    /// True when the derivative exists at every point of the circle.
    pub fn everywhere_differentiable(&self) -> bool {
        !matches!(self.repr, Repr::Sawtooth)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match &self.repr {
            Repr::TrigPoly { coeffs } | Repr::AbsSeries { coeffs, .. } => {
                let theta = z.arg();
                coeffs
                    .iter()
                    .map(|(&n, &c)| c * cis(n as f64 * theta))
                    .sum()
            }
            Repr::Sawtooth => Complex64::new(z.arg().abs(), 0.0),
            Repr::Custom { eval, .. } => eval(z),
        }
    }

    /// Derivative with respect to `z`.
    pub fn deriv(&self, z: Complex64) -> Result<Complex64, CircleFnError> {
        match &self.repr {
            Repr::TrigPoly { coeffs } | Repr::AbsSeries { coeffs, .. } => {
                let theta = z.arg();
                Ok(coeffs
                    .iter()
                    .map(|(&n, &c)| c * n as f64 * cis((n - 1) as f64 * theta))
                    .sum())
            }
            Repr::Sawtooth => {
                let theta = normalize_angle(z.arg());
                if theta.abs() <= SINGULAR_ANGLE_TOL || (theta.abs() - PI).abs() <= SINGULAR_ANGLE_TOL
                {
                    return Err(CircleFnError::DerivativeUndefined { theta });
                }
                // d/dtheta |theta| = sign(theta); convert via f' = (df/dtheta)/(iz).
                let slope = theta.signum();
                Ok(Complex64::new(slope, 0.0) / (Complex64::i() * z))
            }
            Repr::Custom { deriv, .. } => deriv(z),
        }
    }

    /// `d/dtheta f(e^{i theta}) = i e^{i theta} f'(e^{i theta})`.
    pub fn theta_deriv(&self, theta: f64) -> Result<Complex64, CircleFnError> {
        let z = cis(theta);
        Ok(Complex64::i() * z * self.deriv(z)?)
    }

    /// The rotated function `tau -> f(z0 tau)` for unit-modulus `z0`.
    /// Coefficient-backed kinds rotate exactly (`c_n -> c_n z0^n`); other
    /// kinds compose pointwise.
    pub fn rotate(&self, z0: Complex64) -> Self {
        assert!(
            (z0.norm() - 1.0).abs() <= 1e-12,
            "rotation point must lie on the unit circle"
        );
        match &self.repr {
            Repr::TrigPoly { coeffs } => Self {
                repr: Repr::TrigPoly {
                    coeffs: rotate_coeffs(coeffs, z0),
                },
            },
            Repr::AbsSeries { coeffs, tail_bound } => Self {
                repr: Repr::AbsSeries {
                    coeffs: rotate_coeffs(coeffs, z0),
                    tail_bound: *tail_bound,
                },
            },
            _ => {
                let inner = self.clone();
                let inner_deriv = self.clone();
                Self::custom(
                    move |tau| inner.eval(z0 * tau),
                    move |tau| Ok(z0 * inner_deriv.deriv(z0 * tau)?),
                )
            }
        }
    }
}

fn rotate_coeffs(coeffs: &BTreeMap<i64, Complex64>, z0: Complex64) -> BTreeMap<i64, Complex64> {
    let phi = z0.arg();
    coeffs
        .iter()
        .map(|(&n, &c)| (n, c * cis(n as f64 * phi)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FunctionSpecError {
    #[error("invalid function spec JSON: {0}")]
    Json(String),
    #[error("function spec is missing field `{0}`")]
    MissingField(&'static str),
    #[error("unknown function kind `{0}`")]
    UnknownKind(String),
    #[error("bad coefficient key `{0}`: keys must be decimal integers")]
    BadCoefficientKey(String),
    #[error("coefficient values must be [re, im] pairs")]
    BadCoefficientValue,
    #[error("unknown series rule `{0}` (supported: geometric)")]
    UnknownRule(String),
    #[error("geometric ratio must satisfy 0 < ratio < 1, got {0}")]
    BadRatio(f64),
    #[error("truncation order must be at least 1")]
    BadTruncation,
    #[error(transparent)]
    Series(#[from] CircleFnError),
}

/// Parse the function-spec JSON accepted on the command line:
///
/// ```json
/// {"kind":"trig","coeffs":{"-2":[0.0,1.0],"3":[1.0,0.0]}}
/// {"kind":"abs_series","rule":"geometric","ratio":0.5,"N":20}
/// {"kind":"sawtooth"}
/// ```
pub fn from_spec_json(text: &str) -> Result<CircleFunction, FunctionSpecError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| FunctionSpecError::Json(e.to_string()))?;
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or(FunctionSpecError::MissingField("kind"))?;
    match kind {
        "trig" => {
            let coeffs = value
                .get("coeffs")
                .and_then(|c| c.as_object())
                .ok_or(FunctionSpecError::MissingField("coeffs"))?;
            let mut map = BTreeMap::new();
            for (key, entry) in coeffs {
                let n: i64 = key
                    .parse()
                    .map_err(|_| FunctionSpecError::BadCoefficientKey(key.clone()))?;
                let pair = entry
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or(FunctionSpecError::BadCoefficientValue)?;
                let re = pair[0].as_f64().ok_or(FunctionSpecError::BadCoefficientValue)?;
                let im = pair[1].as_f64().ok_or(FunctionSpecError::BadCoefficientValue)?;
                map.insert(n, Complex64::new(re, im));
            }
            Ok(CircleFunction::trig_poly(map))
        }
        "abs_series" => {
            let rule = value
                .get("rule")
                .and_then(|r| r.as_str())
                .ok_or(FunctionSpecError::MissingField("rule"))?;
            if rule != "geometric" {
                return Err(FunctionSpecError::UnknownRule(rule.to_string()));
            }
            let ratio = value
                .get("ratio")
                .and_then(|r| r.as_f64())
                .ok_or(FunctionSpecError::MissingField("ratio"))?;
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(FunctionSpecError::BadRatio(ratio));
            }
            let truncation = value
                .get("N")
                .and_then(|n| n.as_i64())
                .ok_or(FunctionSpecError::MissingField("N"))?;
            if truncation < 1 {
                return Err(FunctionSpecError::BadTruncation);
            }
            Ok(geometric_series(ratio, truncation)?)
        }
        "sawtooth" => Ok(CircleFunction::sawtooth()),
        other => Err(FunctionSpecError::UnknownKind(other.to_string())),
    }
}

/// `c_n = ratio^{|n|}` truncated at `|n| <= truncation`. The support is
/// materialized well past the truncation so the recorded tail bound reflects
/// the discarded weight.
pub fn geometric_series(ratio: f64, truncation: i64) -> Result<CircleFunction, CircleFnError> {
    let mut coeffs = BTreeMap::new();
    let mut n: i64 = 0;
    loop {
        let c = ratio.powi(n.abs() as i32);
        if n > truncation && (n as f64) * c < 1e-18 {
            break;
        }
        if n > 4096 {
            break;
        }
        coeffs.insert(n, Complex64::new(c, 0.0));
        if n > 0 {
            coeffs.insert(-n, Complex64::new(c, 0.0));
        }
        n += 1;
    }
    CircleFunction::abs_conv_series(coeffs, truncation)
}
