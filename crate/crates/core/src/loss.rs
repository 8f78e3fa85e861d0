//! Robust loss functions.
//!
//! Each loss is a function ζ of a nonnegative residual norm `t`. The KIRWLS
//! estimators only need the weight function φ(t) = ζ′(t)/t; the influence
//! computations also need ζ″ through `q(t) = t ζ″(t) − ζ′(t)`.
//!
//! φ(0) is defined by its right limit: 1 for Quadratic, Huber and Hampel and
//! 6/c² for Tukey.
//!
//! ```
//! use rkcca::loss::RobustLoss;
//!
//! let huber = RobustLoss::huber(1.0).unwrap();
//! assert_eq!(huber.zeta(2.0).unwrap(), 1.5);
//! assert_eq!(huber.phi(4.0).unwrap(), 0.25);
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A robust loss family with validated tuning constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum RobustLoss {
    Quadratic,
    Huber { c: f64 },
    Hampel { c1: f64, c2: f64, c3: f64 },
    Tukey { c: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("{name} must be a positive finite number, got {v}")))
    }
}

impl RobustLoss {
    pub fn huber(c: f64) -> Result<Self> {
        positive("huber c", c)?;
        Ok(Self::Huber { c })
    }

    pub fn hampel(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        positive("hampel c1", c1)?;
        positive("hampel c2", c2)?;
        positive("hampel c3", c3)?;
        if !(c1 < c2 && c2 < c3) {
            return Err(Error::Input(format!(
                "hampel constants must satisfy c1 < c2 < c3, got {c1}, {c2}, {c3}"
            )));
        }
        Ok(Self::Hampel { c1, c2, c3 })
    }

    pub fn tukey(c: f64) -> Result<Self> {
        positive("tukey c", c)?;
        Ok(Self::Tukey { c })
    }

    /// Re-check the invariants of a value built directly from the enum.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Quadratic => Ok(()),
            Self::Huber { c } => Self::huber(c).map(|_| ()),
            Self::Hampel { c1, c2, c3 } => Self::hampel(c1, c2, c3).map(|_| ()),
            Self::Tukey { c } => Self::tukey(c).map(|_| ()),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, Self::Quadratic)
    }

    fn check(t: f64) -> Result<()> {
        if t.is_nan() || t < 0.0 {
            Err(Error::Domain(format!("loss argument must be nonnegative, got {t}")))
        } else {
            Ok(())
        }
    }

    /// ζ(t).
    pub fn zeta(&self, t: f64) -> Result<f64> {
        Self::check(t)?;
        Ok(self.zeta_raw(t))
    }

    /// ζ′(t).
    pub fn zeta_prime(&self, t: f64) -> Result<f64> {
        Self::check(t)?;
        Ok(self.zeta_prime_raw(t))
    }

    /// ζ″(t), taking the right derivative at the knots.
    pub fn zeta_second(&self, t: f64) -> Result<f64> {
        Self::check(t)?;
        Ok(match *self {
            Self::Quadratic => 1.0,
            Self::Huber { c } => {
                if t < c {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Hampel { c1, c2, c3 } => {
                if t < c1 {
                    1.0
                } else if t < c2 {
                    0.0
                } else if t < c3 {
                    -c1 / (c3 - c2)
                } else {
                    0.0
                }
            }
            Self::Tukey { c } => {
                if t < c {
                    let u2 = (t / c).powi(2);
                    6.0 * (1.0 - u2) * (1.0 - 5.0 * u2) / (c * c)
                } else {
                    0.0
                }
            }
        })
    }

    /// φ(t) = ζ′(t)/t, with φ(0) the right limit.
    pub fn phi(&self, t: f64) -> Result<f64> {
        Self::check(t)?;
        Ok(self.phi_raw(t))
    }

    /// q(t) = t ζ″(t) − ζ′(t), the term entering the robust CCO influence system.
    pub fn q(&self, t: f64) -> Result<f64> {
        Self::check(t)?;
        Ok(match *self {
            Self::Quadratic => 0.0,
            Self::Huber { c } => {
                if t <= c {
                    0.0
                } else {
                    -c
                }
            }
            Self::Hampel { c1, c2, c3 } => {
                if t <= c1 {
                    0.0
                } else if t < c2 {
                    -c1
                } else if t < c3 {
                    -c1 * c3 / (c3 - c2)
                } else {
                    0.0
                }
            }
            Self::Tukey { c } => {
                if t < c {
                    let u2 = (t / c).powi(2);
                    -24.0 * t * u2 * (1.0 - u2) / (c * c)
                } else {
                    0.0
                }
            }
        })
    }

    /// The quadratic majorizer of ζ anchored at `anchor`:
    /// `p(t; c) = ζ(c) − c ζ′(c)/2 + φ(c) t²/2`.
    ///
    /// It touches ζ at `t = c` and lies above it elsewhere whenever φ is
    /// non-increasing.
    pub fn surrogate(&self, t: f64, anchor: f64) -> Result<f64> {
        Self::check(t)?;
        Self::check(anchor)?;
        let c = anchor;
        Ok(self.zeta_raw(c) - 0.5 * c * self.zeta_prime_raw(c) + 0.5 * self.phi_raw(c) * t * t)
    }

    pub(crate) fn zeta_raw(&self, t: f64) -> f64 {
        match *self {
            Self::Quadratic => 0.5 * t * t,
            Self::Huber { c } => {
                if t <= c {
                    0.5 * t * t
                } else {
                    c * t - 0.5 * c * c
                }
            }
            Self::Hampel { c1, c2, c3 } => {
                if t <= c1 {
                    0.5 * t * t
                } else if t < c2 {
                    c1 * t - 0.5 * c1 * c1
                } else if t < c3 {
                    -c1 / (2.0 * (c3 - c2)) * (t - c3).powi(2) + 0.5 * c1 * (c2 + c3 - c1)
                } else {
                    0.5 * c1 * (c2 + c3 - c1)
                }
            }
            Self::Tukey { c } => {
                if t <= c {
                    1.0 - (1.0 - (t / c).powi(2)).powi(3)
                } else {
                    1.0
                }
            }
        }
    }

    pub(crate) fn zeta_prime_raw(&self, t: f64) -> f64 {
        match *self {
            Self::Quadratic => t,
            Self::Huber { c } => t.min(c),
            Self::Hampel { c1, c2, c3 } => {
                if t <= c1 {
                    t
                } else if t < c2 {
                    c1
                } else if t < c3 {
                    c1 * (c3 - t) / (c3 - c2)
                } else {
                    0.0
                }
            }
            Self::Tukey { c } => {
                if t <= c {
                    6.0 * t * (1.0 - (t / c).powi(2)).powi(2) / (c * c)
                } else {
                    0.0
                }
            }
        }
    }

    pub(crate) fn phi_raw(&self, t: f64) -> f64 {
        match *self {
            Self::Quadratic => 1.0,
            Self::Huber { c } => {
                if t <= c {
                    1.0
                } else {
                    c / t
                }
            }
            Self::Hampel { c1, c2, c3 } => {
                if t <= c1 {
                    1.0
                } else if t < c2 {
                    c1 / t
                } else if t < c3 {
                    c1 * (c3 - t) / ((c3 - c2) * t)
                } else {
                    0.0
                }
            }
            Self::Tukey { c } => {
                if t <= c {
                    6.0 * (1.0 - (t / c).powi(2)).powi(2) / (c * c)
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for RobustLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic => write!(f, "quadratic"),
            Self::Huber { c } => write!(f, "huber:{c}"),
            Self::Hampel { c1, c2, c3 } => write!(f, "hampel:{c1},{c2},{c3}"),
            Self::Tukey { c } => write!(f, "tukey:{c}"),
        }
    }
}

/// A loss whose tuning constant may depend on the data.
///
/// `Huber(Tuning::MedianResidual)` picks c as the median of the residuals at
/// the uniform-weight start of a KIRWLS run and keeps it fixed for that run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum LossSpec {
    Quadratic,
    Huber { c: Tuning },
    Hampel { c1: f64, c2: f64, c3: f64 },
    Tukey { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tuning {
    Fixed(f64),
    MedianResidual,
}

impl LossSpec {
    pub fn huber_median() -> Self {
        Self::Huber { c: Tuning::MedianResidual }
    }

    /// Resolve data-dependent constants from the initial residuals.
    ///
    /// A zero median falls back to the largest residual, then to 1.
    pub fn resolve(&self, initial_residuals: &[f64]) -> Result<RobustLoss> {
        match *self {
            Self::Quadratic => Ok(RobustLoss::Quadratic),
            Self::Huber { c: Tuning::Fixed(c) } => RobustLoss::huber(c),
            Self::Huber { c: Tuning::MedianResidual } => {
                let med = crate::linalg::median(initial_residuals).unwrap_or(0.0);
                let max = initial_residuals.iter().cloned().fold(0.0, f64::max);
                let c = if med > 0.0 {
                    med
                } else if max > 0.0 {
                    max
                } else {
                    1.0
                };
                RobustLoss::huber(c)
            }
            Self::Hampel { c1, c2, c3 } => RobustLoss::hampel(c1, c2, c3),
            Self::Tukey { c } => RobustLoss::tukey(c),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, Self::Quadratic)
    }
}

impl From<RobustLoss> for LossSpec {
    fn from(l: RobustLoss) -> Self {
        match l {
            RobustLoss::Quadratic => Self::Quadratic,
            RobustLoss::Huber { c } => Self::Huber { c: Tuning::Fixed(c) },
            RobustLoss::Hampel { c1, c2, c3 } => Self::Hampel { c1, c2, c3 },
            RobustLoss::Tukey { c } => Self::Tukey { c },
        }
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic => write!(f, "quadratic"),
            Self::Huber { c: Tuning::MedianResidual } => write!(f, "huber"),
            Self::Huber { c: Tuning::Fixed(c) } => write!(f, "huber:{c}"),
            Self::Hampel { c1, c2, c3 } => write!(f, "hampel:{c1},{c2},{c3}"),
            Self::Tukey { c } => write!(f, "tukey:{c}"),
        }
    }
}

/// Parses `quadratic`, `huber`, `huber:median`, `huber:C`, `hampel:C1,C2,C3`, `tukey:C`.
impl FromStr for LossSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |a: &str| -> Result<f64> {
            a.trim()
                .parse::<f64>()
                .map_err(|_| Error::Input(format!("bad number `{a}` in loss `{s}`")))
        };
        let spec = match (name.to_ascii_lowercase().as_str(), arg) {
            ("quadratic", None) => Self::Quadratic,
            ("huber", None) | ("huber", Some("median")) => Self::huber_median(),
            ("huber", Some(a)) => Self::Huber { c: Tuning::Fixed(num(a)?) },
            ("hampel", Some(a)) => {
                let v = a.split(',').map(num).collect::<Result<Vec<_>>>()?;
                if v.len() != 3 {
                    return Err(Error::Input("hampel needs three constants".into()));
                }
                Self::Hampel { c1: v[0], c2: v[1], c3: v[2] }
            }
            ("tukey", Some(a)) => Self::Tukey { c: num(a)? },
            ("tukey", None) => Self::Tukey { c: 4.685 },
            _ => return Err(Error::Input(format!("unknown loss `{s}`"))),
        };
        if let Self::Huber { c: Tuning::Fixed(c) } = spec {
            RobustLoss::huber(c)?;
        } else if !matches!(spec, Self::Huber { .. }) {
            spec.resolve(&[])?;
        }
        Ok(spec)
    }
}
