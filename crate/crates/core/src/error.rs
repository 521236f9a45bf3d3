use core::fmt;

use num_complex::Complex64;

use crate::eigen::FamilyTag;
use crate::model::EnergyRegion;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Energy threshold that an evaluation came too close to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threshold {
    /// `E = 0`, where `k` vanishes.
    Zero,
    /// `E = V₀`, where `Q` vanishes.
    BarrierTop,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    Domain {
        what: &'static str,
        value: f64,
    },
    InvalidConfig {
        field: &'static str,
        reason: &'static str,
    },
    DegenerateEnergy {
        threshold: Threshold,
        energy: Complex64,
    },
    IncompatibleRegion {
        family: FamilyTag,
        region: EnergyRegion,
    },
    /// The resolvent kernel was requested on the spectrum `[0, ∞)`.
    OnSpectrum {
        energy: Complex64,
    },
    QuadratureFailure {
        estimate: f64,
        tolerance: f64,
    },
    ExtrapolationFailure {
        estimate: f64,
        tolerance: f64,
    },
    CutoffTooSmall {
        tail: f64,
        tolerance: f64,
    },
    NonRealEigenfunction {
        imaginary: f64,
    },
    NormalizationError {
        norm: f64,
    },
    NumericalInconsistency {
        what: &'static str,
        value: f64,
    },
    SupportError {
        reason: &'static str,
    },
    CapabilityError {
        what: &'static str,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::InvalidConfig { field, reason } => {
                write!(f, "invalid configuration field `{field}`: {reason}")
            }
            Error::DegenerateEnergy { threshold, energy } => {
                let at = match threshold {
                    Threshold::Zero => "E = 0",
                    Threshold::BarrierTop => "E = V0",
                };
                write!(
                    f,
                    "energy {}{:+}i lies inside the exclusion band around {at}",
                    energy.re, energy.im
                )
            }
            Error::IncompatibleRegion { family, region } => {
                write!(f, "family {family:?} is not defined in region {region:?}")
            }
            Error::OnSpectrum { energy } => {
                write!(f, "energy {}{:+}i lies on the spectrum [0, inf)", energy.re, energy.im)
            }
            Error::QuadratureFailure { estimate, tolerance } => write!(
                f,
                "quadrature did not converge: error estimate {estimate:e} > tolerance {tolerance:e}"
            ),
            Error::ExtrapolationFailure { estimate, tolerance } => write!(
                f,
                "extrapolation did not converge: error estimate {estimate:e} > tolerance {tolerance:e}"
            ),
            Error::CutoffTooSmall { tail, tolerance } => write!(
                f,
                "energy cutoff too small: tail estimate {tail:e} > tolerance {tolerance:e}"
            ),
            Error::NonRealEigenfunction { imaginary } => {
                write!(f, "eigenfunction expected real, imaginary part {imaginary:e}")
            }
            Error::NormalizationError { norm } => {
                write!(f, "function is not normalized: norm {norm}")
            }
            Error::NumericalInconsistency { what, value } => {
                write!(f, "numerical inconsistency in {what}: {value:e}")
            }
            Error::SupportError { reason } => write!(f, "invalid support: {reason}"),
            Error::CapabilityError { what } => write!(f, "operation unavailable: {what}"),
        }
    }
}

impl core::error::Error for Error {}
