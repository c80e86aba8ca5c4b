use core::fmt;

use crate::math::Vec2;

/// Errors raised by the detection and verification routines.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Evaluation point lies outside the data domain (or too close to its edge for a stencil).
    OutOfDomain {
        point: Vec2,
        time: f64,
    },
    /// Malformed grid or field construction.
    InvalidGrid(&'static str),
    /// Caller-supplied parameter violates a precondition.
    InvalidArgument(&'static str),
    UnknownFlow,
    /// Repeated eigenvalue: eigenvectors are undefined.
    Degenerate {
        point: Option<Vec2>,
    },
    ZeroTangent,
    /// A curve sample coincides with a strain singularity.
    DegeneratePoint {
        point: Vec2,
    },
    /// `μ` lies outside `[s1, s2]` at the evaluation point.
    OutsideUmu {
        point: Vec2,
        mu: f64,
    },
    /// The direction field cannot be evaluated at the seed of an integration.
    ImmediateDegeneracy {
        point: Vec2,
    },
    AmbiguousWinding,
    /// Integration stopped before returning to the Poincaré section.
    NoReturn,
    SectionBlocked {
        blocker: Vec2,
    },
    /// Two members of a rotated-field family cross; signals a numerical failure.
    IntersectionAnomaly {
        mu_a: f64,
        mu_b: f64,
    },
    DegenerateCore {
        point: Vec2,
    },
    NotTrisector,
    LinearizationDegenerate,
    NoConnection,
    /// A particle left the domain during advection.
    LeftDomain {
        point: Vec2,
        time: f64,
    },
    SingularGradient,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OutOfDomain { point, time } => {
                write!(f, "point ({}, {}) at t = {} is outside the field domain", point.x, point.y, time)
            }
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::UnknownFlow => f.write_str("unknown analytic flow"),
            Error::Degenerate { point: Some(p) } => {
                write!(f, "repeated strain eigenvalue at ({}, {})", p.x, p.y)
            }
            Error::Degenerate { point: None } => f.write_str("repeated strain eigenvalue"),
            Error::ZeroTangent => f.write_str("tangent vector is zero"),
            Error::DegeneratePoint { point } => {
                write!(f, "curve passes through a strain singularity at ({}, {})", point.x, point.y)
            }
            Error::OutsideUmu { point, mu } => {
                write!(f, "mu = {mu} outside [s1, s2] at ({}, {})", point.x, point.y)
            }
            Error::ImmediateDegeneracy { point } => {
                write!(f, "direction field undefined at seed ({}, {})", point.x, point.y)
            }
            Error::AmbiguousWinding => f.write_str("winding number is ambiguous at this sampling"),
            Error::NoReturn => f.write_str("trajectory did not return to the section"),
            Error::SectionBlocked { blocker } => {
                write!(f, "singularity at ({}, {}) lies on the section", blocker.x, blocker.y)
            }
            Error::IntersectionAnomaly { mu_a, mu_b } => {
                write!(f, "cycles at mu = {mu_a} and mu = {mu_b} intersect")
            }
            Error::DegenerateCore { point } => {
                write!(f, "saddle core ({}, {}) lies in a repeated-eigenvalue zone", point.x, point.y)
            }
            Error::NotTrisector => f.write_str("singularity is not a trisector"),
            Error::LinearizationDegenerate => f.write_str("singularity linearization is degenerate"),
            Error::NoConnection => f.write_str("no heteroclinic connection found"),
            Error::LeftDomain { point, time } => {
                write!(f, "trajectory left the domain at ({}, {}), t = {}", point.x, point.y, time)
            }
            Error::SingularGradient => f.write_str("flow-map gradient is singular"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
