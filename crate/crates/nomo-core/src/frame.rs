//! Coordinate-frame bookkeeping.
//!
//! Every quadratic form, state and density carries a [`Frame`] tag, and the
//! expectation-value and re-expression routines refuse to mix tags. This is
//! cheap insurance against the classic bug of contracting an absolute-frame
//! exponent with an internal-frame Hamiltonian.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};

/// Identifies the coordinate system an object is expressed in. The string
/// label (see [`Frame::label`]) is what external output uses.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Frame {
    /// Particle coordinates x_1..x_N.
    Absolute,
    /// The full transformed set (q_1, q_2, .., q_N) of a transform, with q_1
    /// the center of mass.
    Transformed { transform: String },
    /// The center-of-mass coordinate q_1 alone.
    CenterOfMass { transform: String },
    /// Internal coordinates q_2..q_N of a transform (the CM row dropped).
    Internal { transform: String },
    /// Internal coordinates prefixed by one absolute coordinate:
    /// (x_anchor, q_2, .., q_N). This is the frame marginals over a single
    /// particle are taken in.
    Anchored { transform: String, anchor: usize },
    /// Coordinates left over after marginalizing an arbitrary frame; `kept`
    /// holds the surviving indices of the parent frame.
    Subset { base: String, kept: Vec<usize> },
}

impl Frame {
    pub fn label(&self) -> String {
        match self {
            Frame::Absolute => "absolute".to_string(),
            Frame::Transformed { transform } => format!("full:{transform}"),
            Frame::CenterOfMass { transform } => format!("cm:{transform}"),
            Frame::Internal { transform } => format!("internal:{transform}"),
            Frame::Anchored { transform, anchor } => format!("anchored:{anchor}:{transform}"),
            Frame::Subset { base, kept } => {
                let idx: Vec<String> = kept.iter().map(|k| k.to_string()).collect();
                format!("subset:{}:{}", idx.join(","), base)
            }
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for Frame {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

/// An invertible linear change of variables between two frames:
/// `x_source = S * y_target`.
///
/// Maps are only handed out by [`crate::transform::CoordinateTransform`], so
/// the matrix is invertible by construction.
#[derive(Debug, Clone)]
pub struct FrameMap {
    s: DMatrix<f64>,
    source: Frame,
    target: Frame,
}

impl FrameMap {
    pub(crate) fn new(s: DMatrix<f64>, source: Frame, target: Frame) -> Self {
        debug_assert_eq!(s.nrows(), s.ncols());
        FrameMap { s, source, target }
    }

    /// Matrix expressing source coordinates in terms of target coordinates.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn source(&self) -> &Frame {
        &self.source
    }

    pub fn target(&self) -> &Frame {
        &self.target
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }
}
