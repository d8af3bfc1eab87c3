//! Linear coordinate changes that split off the center of mass.
//!
//! A transform is an invertible N x N matrix `t` acting on particle
//! coordinates, `q = t x`, whose first row is the mass-fraction row `m_i / M`
//! (so `q_1` is the center of mass) and whose remaining rows each sum to zero
//! (so `q_2..q_N` are translation-free internal coordinates). Momenta follow
//! contragradiently, `p = t^T p'`, which is why kinetic forms push forward
//! with `t . t^T` congruence and potential forms with the inverse.

use nalgebra::DMatrix;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::frame::{Frame, FrameMap};
use crate::model::HarmonicModel;
use crate::quadratic::{FormKind, QuadraticForm};

/// Condition-number ceiling past which a transform matrix is treated as
/// numerically singular.
const CONDITION_LIMIT: f64 = 1e12;

const ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CoordinateTransform {
    t: DMatrix<f64>,
    t_inv: DMatrix<f64>,
    masses: Vec<f64>,
    id: String,
}

impl CoordinateTransform {
    /// The reference-particle split: internal coordinate j is
    /// `x_j - x_reference`, taken in ascending particle order with the
    /// reference skipped.
    pub fn heavy_center(model: &HarmonicModel, reference: usize) -> Result<Self> {
        let n = model.particle_count();
        if reference >= n {
            return Err(Error::IndexOutOfRange {
                index: reference,
                len: n,
            });
        }
        let total = model.total_mass();
        let mut t = DMatrix::zeros(n, n);
        for j in 0..n {
            t[(0, j)] = model.masses()[j] / total;
        }
        let mut row = 1;
        for j in 0..n {
            if j == reference {
                continue;
            }
            t[(row, reference)] = -1.0;
            t[(row, j)] = 1.0;
            row += 1;
        }
        Self::from_matrix(t, model)
    }

    /// Validate an arbitrary candidate matrix against the model's masses and
    /// build the transform. Checks: the CM row, zero row sums on the internal
    /// rows, and invertibility within a condition-number ceiling.
    pub fn from_matrix(t: DMatrix<f64>, model: &HarmonicModel) -> Result<Self> {
        let n = model.particle_count();
        if t.nrows() != n || t.ncols() != n {
            return Err(Error::precondition(format!(
                "transform must be {n}x{n}, got {}x{}",
                t.nrows(),
                t.ncols()
            )));
        }
        let total = model.total_mass();
        for col in 0..n {
            let want = model.masses()[col] / total;
            if (t[(0, col)] - want).abs() > ROW_TOL * want.abs().max(1.0) {
                return Err(Error::BadCmRow { col });
            }
        }
        for row in 1..n {
            let scale = (0..n).map(|j| t[(row, j)].abs()).fold(0.0f64, f64::max);
            let sum: f64 = (0..n).map(|j| t[(row, j)]).sum();
            if sum.abs() > ROW_TOL * scale.max(1.0) {
                return Err(Error::BadInternalRow { row, sum });
            }
        }
        let cond = crate::linalg::condition(&t);
        if !(cond < CONDITION_LIMIT) {
            return Err(Error::Singular { cond });
        }
        let t_inv = t
            .clone()
            .lu()
            .try_inverse()
            .ok_or(Error::Singular { cond })?;
        let id = fingerprint(&t, model.masses());
        Ok(CoordinateTransform {
            t,
            t_inv,
            masses: model.masses().to_vec(),
            id,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.t
    }

    /// Cached inverse; its first column is all ones, reflecting that adding a
    /// constant to every particle coordinate only moves the center of mass.
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.t_inv
    }

    /// Content fingerprint used in frame labels, so two equal transforms name
    /// the same frames.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn size(&self) -> usize {
        self.t.nrows()
    }

    pub fn internal_dim(&self) -> usize {
        self.t.nrows() - 1
    }

    pub fn internal_frame(&self) -> Frame {
        Frame::Internal {
            transform: self.id.clone(),
        }
    }

    pub fn cm_frame(&self) -> Frame {
        Frame::CenterOfMass {
            transform: self.id.clone(),
        }
    }

    pub fn full_frame(&self) -> Frame {
        Frame::Transformed {
            transform: self.id.clone(),
        }
    }

    fn expect_absolute(&self, form: &QuadraticForm, kind: FormKind) -> Result<()> {
        if form.kind() != kind {
            return Err(Error::KindMismatch {
                expected: kind,
                got: form.kind(),
            });
        }
        if *form.frame() != Frame::Absolute {
            return Err(Error::FrameMismatch {
                left: Frame::Absolute.label(),
                right: form.frame().label(),
            });
        }
        if form.dim() != self.size() {
            return Err(Error::precondition(format!(
                "form dimension {} does not match transform size {}",
                form.dim(),
                self.size()
            )));
        }
        Ok(())
    }

    /// Push an absolute kinetic form into the transformed frame and split it:
    /// returns the 1x1 center-of-mass block and the internal block. For a
    /// valid transform the cross block vanishes identically (to rounding), so
    /// nothing is lost in the split.
    pub fn push_kinetic(&self, form: &QuadraticForm) -> Result<(QuadraticForm, QuadraticForm)> {
        self.expect_absolute(form, FormKind::Kinetic)?;
        let full = &self.t * form.matrix() * self.t.transpose();
        let n = self.size();
        let tcm = DMatrix::from_element(1, 1, full[(0, 0)]);
        let trel = full.view((1, 1), (n - 1, n - 1)).into_owned();
        Ok((
            QuadraticForm::from_symmetric(FormKind::Kinetic, tcm, self.cm_frame()),
            QuadraticForm::from_symmetric(FormKind::Kinetic, trel, self.internal_frame()),
        ))
    }

    /// Push an absolute potential form into the internal frame. The CM row
    /// and column of the transformed matrix must vanish — that is exactly
    /// translation invariance — and are then dropped.
    pub fn push_potential(&self, form: &QuadraticForm) -> Result<QuadraticForm> {
        self.expect_absolute(form, FormKind::Potential)?;
        let full = self.t_inv.transpose() * form.matrix() * &self.t_inv;
        let n = self.size();
        let scale = full.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut coupling = 0.0f64;
        for k in 0..n {
            coupling = coupling.max(full[(0, k)].abs()).max(full[(k, 0)].abs());
        }
        if coupling > 1e-12 * scale.max(1.0) {
            return Err(Error::NotTranslationInvariant(coupling));
        }
        let vrel = full.view((1, 1), (n - 1, n - 1)).into_owned();
        Ok(QuadraticForm::from_symmetric(
            FormKind::Potential,
            vrel,
            self.internal_frame(),
        ))
    }

    /// Map from absolute coordinates to the full transformed set
    /// (q_1, .., q_N); the matrix is the inverse transform, since a
    /// [`FrameMap`] stores source coordinates in terms of target ones.
    pub fn full_map(&self) -> FrameMap {
        FrameMap::new(self.t_inv.clone(), Frame::Absolute, self.full_frame())
    }

    /// Map from absolute coordinates to `(x_anchor, q_2, .., q_N)`. Because
    /// the inverse transform's first column is all ones,
    /// `x_i = x_anchor + sum_j [ (t^-1)_ij - (t^-1)_aj ] q_j`, valid for any
    /// transform and any anchor particle.
    pub fn anchored_map(&self, anchor: usize) -> Result<FrameMap> {
        let n = self.size();
        if anchor >= n {
            return Err(Error::IndexOutOfRange {
                index: anchor,
                len: n,
            });
        }
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            s[(i, 0)] = 1.0;
            for j in 1..n {
                s[(i, j)] = self.t_inv[(i, j)] - self.t_inv[(anchor, j)];
            }
        }
        Ok(FrameMap::new(
            s,
            Frame::Absolute,
            Frame::Anchored {
                transform: self.id.clone(),
                anchor,
            },
        ))
    }

    /// Map between the internal frames of two transforms over the same
    /// masses: `q_self = R q_other`. The CM coordinate drops out because
    /// internal rows annihilate uniform translations.
    pub fn internal_map_to(&self, other: &CoordinateTransform) -> Result<FrameMap> {
        if self.masses != other.masses {
            return Err(Error::precondition(
                "transforms belong to different models".to_string(),
            ));
        }
        let n = self.size();
        let full = &self.t * &other.t_inv;
        let r = full.view((1, 1), (n - 1, n - 1)).into_owned();
        Ok(FrameMap::new(
            r,
            self.internal_frame(),
            other.internal_frame(),
        ))
    }
}

impl Serialize for CoordinateTransform {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect()
        };
        let mut st = s.serialize_struct("CoordinateTransform", 4)?;
        st.serialize_field("id", &self.id)?;
        st.serialize_field("masses", &self.masses)?;
        st.serialize_field("t", &rows(&self.t))?;
        st.serialize_field("t_inv", &rows(&self.t_inv))?;
        st.end()
    }
}

/// Total kinetic energy of the center of mass, written in absolute momenta:
/// `P^2 / 2M` with `P = sum_i p_i`, i.e. a constant matrix `1/(2M)`.
pub fn tcm_absolute(model: &HarmonicModel) -> QuadraticForm {
    let n = model.particle_count();
    let w = 0.5 / model.total_mass();
    QuadraticForm::from_symmetric(
        FormKind::Kinetic,
        DMatrix::from_element(n, n, w),
        Frame::Absolute,
    )
}

fn fingerprint(t: &DMatrix<f64>, masses: &[f64]) -> String {
    // FNV-1a over the raw bits; stability across runs is all that matters
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bits: u64| {
        for byte in bits.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for v in t.iter() {
        eat(v.to_bits());
    }
    for m in masses {
        eat(m.to_bits());
    }
    format!("t{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn family(lambda: f64) -> HarmonicModel {
        HarmonicModel::lambda_family(lambda).unwrap()
    }

    fn paper_matrix() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0 / 3.0,
                1.0 / 3.0,
                1.0 / 3.0,
                -1.0,
                1.0,
                0.0,
                -1.0,
                0.0,
                1.0,
            ],
        )
    }

    #[test]
    fn heavy_center_reference_zero() {
        let t = CoordinateTransform::heavy_center(&family(1.0), 0).unwrap();
        let expect = paper_matrix();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.matrix()[(i, j)], expect[(i, j)]);
            }
        }
    }

    #[test]
    fn heavy_center_reference_one() {
        let t = CoordinateTransform::heavy_center(&family(1.0), 1).unwrap();
        // rows: CM, x0 - x1, x2 - x1
        assert_eq!(t.matrix()[(1, 0)], 1.0);
        assert_eq!(t.matrix()[(1, 1)], -1.0);
        assert_eq!(t.matrix()[(1, 2)], 0.0);
        assert_eq!(t.matrix()[(2, 1)], -1.0);
        assert_eq!(t.matrix()[(2, 2)], 1.0);
    }

    #[test]
    fn heavy_center_two_bodies() {
        let model = HarmonicModel::from_pairs(vec![1.0, 1.0], &[(0, 1, 1.0)]).unwrap();
        let t = CoordinateTransform::heavy_center(&model, 0).unwrap();
        assert_eq!(t.matrix()[(0, 0)], 0.5);
        assert_eq!(t.matrix()[(0, 1)], 0.5);
        assert_eq!(t.matrix()[(1, 0)], -1.0);
        assert_eq!(t.matrix()[(1, 1)], 1.0);
    }

    #[test]
    fn heavy_center_rejects_bad_reference() {
        assert!(matches!(
            CoordinateTransform::heavy_center(&family(1.0), 3),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn inverse_first_column_is_ones() {
        let t = CoordinateTransform::heavy_center(&family(2.0), 0).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(t.inverse()[(i, 0)], 1.0, epsilon = 1e-12);
        }
        let id = t.matrix() * t.inverse();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(id[(i, j)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn from_matrix_accepts_jacobi_style() {
        let t = DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0 / 3.0,
                1.0 / 3.0,
                1.0 / 3.0,
                -1.0,
                1.0,
                0.0,
                -0.5,
                -0.5,
                1.0,
            ],
        );
        assert!(CoordinateTransform::from_matrix(t, &family(1.0)).is_ok());
    }

    #[test]
    fn from_matrix_rejects_nonzero_row_sum() {
        let mut t = paper_matrix();
        t[(1, 0)] = 1.0; // row becomes (1, 1, 0), sum 2
        assert!(matches!(
            CoordinateTransform::from_matrix(t, &family(1.0)),
            Err(Error::BadInternalRow { row: 1, .. })
        ));
    }

    #[test]
    fn from_matrix_rejects_bad_cm_row() {
        let mut t = paper_matrix();
        t[(0, 1)] = 0.5;
        assert!(matches!(
            CoordinateTransform::from_matrix(t, &family(1.0)),
            Err(Error::BadCmRow { col: 1 })
        ));
    }

    #[test]
    fn from_matrix_rejects_singular() {
        let mut t = paper_matrix();
        // second internal row parallel to the first: zero row sum, rank 2
        t[(2, 0)] = -2.0;
        t[(2, 1)] = 2.0;
        t[(2, 2)] = 0.0;
        assert!(matches!(
            CoordinateTransform::from_matrix(t, &family(1.0)),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn equal_transforms_share_an_id() {
        let a = CoordinateTransform::heavy_center(&family(1.0), 0).unwrap();
        let b = CoordinateTransform::from_matrix(paper_matrix(), &family(1.0)).unwrap();
        assert_eq!(a.id(), b.id());
        let c = CoordinateTransform::heavy_center(&family(1.0), 1).unwrap();
        assert_ne!(a.id(), c.id());
    }

    #[test]
    fn push_kinetic_family() {
        let model = family(1.0);
        let t = CoordinateTransform::heavy_center(&model, 0).unwrap();
        let (tcm, trel) = t.push_kinetic(&model.kinetic_form()).unwrap();
        assert_abs_diff_eq!(tcm.entry(0, 0), 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trel.entry(0, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trel.entry(0, 1), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(trel.entry(1, 1), 1.0, epsilon = 1e-15);
        assert_eq!(*trel.frame(), t.internal_frame());
    }

    #[test]
    fn push_kinetic_two_bodies() {
        let model = HarmonicModel::from_pairs(vec![1.0, 1.0], &[(0, 1, 1.0)]).unwrap();
        let t = CoordinateTransform::heavy_center(&model, 0).unwrap();
        let (tcm, trel) = t.push_kinetic(&model.kinetic_form()).unwrap();
        assert_abs_diff_eq!(tcm.entry(0, 0), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(trel.entry(0, 0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn push_potential_family() {
        for (lambda, want) in [
            (1.0, [[1.0, -0.5], [-0.5, 1.0]]),
            (0.0, [[0.5, 0.0], [0.0, 0.5]]),
            (2.7, [[1.85, -1.35], [-1.35, 1.85]]),
        ] {
            let model = family(lambda);
            let t = CoordinateTransform::heavy_center(&model, 0).unwrap();
            let vrel = t.push_potential(&model.potential_form()).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(vrel.entry(i, j), want[i][j], epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn push_potential_rejects_pinned_potential() {
        // x.x confines the center of mass; that is not translation invariant
        let model = family(1.0);
        let t = CoordinateTransform::heavy_center(&model, 0).unwrap();
        let pinned = QuadraticForm::new(
            FormKind::Potential,
            DMatrix::identity(3, 3),
            Frame::Absolute,
        )
        .unwrap();
        assert!(matches!(
            t.push_potential(&pinned),
            Err(Error::NotTranslationInvariant(_))
        ));
    }

    #[test]
    fn push_checks_kind_and_frame() {
        let model = family(1.0);
        let t = CoordinateTransform::heavy_center(&model, 0).unwrap();
        assert!(matches!(
            t.push_kinetic(&model.potential_form()),
            Err(Error::KindMismatch { .. })
        ));
        let internal = QuadraticForm::zero(FormKind::Kinetic, 3, t.internal_frame());
        assert!(matches!(
            t.push_kinetic(&internal),
            Err(Error::FrameMismatch { .. })
        ));
    }

    #[test]
    fn tcm_absolute_entries() {
        let form = tcm_absolute(&family(1.0));
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(form.entry(i, j), 1.0 / 6.0, epsilon = 1e-16);
            }
        }
    }

    #[test]
    fn tcm_pushed_equals_cm_block() {
        let model = family(0.7);
        let t = CoordinateTransform::heavy_center(&model, 0).unwrap();
        let full = t.matrix() * tcm_absolute(&model).matrix() * t.matrix().transpose();
        let (tcm, _) = t.push_kinetic(&model.kinetic_form()).unwrap();
        assert_abs_diff_eq!(full[(0, 0)], tcm.entry(0, 0), epsilon = 1e-15);
        for i in 0..3 {
            for j in 0..3 {
                if i != 0 || j != 0 {
                    assert_abs_diff_eq!(full[(i, j)], 0.0, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn anchored_map_of_family() {
        let t = CoordinateTransform::heavy_center(&family(1.0), 0).unwrap();
        let map = t.anchored_map(0).unwrap();
        let expect = [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(map.matrix()[(i, j)], expect[i][j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn serializes_with_inverse() {
        let t = CoordinateTransform::heavy_center(&family(1.0), 0).unwrap();
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["t"][0][0].as_f64().unwrap(), 1.0 / 3.0);
        assert_abs_diff_eq!(v["t_inv"][2][0].as_f64().unwrap(), 1.0, epsilon = 1e-12);
        assert!(v["id"].as_str().unwrap().starts_with('t'));
    }
}
