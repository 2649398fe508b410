use nalgebra::Vector3;

use super::OperatorError;

const UNIT_TOL: f64 = 1e-12;

/// A real 3-vector guaranteed unit-normalized at construction.
///
/// Direction arguments (noise axes, projection axes) take this type so the
/// normalization precondition is enforced once, at the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector3 {
    v: Vector3<f64>,
}

impl UnitVector3 {
    /// Accepts a vector already normalized to `|v| = 1` within 1e-12.
    pub fn try_new(v: Vector3<f64>) -> Result<Self, OperatorError> {
        let n = v.norm();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(OperatorError::NotUnitVector { norm: n });
        }
        Ok(UnitVector3 { v })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self, OperatorError> {
        let v = Vector3::new(x, y, z);
        let n = v.norm();
        if !n.is_finite() || n < 1e-14 {
            return Err(OperatorError::NotUnitVector { norm: n });
        }
        Ok(UnitVector3 { v: v / n })
    }

    pub fn x_axis() -> Self {
        UnitVector3 { v: Vector3::x() }
    }

    pub fn y_axis() -> Self {
        UnitVector3 { v: Vector3::y() }
    }

    pub fn z_axis() -> Self {
        UnitVector3 { v: Vector3::z() }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        self.v
    }

    pub fn components(&self) -> [f64; 3] {
        [self.v.x, self.v.y, self.v.z]
    }

    pub fn dot(&self, other: &UnitVector3) -> f64 {
        self.v.dot(&other.v)
    }

    /// Cross product; not normalized (zero for parallel inputs).
    pub fn cross(&self, other: &UnitVector3) -> Vector3<f64> {
        self.v.cross(&other.v)
    }

    pub fn flipped(&self) -> Self {
        UnitVector3 { v: -self.v }
    }
}

impl std::fmt::Display for UnitVector3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({:+.6}, {:+.6}, {:+.6})", self.v.x, self.v.y, self.v.z)
    }
}
