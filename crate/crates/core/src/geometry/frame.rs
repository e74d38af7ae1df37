use nalgebra::{Matrix3, Vector3};

use super::error::KernelError;

/// A named placement: origin plus orientation.
///
/// `rotation` holds angles in degrees about the X, Y and Z axes. They are
/// composed as intrinsic Z-Y-X, i.e. `R = Rz(rz) * Ry(ry) * Rx(rx)`, and a
/// local point maps to `origin + R * local`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateSystem {
    name: String,
    origin: Vector3<f64>,
    rotation: [f64; 3],
    matrix: Matrix3<f64>,
}

pub fn euler_zyx_matrix(rotation_deg: [f64; 3]) -> Matrix3<f64> {
    let [rx, ry, rz] = rotation_deg.map(f64::to_radians);
    let (sx, cx) = rx.sin_cos();
    let (sy, cy) = ry.sin_cos();
    let (sz, cz) = rz.sin_cos();
    let rot_x = Matrix3::new(1.0, 0.0, 0.0, 0.0, cx, -sx, 0.0, sx, cx);
    let rot_y = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let rot_z = Matrix3::new(cz, -sz, 0.0, sz, cz, 0.0, 0.0, 0.0, 1.0);
    rot_z * rot_y * rot_x
}

impl CoordinateSystem {
    pub fn new(
        name: impl Into<String>,
        origin: [f64; 3],
        rotation: [f64; 3],
    ) -> Result<Self, KernelError> {
        let name = name.into();
        if origin.iter().chain(rotation.iter()).any(|v| !v.is_finite()) {
            return Err(KernelError::NonFiniteInput(format!(
                "coordinate system {name}"
            )));
        }
        Ok(Self {
            name,
            origin: Vector3::from(origin),
            rotation,
            matrix: euler_zyx_matrix(rotation),
        })
    }

    pub fn identity(name: impl Into<String>) -> Self {
        Self::new(name, [0.0; 3], [0.0; 3]).expect("finite")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn origin(&self) -> Vector3<f64> {
        self.origin
    }

    pub fn rotation_deg(&self) -> [f64; 3] {
        self.rotation
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn to_global(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.origin + self.matrix * local
    }

    pub fn to_local(&self, global: &Vector3<f64>) -> Vector3<f64> {
        self.matrix.transpose() * (global - self.origin)
    }

    /// Applies a rigid motion `x -> rot * x + shift` to the frame itself.
    pub fn transformed(&self, rot: &Matrix3<f64>, shift: &Vector3<f64>) -> Self {
        let matrix = rot * self.matrix;
        Self {
            name: self.name.clone(),
            origin: rot * self.origin + shift,
            rotation: self.rotation,
            matrix,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_frame_maps_points_to_themselves() {
        let cs = CoordinateSystem::new("CS1", [0.0; 3], [0.0; 3]).unwrap();
        let p = Vector3::new(1.0, -2.0, 3.5);
        assert_eq!(cs.to_global(&p), p);
    }

    #[test]
    fn ninety_about_y_sends_local_z_to_global_x() {
        // Ry(90) = [[0,0,1],[0,1,0],[-1,0,0]]; the third column is +X.
        let cs = CoordinateSystem::new("CS2", [0.0, 0.0, 10.0], [0.0, 90.0, 0.0]).unwrap();
        let z = cs.matrix() * Vector3::z();
        assert!((z - Vector3::x()).norm() < 1e-12);
        let p = cs.to_global(&Vector3::new(0.0, 0.0, 1.0));
        assert!((p - Vector3::new(1.0, 0.0, 10.0)).norm() < 1e-12);
    }

    #[test]
    fn composition_order_is_z_then_y_then_x() {
        // Rz(90) * Rx(90) applied to +Y: Rx sends +Y to +Z, Rz leaves +Z alone.
        let m = euler_zyx_matrix([90.0, 0.0, 90.0]);
        assert!((m * Vector3::y() - Vector3::z()).norm() < 1e-12);
        // And +Z: Rx sends +Z to -Y, Rz sends -Y to +X.
        assert!((m * Vector3::z() - Vector3::x()).norm() < 1e-12);
    }

    #[test]
    fn local_global_round_trip() {
        let cs = CoordinateSystem::new("C", [1.0, 2.0, 3.0], [10.0, 20.0, 30.0]).unwrap();
        let p = Vector3::new(0.3, -0.7, 2.0);
        assert!((cs.to_local(&cs.to_global(&p)) - p).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            CoordinateSystem::new("C", [f64::NAN, 0.0, 0.0], [0.0; 3]),
            Err(KernelError::NonFiniteInput(_))
        ));
    }
}
