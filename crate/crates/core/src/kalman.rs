//! Constant-velocity Kalman filter over boxes.
//!
//! State: `(cx, cy, a, h, vcx, vcy, va, vh)`, where `a = w / h`. The box
//! `(cx, cy, a, h)` is observed directly. Process and measurement noise are
//! proportional to the current height: position std `h / 20`, velocity std
//! `h / 160`, aspect-ratio std fixed (`1e-2` position, `1e-5` velocity,
//! `1e-1` measurement). Initial velocity uncertainty is ten times the
//! per-step velocity std.

use nalgebra::{SMatrix, SVector};

use crate::bbox::BBox;
use crate::error::{Error, Result};

pub type StateVector = SVector<f64, 8>;
pub type StateCovariance = SMatrix<f64, 8, 8>;
type Measurement = SVector<f64, 4>;

const STD_WEIGHT_POSITION: f64 = 1.0 / 20.0;
const STD_WEIGHT_VELOCITY: f64 = 1.0 / 160.0;
/// Predicted heights are kept at or above this.
const MIN_HEIGHT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

fn measure(b: &BBox) -> Result<Measurement> {
    if !b.is_valid() {
        return Err(Error::DegenerateBox);
    }
    let (cx, cy) = b.center();
    Ok(Measurement::new(cx, cy, b.w / b.h, b.h))
}

fn motion_matrix() -> StateCovariance {
    let mut f = StateCovariance::identity();
    for i in 0..4 {
        f[(i, i + 4)] = 1.0;
    }
    f
}

fn observation_matrix() -> SMatrix<f64, 4, 8> {
    SMatrix::<f64, 4, 8>::identity()
}

fn symmetrize(p: &StateCovariance) -> StateCovariance {
    (p + p.transpose()) * 0.5
}

impl KalmanState {
    /// Track state from a first observation, with zero velocity.
    pub fn initiate(b: &BBox) -> Result<Self> {
        let z = measure(b)?;
        let mut mean = StateVector::zeros();
        mean.fixed_rows_mut::<4>(0).copy_from(&z);
        let h = z[3];
        let std = [
            2.0 * STD_WEIGHT_POSITION * h,
            2.0 * STD_WEIGHT_POSITION * h,
            1e-2,
            2.0 * STD_WEIGHT_POSITION * h,
            10.0 * STD_WEIGHT_VELOCITY * h,
            10.0 * STD_WEIGHT_VELOCITY * h,
            1e-5,
            10.0 * STD_WEIGHT_VELOCITY * h,
        ];
        let covariance =
            StateCovariance::from_diagonal(&StateVector::from_iterator(std.iter().map(|s| s * s)));
        Ok(Self { mean, covariance })
    }

    pub fn height(&self) -> f64 {
        self.mean[3]
    }

    /// One constant-velocity step.
    pub fn predict(&self) -> Result<Self> {
        let h = self.height();
        let std = [
            STD_WEIGHT_POSITION * h,
            STD_WEIGHT_POSITION * h,
            1e-2,
            STD_WEIGHT_POSITION * h,
            STD_WEIGHT_VELOCITY * h,
            STD_WEIGHT_VELOCITY * h,
            1e-5,
            STD_WEIGHT_VELOCITY * h,
        ];
        let q =
            StateCovariance::from_diagonal(&StateVector::from_iterator(std.iter().map(|s| s * s)));
        let f = motion_matrix();
        let mut mean = f * self.mean;
        if mean[3] < MIN_HEIGHT {
            mean[3] = MIN_HEIGHT;
            mean[7] = 0.0;
        }
        let covariance = symmetrize(&(f * self.covariance * f.transpose() + q));
        Self::checked(mean, covariance)
    }

    /// Linear-Gaussian correction with an observed box (Joseph form).
    pub fn update(&self, b: &BBox) -> Result<Self> {
        let z = measure(b)?;
        let h = self.height();
        let r_std = [
            STD_WEIGHT_POSITION * h,
            STD_WEIGHT_POSITION * h,
            1e-1,
            STD_WEIGHT_POSITION * h,
        ];
        let r = SMatrix::<f64, 4, 4>::from_diagonal(&Measurement::from_iterator(
            r_std.iter().map(|s| s * s),
        ));
        let hm = observation_matrix();
        let s = hm * self.covariance * hm.transpose() + r;
        let chol = s.cholesky().ok_or(Error::NonFiniteState)?;
        // K = P H^T S^{-1}, solved as S K^T = H P.
        let gain: SMatrix<f64, 8, 4> = chol.solve(&(hm * self.covariance)).transpose();
        let innovation = z - hm * self.mean;
        let mean = self.mean + gain * innovation;
        let i_kh = StateCovariance::identity() - gain * hm;
        let covariance =
            symmetrize(&(i_kh * self.covariance * i_kh.transpose() + gain * r * gain.transpose()));
        Self::checked(mean, covariance)
    }

    fn checked(mean: StateVector, covariance: StateCovariance) -> Result<Self> {
        if mean.iter().chain(covariance.iter()).all(|v| v.is_finite()) {
            Ok(Self { mean, covariance })
        } else {
            Err(Error::NonFiniteState)
        }
    }

    /// Current box estimate `(x, y, w, h)`.
    pub fn to_bbox(&self) -> BBox {
        let (cx, cy, a, h) = (self.mean[0], self.mean[1], self.mean[2], self.mean[3]);
        let w = a * h;
        BBox::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }
}
