//! Thruster allocation for the eight-thruster layout.
//!
//! Thrusters 1,2 push along body x, 3,4 along body y and 5..8 along body z.
//! The forward map is `tau = B T` with `B` the 6×8 allocation matrix; the
//! inverse is the minimum-norm solution `T = Bᵀ (B Bᵀ)⁻¹ tau`, scaled down
//! uniformly when any thruster would exceed its limit.

use nalgebra::{Matrix6, SMatrix, SVector, Vector6};
use thiserror::Error;

use crate::frames::{GeneralizedForce, ThrustVector};

pub type BMatrix = SMatrix<f64, 6, 8>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocationError {
    #[error("allocation matrix is rank deficient: lever arm l{index} = {value} must be > 0")]
    RankDeficient { index: usize, value: f64 },
    #[error("B Bᵀ is not positive definite")]
    Singular,
    #[error("thrust limit must be > 0, got {0}")]
    BadLimit(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationMatrix {
    b: BMatrix,
    /// Cholesky-ready `B Bᵀ`, fixed for the life of the matrix.
    gram_inv: Matrix6<f64>,
}

impl AllocationMatrix {
    /// Builds `B` from the lever arms `[l1, l2, l3, l4]`.
    pub fn new(lever_arms: [f64; 4]) -> Result<Self, AllocationError> {
        for (i, &l) in lever_arms.iter().enumerate() {
            if !(l > 0.0 && l.is_finite()) {
                return Err(AllocationError::RankDeficient {
                    index: i + 1,
                    value: l,
                });
            }
        }
        let [l1, l2, l3, l4] = lever_arms;
        #[rustfmt::skip]
        let b = BMatrix::from_row_slice(&[
            1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0,
            0.0, 0.0, 0.0, 0.0, l1,  l1,  -l1, -l1,
            0.0, 0.0, 0.0, 0.0, -l2, l2,  -l2, l2,
            -l3, l3,  l4,  -l4, 0.0, 0.0, 0.0, 0.0,
        ]);
        let gram = b * b.transpose();
        let gram_inv = gram
            .cholesky()
            .ok_or(AllocationError::Singular)?
            .inverse();
        Ok(Self { b, gram_inv })
    }

    pub fn matrix(&self) -> &BMatrix {
        &self.b
    }

    /// `tau = B T`.
    pub fn forward(&self, t: &ThrustVector) -> GeneralizedForce {
        let tv = SVector::<f64, 8>::from_column_slice(&t.0);
        GeneralizedForce::from_vector(&(self.b * tv))
    }

    /// Minimum-norm thrusts for `tau` without any saturation.
    pub fn unconstrained(&self, tau: &GeneralizedForce) -> ThrustVector {
        let x: Vector6<f64> = self.gram_inv * tau.as_vector();
        let t = self.b.transpose() * x;
        let mut out = [0.0; 8];
        out.copy_from_slice(t.as_slice());
        ThrustVector(out)
    }

    /// Minimum-norm allocation with uniform wrench scaling.
    ///
    /// Returns the thrusts and the scale `s ∈ (0, 1]` such that
    /// `forward(T) == s·tau` and every `|T_i| <= t_max`.
    pub fn allocate(&self, tau: &GeneralizedForce, t_max: f64) -> Result<(ThrustVector, f64), AllocationError> {
        if !(t_max > 0.0) {
            return Err(AllocationError::BadLimit(t_max));
        }
        let mut t = self.unconstrained(tau);
        let peak = t.max_abs();
        let scale = if peak > t_max { t_max / peak } else { 1.0 };
        if scale < 1.0 {
            for ti in t.0.iter_mut() {
                *ti = (*ti * scale).clamp(-t_max, t_max);
            }
        }
        Ok((t, scale))
    }
}
