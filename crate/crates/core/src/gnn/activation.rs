use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    ReLU,
    /// Negative-side slope in `(0, 1)`.
    LeakyReLU(f64),
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Activation::LeakyReLU(s) if !(s > 0.0 && s < 1.0) => Err(format!("leaky slope {s} outside (0,1)")),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn apply<T: Scalar>(&self, z: T) -> T {
        match *self {
            Activation::ReLU => z.max(T::zero()),
            Activation::LeakyReLU(s) => leaky_relu(z, T::lit(s)),
            Activation::Sigmoid => T::one() / (T::one() + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    #[inline]
    pub fn derivative<T: Scalar>(&self, z: T) -> T {
        match *self {
            Activation::ReLU => {
                if z > T::zero() { T::one() } else { T::zero() }
            }
            Activation::LeakyReLU(s) => leaky_relu_grad(z, T::lit(s)),
            Activation::Sigmoid => {
                let s = self.apply(z);
                s * (T::one() - s)
            }
            Activation::Identity => T::one(),
        }
    }
}

#[inline]
pub fn leaky_relu<T: Scalar>(z: T, slope: T) -> T {
    if z > T::zero() { z } else { slope * z }
}

#[inline]
pub fn leaky_relu_grad<T: Scalar>(z: T, slope: T) -> T {
    if z > T::zero() { T::one() } else { slope }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        assert_eq!(Activation::ReLU.apply(-2.0f64), 0.0);
        assert_eq!(Activation::LeakyReLU(0.2).apply(-2.0f64), -0.4);
        assert_eq!(Activation::Sigmoid.apply(0.0f64), 0.5);
        assert_eq!(Activation::Identity.derivative(3.0f64), 1.0);
        assert!(Activation::LeakyReLU(1.5).validate().is_err());
    }

    #[test]
    fn derivatives_match_differences() {
        for act in [Activation::ReLU, Activation::LeakyReLU(0.1), Activation::Sigmoid, Activation::Identity] {
            for z in [-1.3f64, -0.2, 0.4, 2.0] {
                let h = 1e-6;
                let fd = (act.apply(z + h) - act.apply(z - h)) / (2.0 * h);
                assert!((fd - act.derivative(z)).abs() < 1e-6, "{act:?} at {z}");
            }
        }
    }
}
