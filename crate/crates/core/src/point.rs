use alloc::vec::Vec;
use core::ops::Index;

use serde::{Deserialize, Serialize};

/// A point of a generator's primal domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

/// The image of a [`Point`] under `∇F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DualPoint(Vec<f64>);

macro_rules! coords_newtype {
    ($ty:ident) => {
        impl $ty {
            pub fn new(coords: Vec<f64>) -> Self {
                Self(coords)
            }

            pub fn coords(&self) -> &[f64] {
                &self.0
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.0
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|c| c.is_finite())
            }
        }

        impl From<Vec<f64>> for $ty {
            fn from(coords: Vec<f64>) -> Self {
                Self(coords)
            }
        }

        impl<const N: usize> From<[f64; N]> for $ty {
            fn from(coords: [f64; N]) -> Self {
                Self(coords.to_vec())
            }
        }

        impl From<&[f64]> for $ty {
            fn from(coords: &[f64]) -> Self {
                Self(coords.to_vec())
            }
        }

        impl Index<usize> for $ty {
            type Output = f64;

            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }
    };
}

coords_newtype!(Point);
coords_newtype!(DualPoint);
