use std::collections::BTreeMap;

use ndarray::{ArrayBase, Data, Dimension};

/// Equality that compares floats by bit pattern, so NaN cells match.
pub trait BitEq {
    fn bit_eq(&self, other: &Self) -> bool;
}

macro_rules! plain {
    ($($t:ty),*) => {
        $(impl BitEq for $t {
            fn bit_eq(&self, other: &Self) -> bool {
                self == other
            }
        })*
    };
}

plain!(i8, i16, i32, i64, u8, u16, u32, u64, usize, bool, String, char);

impl BitEq for f64 {
    fn bit_eq(&self, other: &Self) -> bool {
        self.to_bits() == other.to_bits()
    }
}

impl BitEq for f32 {
    fn bit_eq(&self, other: &Self) -> bool {
        self.to_bits() == other.to_bits()
    }
}

impl<T: BitEq> BitEq for Option<T> {
    fn bit_eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Some(a), Some(b)) => a.bit_eq(b),
            (None, None) => true,
            _ => false,
        }
    }
}

impl<T: BitEq> BitEq for [T] {
    fn bit_eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.iter().zip(other).all(|(a, b)| a.bit_eq(b))
    }
}

impl<T: BitEq> BitEq for Vec<T> {
    fn bit_eq(&self, other: &Self) -> bool {
        self.as_slice().bit_eq(other.as_slice())
    }
}

impl<T: BitEq, const N: usize> BitEq for [T; N] {
    fn bit_eq(&self, other: &Self) -> bool {
        self.as_slice().bit_eq(other.as_slice())
    }
}

impl<A: BitEq, B: BitEq> BitEq for (A, B) {
    fn bit_eq(&self, other: &Self) -> bool {
        self.0.bit_eq(&other.0) && self.1.bit_eq(&other.1)
    }
}

impl<K: Ord, V: BitEq> BitEq for BTreeMap<K, V> {
    fn bit_eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.iter().zip(other).all(|((ka, va), (kb, vb))| ka == kb && va.bit_eq(vb))
    }
}

impl<S, D, T> BitEq for ArrayBase<S, D>
where
    S: Data<Elem = T>,
    D: Dimension,
    T: BitEq,
{
    fn bit_eq(&self, other: &Self) -> bool {
        self.shape() == other.shape() && self.iter().zip(other.iter()).all(|(a, b)| a.bit_eq(b))
    }
}

/// Implements [`BitEq`] for a struct by comparing the listed fields.
macro_rules! bit_eq_fields {
    ($t:ty { $($field:ident),* $(,)? }) => {
        impl $crate::model::BitEq for $t {
            fn bit_eq(&self, other: &Self) -> bool {
                true $(&& $crate::model::BitEq::bit_eq(&self.$field, &other.$field))*
            }
        }
    };
}
pub(crate) use bit_eq_fields;
