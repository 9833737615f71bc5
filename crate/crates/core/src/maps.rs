//! Common evaluation interface over the three map families.

use num_complex::Complex64;

use crate::error::Result;
use crate::numerics::XComplex;

pub trait RationalMap: Sync {
    fn eval_x(&self, z: Complex64) -> Result<XComplex>;

    /// Plain complex value. Huge values come back infinite, tiny ones zero.
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval_x(z)?.to_c64())
    }
}

impl<T: RationalMap + ?Sized> RationalMap for &T {
    fn eval_x(&self, z: Complex64) -> Result<XComplex> {
        (**self).eval_x(z)
    }
}

/// Any of the supported maps behind one type, for callers that pick the
/// family at run time.
#[derive(Debug, Clone)]
pub enum AnyMap {
    Family(crate::family::FamilyMap),
    McMullen(crate::family::McMullenSpec),
    Parabolic(crate::parabolic::ParabolicMap),
}

impl RationalMap for AnyMap {
    fn eval_x(&self, z: Complex64) -> Result<XComplex> {
        match self {
            AnyMap::Family(m) => m.eval_x(z),
            AnyMap::McMullen(m) => m.eval_x(z),
            AnyMap::Parabolic(m) => m.eval_x(z),
        }
    }
}
