//! Named specs for the standard pictures.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::family::{FamilySpec, McMullenSpec};
use crate::parabolic::{PLambdaSpec, ParabolicSpec, PnSpec};

pub const PRESET_NAMES: [&str; 4] = ["fig1", "fig1-mcmullen", "fig4", "fig5"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "spec", rename_all = "snake_case")]
pub enum Preset {
    Family(FamilySpec),
    Mcmullen(McMullenSpec),
    Parabolic(ParabolicSpec),
}

pub fn fig1() -> FamilySpec {
    FamilySpec::from_magnitudes(1, &[5, 5, 5, 5], &[0.00025, 0.005, 0.1])
}

pub fn fig1_mcmullen() -> McMullenSpec {
    McMullenSpec { k: 3, l: 3, eta: Complex64::new(0.001, 0.0) }
}

pub fn fig4() -> PLambdaSpec {
    PLambdaSpec::new(3, 2, Complex64::new(1e-10, 0.0))
}

/// `P_3` with `s = 1/(25 n^2) = 1/225`.
pub fn fig5() -> PnSpec {
    PnSpec::geometric(3, 1.0 / 225.0)
}

pub fn preset(name: &str) -> Option<Preset> {
    Some(match name {
        "fig1" => Preset::Family(fig1()),
        "fig1-mcmullen" => Preset::Mcmullen(fig1_mcmullen()),
        "fig4" => Preset::Parabolic(ParabolicSpec::Plambda(fig4())),
        "fig5" => Preset::Parabolic(ParabolicSpec::Pn(fig5())),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_names_resolve() {
        for n in PRESET_NAMES {
            assert!(preset(n).is_some(), "{n}");
        }
        assert!(preset("fig2").is_none());
    }

    #[test]
    fn fig1_is_valid() {
        assert!(fig1().validate().is_empty());
        assert_eq!(fig1_mcmullen().to_family().degrees, vec![3, 3]);
    }
}
