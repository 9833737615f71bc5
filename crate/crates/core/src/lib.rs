pub mod certify;
pub mod critical;
pub mod dynamics;
pub mod error;
pub mod family;
pub mod maps;
pub mod numerics;
pub mod parabolic;
pub mod params;
pub mod presets;
pub mod render;

pub use error::{Error, Result};
