pub mod characteristics;
pub mod expr;
pub mod fields;
pub mod fit;
pub mod iterint;
pub mod paths;
pub mod rng;
pub mod taylor;
