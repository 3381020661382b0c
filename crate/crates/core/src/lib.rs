pub mod bilocal;
pub mod error;
pub mod hardy3;
pub mod hardy3_sym;
pub mod hardy_n;
pub mod lp;
pub mod magic;
pub mod pipeline;
pub mod qudit;
pub mod sample;
pub mod search;
pub mod tensor;

pub use error::{Error, Result};
pub use nalgebra::DMatrix;
pub use num_complex::Complex64;
