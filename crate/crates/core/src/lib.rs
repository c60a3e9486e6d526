//! Numerical function theory for slice regular functions on the quaternionic
//! unit ball: power-series `*`-calculus, Hardy norms and boundary traces, zero
//! sets, Blaschke products, and factorization.

// `!(x < y)` is used on purpose so that NaN takes the failing branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blaschke;
pub mod error;
pub mod factor;
pub mod hardy;
pub mod io;
pub mod quat;
pub mod roots;
pub mod series;
pub mod slice;
pub mod zeros;

pub use blaschke::{BlaschkeFactor, BlaschkeProduct};
pub use error::{Error, Result};
pub use quat::{ImaginaryUnit, Quaternion, SliceCoordinates};
pub use series::RegularSeries;
pub use zeros::{find_zeros, ZeroRecord, ZeroReport, ZeroSequence};
