#![no_std]
extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod adic;
pub mod billiard;
pub mod hausdorff;
pub mod homology;
pub mod iet;
pub mod interval;
pub mod invariant;
pub mod linalg;
pub mod quad;
pub mod render;
pub mod rauzy;
pub mod section;
pub mod surface;
