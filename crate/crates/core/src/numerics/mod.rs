//! Small numerical kernels shared by the wave and PDE code.

pub mod quad;
pub mod roots;
