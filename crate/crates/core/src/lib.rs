pub mod dethom;
pub mod endgame;
pub mod homotopy;
pub mod linalg;
pub mod poly;
pub mod solver;
pub mod systems;
pub mod totaldegree;
pub mod tracker;

pub use num_complex::Complex64 as C64;

/// Dense complex matrix used for Jacobians.
pub type CMatrix = nalgebra::DMatrix<C64>;
