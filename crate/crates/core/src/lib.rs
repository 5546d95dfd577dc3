//! Discrete Poincaré, Korn and Maxwell constants on tetrahedral meshes with
//! mixed tangential/normal boundary conditions.

pub mod constants;
pub mod fem;
pub mod hodge;
pub mod identities;
pub mod linalg;
pub mod mesh;
pub mod poly;
pub mod quadrature;
