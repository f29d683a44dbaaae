pub mod bitgrid;
pub mod cli;
pub mod dsm;
pub mod feasibility;
pub mod sigscheme;
pub mod sim;
pub mod tesla;
pub mod vectors;
