pub mod autodiff;
pub mod cli;
pub mod geometry;
pub mod graph;
pub mod model;
pub mod train;
