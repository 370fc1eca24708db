pub mod cli;
pub mod convolve;
pub mod fock;
pub mod limit;
pub mod ncpart;
pub mod numeric;
pub mod series;
pub mod trace;
pub mod tree;
