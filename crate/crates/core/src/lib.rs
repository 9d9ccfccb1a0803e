pub mod convexfn;
pub mod forms;
pub mod geometry;
pub mod laplace;
pub mod mixedvol;
pub mod momentum;
pub mod newton;
pub mod rational;
pub mod samplers;
