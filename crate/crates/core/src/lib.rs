//! Deep energy minimization for elliptic hemivariational inequalities
//! arising in frictional and compliant contact.

pub mod autodiff;
pub mod network;
pub mod problems;
pub mod sampling;
pub mod loss;
pub mod optimizer;
pub mod checkpoint;
pub mod trainer;
pub mod evaluation;
pub mod cli;
