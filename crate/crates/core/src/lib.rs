//! Stokes graphs, spectral scattering diagrams and Voros symbols for linear
//! ODEs with a small parameter.

pub mod algfun;
pub mod exact;
pub mod graph;
pub mod io;
pub mod novikov;
pub mod numeric;
pub mod odecheck;
pub mod pipeline;
pub mod quantization;
pub mod registry;
pub mod scattering;
pub mod svg;
pub mod tracer;
pub mod wkb;
