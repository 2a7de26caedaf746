//! Circumferential GPR simulation and imaging for layered cylindrical
//! objects: scene generation, FDTD forward modelling, B-scan conditioning,
//! Kirchhoff migration, permittivity autofocus, metrics and file formats.

pub mod autofocus;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod fdtd;
pub mod metrics;
pub mod migrate;
pub mod pipeline;
pub mod preprocess;
pub mod scene;
pub mod signal;
pub mod store;

pub use error::{Error, ErrorKind, Result};
