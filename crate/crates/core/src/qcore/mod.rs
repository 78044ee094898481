//! Complex dense matrix algebra, states, measurements, and stochastic local
//! maps consumed by every other module.

pub mod eig;
pub mod matrix;
pub mod random;
pub mod state;

pub use eig::{hermitian_eig, min_eigenvalue, HermitianEig};
pub use matrix::{kron_all, outer, tensor_product, ComplexMatrix};
pub use state::{
    apply_slo, apply_slo_with_tolerance, tensor_power, tensor_power_with_cap, BinaryPovm,
    MeasurementAssembly, QuantumState, SloMap, Tolerance, DEFAULT_DIM_CAP,
};
