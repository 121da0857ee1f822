//! Dense complex linear algebra kernels.

pub mod eigen;
pub mod expm;
pub mod jacobi;
pub mod lu;
pub mod matrix;

pub use eigen::{
    defect_indicator, eigendecompose, eigendecompose_with, eigensystem, eigenvalues,
    eigenvalues_qr, EigenPair, Eigensystem, Hessenberg,
};
pub use expm::{mat_exp, mat_exp_with, taylor_exp, ExpPlan};
pub use jacobi::{hermitian_spectrum, hermitian_spectrum_with};
pub use lu::{inverse, inverse_with, solve, Lu};
pub use matrix::{c64, ComplexMatrix, ComplexVector, C64};
