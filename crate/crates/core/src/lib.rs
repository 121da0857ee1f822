pub mod dynamics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod metric;
pub mod models;
pub mod phase;
pub mod tolerances;

pub use dynamics::{
    build_entangled_pair, discriminate, evolve, orthogonality_scan, time_grid, Discrimination,
    EntangledPair, EvolutionRecord, OrthogonalityScan, PairMetricLayout,
};
pub use error::{Error, Result};
pub use linalg::{c64, ComplexMatrix, ComplexVector, EigenPair, Eigensystem, C64};
pub use metric::{
    biorthonormalize, compare_metrics, das_metric, spectral_metric, spectral_metric_of,
    validate_metric, BiorthSystem, Comparison, DasConstruction, Generator, MetricMethod,
    MetricOperator, Normalization, ValidityReport,
};
pub use models::{DiracParams, JcParams, ModelInstance, PtParams};
pub use phase::{
    classify, find_exceptional, sweep, Axis, Classification, ExceptionalPoint, Family,
    PhaseDiagram, PhasePoint,
};
pub use tolerances::Tolerances;
