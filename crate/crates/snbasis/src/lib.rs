//! Graph-labeled binary invariants for S_N-invariant tensors, the exactly
//! solvable harmonic N-body model, and a numerical oracle that recovers the
//! model's first-order wave-function coefficients independently of the
//! closed forms.

pub mod graphs;
pub mod harmonic;
pub mod invariants;
pub mod io;
pub mod jet;
pub mod oracle;
pub mod report;

pub use graphs::{
    enumerate_graphs, graph_of_element, isomorphic, CanonicalKey, Edge, Graph, GraphError,
    IndexEntry, IndexTuple, Signature, SlotKind,
};
pub use harmonic::{
    aux_constants, derive_params, first_order_coefficients, omega_tensor, AuxConstants,
    ModelError, ModelParams, WaveFunctionCoefficients,
};
pub use invariants::{
    decompose, nonzero_count, product_decompose, reconstruct, BinaryInvariant, CoefficientTable,
    InvariantError, InvariantTensor, OrbitTable, TupleSpace,
};
pub use oracle::{
    derivative_tensors, extrapolate_coefficients, gram_determinant, log_psi_j, log_psi_j_jet,
    Estimate, ExtrapolatedCoefficients, InternalPoint, Ladder, OracleError,
};
pub use report::{build_report, ReportRow, VerificationReport};
