//! Exact certificates for restriction arguments on Brauer characters:
//! cyclotomic arithmetic, exact linear algebra, non-negative feasibility with
//! Farkas certificates, character-table slices and prime graphs.

pub mod cases;
pub mod chartab;
pub mod cyclotomic;
pub mod feasibility;
pub mod linalg;
pub mod linform;
pub mod primegraph;
pub mod rat;
pub mod restriction;
