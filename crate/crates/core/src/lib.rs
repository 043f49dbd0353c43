//! Exact computer algebra for computing a General Neron Desingularization of
//! one-dimensional local domains, together with a Greenberg-type strong
//! approximation lifter.
//!
//! The crate is organized as:
//! - [`ring`], [`poly`], [`param`], [`localized`]: exact coefficient and
//!   polynomial arithmetic over K = Frac(Q[a]/aid);
//! - [`ideal`]: standard bases, normal forms, elimination, intersection,
//!   colon ideals and kernels of ring maps;
//! - [`matrix`]: Jacobians, minors, determinants, adjugates and the bordered
//!   matrix H;
//! - [`pipeline`]: the desingularization pipeline;
//! - [`lift`]: strong approximation by Newton iteration on truncations;
//! - [`text`]: the shared polynomial grammar (parser and printers).

pub mod error;
pub mod ring;
pub mod poly;
pub mod param;
pub mod localized;
pub mod ideal;
pub mod matrix;
pub mod pipeline;
pub mod lift;
pub mod text;

pub use error::{GndError, Result};
pub use ideal::{
    buchberger, buchberger_certificate, eliminate, ideal_intersect, ideal_membership,
    ideal_quotient, normal_form, ring_map_kernel, saturation_membership, Ideal, RingMap,
};
pub use localized::{substitute, LocalizedPoly};
pub use matrix::{adjugate, bordered, det, jacobian, minors, PolyMatrix};
pub use param::ParamFieldElement;
pub use poly::{Coeff, Poly};
pub use ring::{Monomial, RingContext, TermOrder, VarKind};
