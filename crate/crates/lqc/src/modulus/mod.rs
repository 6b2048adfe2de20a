//! Conformal moduli and capacities: the Grötzsch modulus and Teichmüller
//! capacity special functions via the arithmetic–geometric mean, moduli of
//! boundary quadrilaterals `{r <= |z - xi| <= R} ∩ Δ` by a mixed-boundary
//! Laplace solve in log-polar coordinates, and grid Laplace capacity of
//! plane condensers with slit plates used as the independent oracle for the
//! special-function identities.

mod quad;
mod ring;
mod special;

pub use quad::{
    lemma_qs_lower_bound, modulus_at_resolution, quad_modulus, quad_modulus_conjugate,
    quad_modulus_mapped, quad_modulus_of_dilatation, CurveFamily, QuadrilateralSpec,
};
pub use ring::{
    calibrated_capacity_table, ring_capacity_check, slit_condenser_capacity,
    teichmuller_capacity_oracle, RingCapacity,
};
pub use special::{
    agm, elliptic_k, grotzsch_mu, tau_capacity, tau_inverse, CapacitySource, CapacityTable,
};
