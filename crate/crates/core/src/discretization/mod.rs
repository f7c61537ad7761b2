//! 1D slab multigroup diffusion and discrete-ordinates transport.

mod diffusion;
mod mesh;
mod quadrature;
mod transport;
mod xs;

pub use diffusion::{
    assemble_closed_diffusion_operators, assemble_diffusion_operators, assemble_diffusion_preconditioner,
    face_coefficient, robin_coefficient, vacuum_coefficient, DiffusionOperators,
};
pub use mesh::{Boundary, SlabMesh};
pub use quadrature::AngularQuadrature;
pub use transport::{
    assemble_transport_operator, cell_current, face_currents, scalar_flux, tau, transport_source,
    TransportEigenProblem, TransportFission, TransportLoss, TransportOperator,
};
pub use xs::{parse_xs_library, CrossSections};

pub(crate) use transport::{face_psi, group_count};
