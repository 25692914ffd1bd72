//! Frequency-domain certification: Popov functions, FDI checks on circles,
//! endpoint polynomials, certificate construction, minimal stability and
//! dissipation inequalities.

pub mod certify;
pub mod dissipation;
pub mod endpoint;
pub mod popov;
pub mod stability;

pub use certify::{
    certify_sector_noiseless, certify_sector_noisy, certify_strongly_convex,
    certify_strongly_convex_with, rho_star_sector, Certificate, CertificateKind,
    StronglyConvexOptions,
};

pub use endpoint::{f_offbyone, f_sector};
pub use dissipation::{dissipation_search_scalar, dissipation_verify, DissipationCertificate, DissipationKind};
pub use popov::{fdi_sampled, popov_value, FdiReport, PopovSample};
pub use stability::{minimal_stability_witness, schur_test, StabilityWitness};
