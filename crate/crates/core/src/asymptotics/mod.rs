//! Far-field coefficients of Euler solutions, moments, slopes and
//! eigenfunction residuals.

mod coefficients;
mod fit;
mod moments;
mod slope;

pub use coefficients::{
    coefficient_divergence_form, coefficient_from_vorticity, coefficient_lagrangian,
    coefficient_lagrangian_matrix, coefficient_scale, perp_gradient_component, CoefficientMethod,
    CoefficientTrace, TAIL_THRESHOLD,
};
pub use fit::{
    angular_profile, eigenfunction_residual, eigenfunction_residual_samples, shell_fit_expansion,
    support_radius, RadialFitOptions, ShellFit, ShellFitOptions,
};
pub use moments::{moment, q_form_spectral, MomentReport};
pub use slope::{initial_slope_check, richardson_limit, SlopeReport};
