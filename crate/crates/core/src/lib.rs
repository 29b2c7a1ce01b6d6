//! Spatial correlations of photon pairs from spontaneous parametric
//! down-conversion pumped through a multi-slit mask.
//!
//! All lengths are in metres and angles in radians unless a name says
//! otherwise; [`config::RunConfig`] holds laboratory units.

pub mod biphoton;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod fresnel;
pub mod imaging;
pub mod io;
pub mod phasematch;
pub mod pump;
pub mod quadrature;
pub mod stats;
pub mod sweeps;

pub use biphoton::{
    coincidence_map, singles_profile, CoincidenceMap, Detector, DetectorScan, Engine, Integration,
    IntegrationMode, MapMetadata,
};
pub use config::{RunConfig, Simulation};
pub use dispersion::{Polarization, SellmeierRow, SellmeierSet};
pub use error::{Error, Result};
pub use imaging::{field_through_crystal, transfer_field, transfer_kernel, LensSpec};
pub use phasematch::{
    delta_k, find_collinear_angle, sinc_weight, CrystalSpec, Direction, OpticAxisPlane,
    PhaseMatcher, PhaseMismatch, Process, SincConvention,
};
pub use pump::{
    analytic_profile, load_measured_profile, Axis, PumpSource, PumpSpec, SampledField,
    SigmaConvention, SlitSpec,
};
pub use stats::{bootstrap_sigma, pearson, Centering, CorrelationResult};
pub use sweeps::{run_sweep, SweepParam, SweepResult, SweepRow, SweepSpec, SweepValue};
