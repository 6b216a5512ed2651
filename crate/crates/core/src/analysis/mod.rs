//! Decay fitting, probability estimators, bootstrap errors and reduced-chi2
//! validation.

pub mod bootstrap;
pub mod estimates;
pub mod fit;
pub mod stats;

pub use bootstrap::{bootstrap, estimate_from_records, BiasEstimate, BootstrapConfig, RecordFit};
pub use estimates::{brb_estimates, ibrb_estimates, BiasPoint, DecayPair};
pub use fit::{fit_decay, DecayFit, DecayModel, FitPoint, KappaHint};
pub use stats::{fraction_within, reduced_chi2, std_dev};
