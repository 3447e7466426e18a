//! Concrete processes: boundary-modified random walks with closed-form
//! spectra, the exclusion process SEP(γ), its γ-ladder lift, and the
//! single-site duality functions of SEP(γ).

pub mod random_walks;
pub mod sep;
pub mod single_site;
pub mod small;

pub use random_walks::{rw_blocked_absorbed, rw_reflected_absorbed, BlockedAbsorbed, ReflectedAbsorbed};
pub use sep::{ladder_sep_generator, sep_generator, ssep_selfduality, ConfigurationSpace, SpaceKind, SsepParams};
pub use single_site::{factorized_duality, single_site_duality, Regime, SingleSiteParams};
pub use small::{cyclic3, jordan4};
