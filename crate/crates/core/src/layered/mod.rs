//! Effective two-half-space problem: plane-wave background field and the
//! layered Green's function by tangential Fourier analysis.

mod background;
mod dispersion;
mod green;
mod interface;
mod spectral;

pub use background::{background_field, BackgroundField};
pub use dispersion::{beta_plus, dispersion_root, csqrt, LowerRoots};
pub use green::{green, GreenEvaluation, LayeredGreen, SommerfeldOptions};
pub use interface::{EffectiveProblem, InterfaceRows};
pub use spectral::{spectral_green, SpectralKernel, SpectralValue};
