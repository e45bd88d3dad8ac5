//! Receiver outcome laws and photon detection records.
//!
//! A [`Receiver`] turns a set of incoherent emitters and a PSF into a
//! [`Law`]: a position density for direct imaging or a discrete law over mode
//! outcomes for the sorters. Parametric models ([`OutcomeModel`]) pair a
//! receiver with a [`SceneFamily`] so information and estimation code can
//! differentiate and sample them.

mod coherent;
mod crosstalk;
mod family;
mod law;
mod receiver;
mod sampling;

pub use coherent::{coherent_pair_pmf, CoherentPairModel, Normalization};
pub use crosstalk::{apply_crosstalk, Crosstalk};
pub use family::{FixedScene, Localization, PairFamily, PairParam, SceneFamily};
pub use law::{ContinuousLaw, DiscreteLaw, FnModel, Law, Outcome, OutcomeModel, Statistics};
pub use receiver::{direct_pdf, sliver_pmf, spade_pmf, splice_pmf, Receiver, ReceiverKind, ReceiverModel};
pub use sampling::{multinomial, sample_law, sample_record, Budget, DetectionRecord};
