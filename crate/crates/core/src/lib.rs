//! Leakage analysis for arithmetic-masked Barrett reduction over `Z_q`.
//!
//! The Barrett internal wire `f_x(m) = ((x + 2^s - m) mod 2^s) mod q` takes
//! every output value 0, 1 or 2 times. This crate counts those preimages
//! exactly (closed form and brute force), measures support gaps and
//! min-entropy, and simulates two-stage pipelines under fresh or shared
//! masking.

pub mod cli;
pub mod gadgets;
pub mod leakage;
pub mod modring;
pub mod pipeline;
pub mod preimage;

pub use gadgets::{BarrettParams, NatEvaluator, WireGadget};
pub use modring::{Modulus, ZqElem};
pub use preimage::{CountPath, MultiplicityProfile, SecretScope};
