//! Simulator and verification toolkit for synchronous functional voting
//! processes on expander graphs.
//!
//! A *functional voting* process is driven by a betrayal function `f`: in each
//! synchronous round every vertex looks at the fraction `x` of its neighbours
//! holding the opposing opinion and defects with probability `f(x)`,
//! independently of all other vertices. Pull voting (`f(x) = x`), best-of-k
//! neighbour sampling, k-careful voting (`f(x) = x^k`), local majority and
//! their lazy variants are all instances.
//!
//! The crate is organised around three activities:
//!
//! * **simulation** — seeded, bit-reproducible runs of the voting dynamics on
//!   immutable graphs ([`graph`], [`generate`], [`dynamics`]);
//! * **verification** — machine checks of the deterministic inequalities that
//!   drive the consensus-time analysis, on exactly computed quantities
//!   ([`spectral`], [`checks`], [`kernels`]);
//! * **experiments** — declarative sweeps over graph families with scaling
//!   fits and drift audits ([`experiments`]).

pub mod binom;
pub mod bits;
pub mod checks;
pub mod dynamics;
pub mod experiments;
pub mod generate;
pub mod graph;
pub mod kernels;
pub mod numeric;
pub mod seed;
pub mod spectral;

pub use bits::VertexSet;
pub use dynamics::{Configuration, Phase, Terminal, Trajectory};
pub use graph::{DegreeDistribution, Graph};
pub use kernels::{BetrayalKind, BetrayalSpec, UpdatingProfile};
pub use spectral::SpectralSummary;
