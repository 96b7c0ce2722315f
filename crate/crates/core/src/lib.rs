//! A deterministic, seedable simulator of a stock-flow consistent
//! macroeconomic agent-based model: heterogeneous firms, interchangeable
//! workers and a single bank, interacting through randomly rationed job and
//! goods markets, credit, bankruptcy, firm entry and margin recentering.
//!
//! The crate is organized around five modules:
//!
//! - [`engine`]: the economy state and the fixed-order iteration protocol;
//! - [`markets`]: exact without-replacement allocation and stochastic rounding;
//! - [`ledger`]: double-entry money flows and the conservation audit;
//! - [`stats`]: observables, distribution fits and cross-section snapshots;
//! - [`scenarios`]: named presets, config files, batch runs and file output.
//!
//! ```no_run
//! use firmsim::{Economy, SimParams};
//!
//! let mut economy = Economy::new(SimParams::default()).unwrap();
//! for _ in 0..100 {
//!     let row = economy.advance().unwrap();
//!     assert!(row.conservation_residual.abs() <= 1e-6);
//! }
//! ```

pub mod engine;
pub mod ledger;
pub mod markets;
pub mod scenarios;
pub mod stats;

pub use engine::{Economy, SimError, SimParams};
