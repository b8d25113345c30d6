//! Reproducible evaluation of web page simplification transforms.
//!
//! Pages are frozen into an [`archive`], rewritten by [`transform`]s, loaded in a
//! deterministic network and CPU model ([`loadsim`]), compared against the
//! original ([`similarity`]) and aggregated into distributions ([`stats`],
//! [`report`]). [`pipeline`] ties the phases together.

pub mod archive;
pub mod fixtures;
pub mod js;
pub mod loadsim;
pub mod pagemodel;
pub mod pipeline;
pub mod replay;
pub mod report;
pub mod similarity;
pub mod stats;
pub mod transform;
