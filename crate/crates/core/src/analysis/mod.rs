//! Family specs, the equivalence battery, corpus sweeps and report tables.

pub mod battery;
pub mod corpus;
pub mod dilation;
pub mod spec;
pub mod tables;

pub use battery::{run_equivalence_battery, AnalysisReport, Verdict, Witness};
pub use corpus::{default_corpus, run_corpus, CorpusRun};
pub use dilation::{finite_power_dilation, PowerDilation};
pub use spec::{FamilySource, FamilySpec};
