//! A kernel for scroll nets: proofs of the implication–conjunction fragment of
//! intuitionistic logic drawn as graphs.

pub mod batch;
pub mod composition;
pub mod correctness;
pub mod derivation;
pub mod detour;
pub mod error;
pub mod formula;
pub mod gen;
pub mod id;
pub mod iso;
pub mod json;
pub mod net;
pub mod oracle;
pub mod stlc;
pub mod structure;

pub use error::{Error, Report, Result, RuleError, Violation};
pub use formula::{Formula, Sequent};
pub use id::{Atom, NodeId};
pub use structure::{Polarity, ScrollStructure};
pub use derivation::{apply, replay, Fresh, RuleKind, Step, Trace};
pub use net::{EditState, ScrollNet};
