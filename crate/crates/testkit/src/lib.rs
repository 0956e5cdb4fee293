//! Fixtures shared by the revsent test suites: synthetic review dumps and an
//! in-process HTTP stub that answers the v1 inference contract from canned
//! records.

mod corpus;
mod stub;

pub use corpus::{funnel_dump, planted_corpus, FunnelDump, PlantedCorpus, APPS};
pub use stub::{Fault, StubServer};
