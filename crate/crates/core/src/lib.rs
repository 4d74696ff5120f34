//! An XML warehouse engine for multidimensional analysis over heterogeneous
//! document collections.
//!
//! The crate turns loosely structured XML documents into a homogeneous cube of
//! fact documents, stores the cube in a compact two-document layout, and
//! answers analytical queries over it. The pipeline is:
//!
//! 1. [`mcm`] captures the analyst's multidimensional model (facts, measures,
//!    dimensions, hierarchies, mandatory flags) and emits a star or snowflake
//!    logical schema.
//! 2. [`attree`] represents schemas and documents as attribute trees and
//!    decides document admission through a pruning/grafting fusion.
//! 3. [`cube`] runs the admission gate over a document batch and instantiates
//!    one XML fact document per accepted fact instance.
//! 4. [`store`] holds the warehouse as one dimensions document and one facts
//!    document, with deterministic serialization.
//! 5. [`query`] evaluates selection/grouping/aggregation queries and rewrites
//!    them along dimension hierarchies (roll-up and drill-down).
//! 6. [`joinindex`] denormalizes dimension attributes into a single index
//!    document so queries run without any cross-document join.
//! 7. [`viewsel`] clusters a query workload, derives candidate materialized
//!    views and selects a set under a space budget with a greedy search.
//! 8. [`opac`] aggregates a dimension by hierarchical clustering of its
//!    members, producing new navigable aggregate levels.
//! 9. [`structminer`] mines association rules over tag structure using a
//!    hierarchy-aware frequent-itemset search.
//!
//! The crate is `no_std` (with `alloc`): everything works on in-memory values
//! and strings. File access, the command-line front end and the synthetic data
//! generators live in the companion `xmlcube` crate.
//!
//! All operations are pure functions over immutable values, and every
//! serializer in the crate is deterministic: identical inputs produce
//! byte-identical documents.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod attree;
pub mod cube;
pub mod decimal;
pub mod descriptor;
pub mod hash;
pub mod joinindex;
pub mod mcm;
pub mod opac;
pub mod query;
pub mod store;
pub mod structminer;
pub mod viewsel;
pub mod xml;

#[cfg(test)]
pub(crate) mod testsupport;

pub use attree::{AttributeTree, FusionOutcome, FusionStatus, LabelPath};
pub use decimal::Decimal;
pub use mcm::Mcm;
pub use query::{AnalyticalQuery, ResultTable};
pub use store::XCubeStore;
pub use xml::Element;
