//! Range search in metric spaces with hyperplane-partition trees.
//!
//! A hyperplane tree splits its data by which of two pivots each point is
//! closer to. At query time a whole half can be skipped when the query is
//! provably far from the dividing boundary. Two rules decide that:
//!
//! * **Hyperbolic exclusion**, `|d(q,p1) - d(q,p2)| > 2t`, sound in any metric
//!   space;
//! * **Hilbert exclusion**, `|d(q,p1)² - d(q,p2)²| / 2d(p1,p2) > t`, sound
//!   whenever any four points of the space embed isometrically in 3-D
//!   Euclidean space. This holds for every space that embeds in Hilbert
//!   space: Euclidean, Jensen-Shannon, Triangular, `sqrt(1 - cos)` and
//!   square-rooted Manhattan distance among them.
//!
//! Hilbert exclusion is never stronger than the hyperbolic rule, so it always
//! prunes at least as much.
//!
//! The crate is organised as:
//!
//! * [`metrics`]: vectors, distance functions and their Hilbert-safety flags;
//! * [`geometry`]: the exclusion predicates, planar embeddings and the
//!   four-point embeddability test;
//! * [`index`]: GHT and MHT trees, range queries, the linear-scan oracle;
//! * [`analysis`]: intrinsic dimensionality, threshold calibration,
//!   exclusion power;
//! * [`data`]: seeded datasets and vector files;
//! * [`bench`]: the experiment drivers behind the `hilbex` command and their
//!   CSV output.
//!
//! ```
//! use hilbex::data::Space;
//! use hilbex::index::{ExclusionStrategy, HyperplaneTree, TreeKind};
//!
//! let space: Space = "euc_8".parse().unwrap();
//! let data = space.generate(2_000, 7).unwrap();
//! let tree = HyperplaneTree::build(&data, space.metric.clone(), TreeKind::Mht, 32, 7).unwrap();
//! let stats = tree.range_query(data.row(0), 0.3, ExclusionStrategy::hilbert()).unwrap();
//! assert!(stats.results.contains(&0));
//! ```

pub mod analysis;
pub mod bench;
pub mod data;
mod error;
pub mod geometry;
pub mod index;
pub mod metrics;

pub use error::{Error, Result};
