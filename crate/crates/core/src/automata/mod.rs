//! Untimed deterministic generators and their language operations.

mod dot;
mod generator;
mod ops;

pub use dot::{to_dot, to_dot_with_labels};
pub use generator::{Generator, StateId};
pub use ops::{
    allevents, is_nonblocking, language_contained, language_equal, meet, meet_with_map, minimize,
    project, quotient, refine_partition, sync_product, sync_product_with_map, trim,
    trim_with_map, Product, Projection,
};
