pub mod extremal;
pub mod fit;
pub mod index;
pub mod pipeline;
pub mod simulate;
