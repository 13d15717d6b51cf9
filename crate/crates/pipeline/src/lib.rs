pub mod corpus;
pub mod digest;
pub mod labelfusion;
pub mod context;
pub mod embedding;
pub mod profile;
pub mod text;
pub mod featurize;
pub mod graph;
pub mod temporal;
pub mod generalization;
pub mod synth;
