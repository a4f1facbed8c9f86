pub mod embed;
pub mod graph;
pub mod metadata;
pub mod model;
pub mod models;
pub mod pipeline;
pub mod select;
pub mod synth;
pub mod text;
