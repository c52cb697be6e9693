pub mod cli;
pub mod expr;
pub mod locus;
pub mod permgroup;
pub mod pipeline;
pub mod solve;
pub mod tracker;
pub mod verdict;
