pub mod agreement;
pub mod eval;
pub mod extract;
pub mod gen_prompt;
pub mod graph;
pub mod pipeline;
pub mod record;
pub mod stats;
