pub mod bench;
pub mod complexity;
pub mod evaluate;
pub mod federate;
pub mod preprocess;
pub mod synth;
pub mod train;
