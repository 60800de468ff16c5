pub mod collapse;
pub mod conditional;
pub mod fit;
pub mod ingest;
pub mod report;
pub mod summarize;
pub mod synth;
