pub mod cachenet;
pub mod metrics;
pub mod re;
pub mod scenario;
pub mod topology;
pub mod workload;
