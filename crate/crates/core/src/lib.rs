pub mod experiments;
pub mod feasibility;
pub mod generator;
pub mod io;
pub mod lns;
pub mod matching;
pub mod model;
pub mod objective;
pub mod oracle;
pub mod routing;
pub mod seed;
pub mod simulator;
