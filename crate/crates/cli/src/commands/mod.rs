pub mod bench;
pub mod fit;
pub mod gen;
pub mod influence;
pub mod replay;
