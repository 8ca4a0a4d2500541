pub mod app;
pub mod assembly;
pub mod dynamics;
pub mod error;
pub mod mesh;
pub mod space;
pub mod sparse;
pub mod specfun;
pub mod verify;
