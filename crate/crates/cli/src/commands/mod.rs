pub mod bench;
pub mod report;
pub mod screen;
pub mod simulate;
