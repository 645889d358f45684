#![allow(dead_code)]

pub mod fuzz;
pub mod golden;
pub mod oracle;
pub mod ranking;
