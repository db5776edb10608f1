#![allow(dead_code)]

pub mod confirmer;
pub mod grammar;
pub mod search;
