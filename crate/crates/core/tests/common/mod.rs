#![allow(dead_code)]

pub use heralded::oracle::*;
