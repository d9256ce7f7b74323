//! Tseitin formulas on torus grids, random restrictions, extended canonical
//! decision trees and the encoding that bounds their depth.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod bits;
pub mod census;
pub mod codec;
pub mod consistency;
pub mod ecdt;
pub mod frege;
pub mod gen;
pub mod gf2;
pub mod grid;
pub mod info;
pub mod multi;
pub mod pairing;
pub mod partition;
pub mod resolution;
pub mod restriction;
pub mod tree;
pub mod tseitin;
