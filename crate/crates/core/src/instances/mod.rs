//! Shipped rewriting systems.

pub mod birth_death;
pub mod prbt;
