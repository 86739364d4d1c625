//! Static detection of unjustified assumptions in decorated EO objects.
//!
//! The pipeline parses a program, restores locators, inlines local method
//! calls in decorated objects, infers method preconditions before and after
//! the refactoring and asks an SMT solver whether any input accepted before
//! is rejected after. A reference interpreter confirms reported defects.

pub mod detector;
pub mod inliner;
pub mod interpreter;
pub mod locators;
pub mod methods;
pub mod num;
pub mod properties;
pub mod smt;
pub mod syntax;
pub mod testkit;
