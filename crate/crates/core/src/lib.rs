//! Temporal logic tree compilation with pluggable reachability backends.
//!
//! Formulas are parsed ([`formula`]), bound to geometric sets ([`setexpr`]),
//! compiled into temporal logic trees ([`tlt`]) and realized on a backend
//! implementing the [`backend::Backend`] contract. Two backends ship:
//! Hamilton-Jacobi level sets on grids ([`hj`]) and hybrid zonotopes with
//! discrete-time linear dynamics ([`hz`]).

pub mod backend;
pub mod formula;
pub mod hj;
pub mod hz;
pub mod results;
pub mod setexpr;
pub mod specfile;
pub mod tlt;

pub use backend::{Backend, BackendCapabilities, BackendError, Procedure, TimeModel, TimedSet};
pub use formula::{parse, Formula, Fragment};
pub use setexpr::{evaluate, evaluate_timed, PropositionMap, SetExpr, StateSpace};
pub use tlt::{check_compat, construct, is_satisfiable, member, realize, ApproxDir, RealizeOptions};
