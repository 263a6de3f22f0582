pub mod certificate;
pub mod continuation;
pub mod fold;
pub mod interval;
pub mod model;
pub mod newton;
pub mod nonrigorous;
pub mod odeint;
pub mod pipeline;
pub mod poincare;
pub mod reference;
pub mod seeds;
pub mod selftest;
pub mod taylor;
