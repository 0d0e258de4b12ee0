//! Netlists shipped with the crate.

use crate::netlist::{parse_netlist, Circuit};

/// Normalized multiple-feedback biquad low-pass (w0 = 1 rad/s, Q = 1/sqrt 2)
/// with seven passive fault targets: R1..R5, C1, C2.
pub const BIQUAD: &str = include_str!("../circuits/biquad.cir");

pub fn biquad() -> Circuit {
    parse_netlist(BIQUAD).expect("shipped biquad netlist parses")
}
