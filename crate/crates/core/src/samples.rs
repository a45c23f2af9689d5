//! Small hand-checked instances shared by tests, examples and the CLI.

use crate::network::{validate_instance, InstanceBuilder, ValidatedInstance};
use crate::rational::rat;

fn finish(b: &InstanceBuilder) -> ValidatedInstance {
    validate_instance(b.build()).expect("sample instances are valid")
}

/// One arc `s -> t` with zero transit time and capacity matching the rate.
pub fn single_arc() -> ValidatedInstance {
    let mut b = InstanceBuilder::new();
    b.arc("e", "s", "t", rat(0, 1), rat(1, 1));
    b.source("s", rat(1, 1)).sink("t", rat(1, 1));
    finish(&b)
}

/// One arc `s -> t` fed at twice its capacity, so a queue grows forever.
pub fn fast_source() -> ValidatedInstance {
    let mut b = InstanceBuilder::new();
    b.arc("e", "s", "t", rat(0, 1), rat(1, 1));
    b.source("s", rat(2, 1)).sink("t", rat(1, 1));
    finish(&b)
}

/// Two parallel unit-capacity arcs, `e1` instantaneous and `e2` with transit
/// time 1, fed at rate 3. The second arc joins at particle 3/2.
pub fn parallel_arcs() -> ValidatedInstance {
    let mut b = InstanceBuilder::new();
    b.arc("e1", "s", "t", rat(0, 1), rat(1, 1));
    b.arc("e2", "s", "t", rat(1, 1), rat(1, 1));
    b.source("s", rat(3, 1)).sink("t", rat(1, 1));
    finish(&b)
}

/// Two sources and two sinks wired crosswise with mirrored transit times and
/// equal demands; the two sinks' labels coincide by symmetry.
pub fn crossing_sinks() -> ValidatedInstance {
    let mut b = InstanceBuilder::new();
    b.arc("s1t1", "s1", "t1", rat(2, 1), rat(1, 1));
    b.arc("s1t2", "s1", "t2", rat(1, 1), rat(1, 1));
    b.arc("s2t1", "s2", "t1", rat(1, 1), rat(1, 1));
    b.arc("s2t2", "s2", "t2", rat(2, 1), rat(1, 1));
    b.source("s1", rat(1, 1))
        .source("s2", rat(1, 1))
        .sink("t1", rat(1, 2))
        .sink("t2", rat(1, 2));
    finish(&b)
}
