//! Shared fixtures for the criterion benches.

use ssmseg::{synth, AudioBuffer, SynthScript};

/// Two-source synthetic bulletin of `seconds` total length.
pub fn two_source(seconds: f64) -> AudioBuffer {
    let half = seconds / 2.0;
    let script = SynthScript::with_library(&[("anchor", half), ("reporter", half)], 1);
    synth::render(&script).expect("library script is valid").0
}
