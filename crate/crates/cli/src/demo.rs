//! The bundled capacity-resistor demo: one vertex with C = 3, G = 1.5,
//! b = 3 and u0 = 0, split one third / two thirds across a single
//! transmission line with Z = 1.5 on the window [0, 1].
//!
//! The sweep budget is set high enough for the iteration to reach the
//! 1e-9 stopping tolerance at this step size; at h = 0.01 and Z = 1.5 it
//! needs roughly 2100 sweeps.

/// Problem-file text of the demo; written next to the run outputs so the
/// file can be inspected, edited and re-run.
pub fn demo_problem_text() -> String {
    let third = 1.0 / 3.0;
    format!(
        "\
# Capacity-resistor network: C du/dt + G u = b with C = 3, G = 1.5,
# b = 3, u(0) = 0. The single vertex is split between parts 1 and 2
# with one third of C, G and b on part 1 (C1 = 1, G1 = 0.5, b1 = 1),
# joined by one waveform transmission line with Z = 1.5.
system n=1
C 0 0 3
A 0 0 1.5
b 0 3
x0 0 0
boundary 0 1 2 {third:.16e} {third:.16e} {third:.16e}
window 0 1 0.01
impedance const 1.5
delay 1
tol 1e-9
max_sweeps 3000
"
    )
}
