//! Two hand-sized generators: a 3-cycle with complex spectrum and a 4-state
//! chain with a nontrivial Jordan block.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::linalg::C64;
use crate::markov::RateMatrix;

/// Deterministic rotation `1 → 2 → 3 → 1` at rate 1.
pub fn cyclic3() -> RateMatrix {
    RateMatrix::from_rows(&[&[-1.0, 1.0, 0.0], &[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0]]).expect("3x3 literal")
}

/// `u(x) = e^{2πix/3}` on `x = 1, 2, 3`, eigenvalue `−3/2 + i√3/2`.
pub fn cyclic3_eigenfunction() -> DVector<C64> {
    DVector::from_fn(3, |i, _| C64::from_polar(1.0, 2.0 * PI * (i + 1) as f64 / 3.0))
}

/// Generator whose eigenvalue `−1` carries a Jordan block of size 2.
pub fn jordan4() -> RateMatrix {
    RateMatrix::from_rows(&[&[-0.5, 0.5, 0.0, 0.0], &[0.0, -1.0, 0.5, 0.5], &[0.5, 0.0, -1.0, 0.5], &[0.0, 0.5, 0.5, -1.0]])
        .expect("4x4 literal")
}

/// `u⁽¹⁾(x) = (−1)ˣ/2`, `u⁽²⁾(x) = cos(π(x+1)/2)` on `x = 1..4`, with
/// `L u⁽¹⁾ = −u⁽¹⁾` and `L u⁽²⁾ = −u⁽²⁾ + u⁽¹⁾`.
pub fn jordan4_chain() -> Vec<DVector<f64>> {
    let u1 = DVector::from_fn(4, |i, _| if (i + 1) % 2 == 0 { 0.5 } else { -0.5 });
    let u2 = DVector::from_fn(4, |i, _| (PI * (i + 2) as f64 / 2.0).cos());
    vec![u1, u2]
}
