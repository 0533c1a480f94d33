//! Seeded state batteries for property checks and sample-mode verdicts.

use crate::operators::{CMatrix, CVector, Layout, Pdm};
use crate::rng::SplitMix64;
use num_complex::Complex64;
use std::sync::Arc;

/// Composition of a deterministic state battery.
#[derive(Debug, Clone)]
pub struct BatteryOptions {
    pub seed: u64,
    /// All computational-basis states first.
    pub include_basis: bool,
    pub random_mixed: usize,
    pub random_pure: usize,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            seed: 0xba77_e57a,
            include_basis: true,
            random_mixed: 64,
            random_pure: 64,
        }
    }
}

impl BatteryOptions {
    /// Pads the random sections so the battery has at least `n` states.
    pub fn with_min_states(mut self, n: usize, layout: &Layout) -> Self {
        let basis = if self.include_basis {
            layout.total_dim()
        } else {
            0
        };
        let have = basis + self.random_mixed + self.random_pure;
        if have < n {
            let missing = n - have;
            self.random_mixed += missing / 2 + missing % 2;
            self.random_pure += missing / 2;
        }
        self
    }
}

/// A random normalized pure state.
pub fn random_pure(layout: &Arc<Layout>, rng: &mut SplitMix64) -> Pdm {
    let d = layout.total_dim();
    let mut v = CVector::from_fn(d, |_, _| {
        Complex64::new(rng.next_gaussian(), rng.next_gaussian())
    });
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    Pdm::from_pure(layout.clone(), &v).expect("dimension matches")
}

/// A random full-rank mixed state of trace 1.
pub fn random_mixed(layout: &Arc<Layout>, rng: &mut SplitMix64) -> Pdm {
    let d = layout.total_dim();
    let g = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.next_gaussian(), rng.next_gaussian())
    });
    let psd = &g * g.adjoint();
    let tr = psd.trace().re;
    Pdm::from_matrix_unchecked(layout.clone(), psd.scale(1.0 / tr))
}

/// Basis states, then seeded random mixed, then seeded random pure states.
/// All trace 1; deterministic for a fixed `(layout, options)`.
pub fn state_battery(layout: &Arc<Layout>, opts: &BatteryOptions) -> Vec<Pdm> {
    let mut out = Vec::new();
    if opts.include_basis {
        let d = layout.total_dim();
        for i in 0..d {
            let mut m = CMatrix::zeros(d, d);
            m[(i, i)] = Complex64::new(1.0, 0.0);
            out.push(Pdm::from_matrix_unchecked(layout.clone(), m));
        }
    }
    let mut rng = SplitMix64::stream(opts.seed, 1);
    for _ in 0..opts.random_mixed {
        out.push(random_mixed(layout, &mut rng));
    }
    let mut rng = SplitMix64::stream(opts.seed, 2);
    for _ in 0..opts.random_pure {
        out.push(random_pure(layout, &mut rng));
    }
    out
}
