//! Structured application of subspace operators to full-space matrices.
//!
//! Operators act on a subset of the layout's variables. Conjugating a state
//! with the canonical full-space extension would cost O(D³); exploiting the
//! tensor structure brings every application down to O(D² · d_sub), which is
//! what makes loop unrolling on a few-hundred-dimensional space practical.
//! `extend_to_space` still materializes the full extension for callers that
//! need the matrix itself (observables, invariant checking, tests).

use super::{CMatrix, CVector, Layout, OperatorError};
use num_complex::Complex64;

/// Precomputed index maps for a list of target variables.
///
/// Rows/columns of a subspace operator index the tensor product of the
/// targets *in the given order* (which need not be declaration order).
#[derive(Debug, Clone)]
pub struct TargetMap {
    targets: Vec<usize>,
    strides: Vec<usize>,
    dims: Vec<usize>,
    sub_dim: usize,
    /// For each subspace index `s`, the full-space offset `Σ s_t · stride_t`.
    offsets: Vec<usize>,
}

impl TargetMap {
    pub fn new(layout: &Layout, targets: &[usize]) -> Self {
        let strides: Vec<usize> = targets.iter().map(|&t| layout.stride_of(t)).collect();
        let dims: Vec<usize> = targets.iter().map(|&t| layout.dim_of(t)).collect();
        let sub_dim = dims.iter().product::<usize>().max(1);
        let mut offsets = vec![0usize; sub_dim];
        for (s, off) in offsets.iter_mut().enumerate() {
            let mut rem = s;
            let mut acc = 0usize;
            for k in (0..dims.len()).rev() {
                let digit = rem % dims[k];
                rem /= dims[k];
                acc += digit * strides[k];
            }
            *off = acc;
        }
        Self {
            targets: targets.to_vec(),
            strides,
            dims,
            sub_dim,
            offsets,
        }
    }

    pub fn sub_dim(&self) -> usize {
        self.sub_dim
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Subspace index of `full`'s target digits and `full` with those digits
    /// cleared.
    #[inline]
    fn split(&self, full: usize) -> (usize, usize) {
        let mut sub = 0usize;
        let mut base = full;
        for k in 0..self.targets.len() {
            let digit = (full / self.strides[k]) % self.dims[k];
            sub = sub * self.dims[k] + digit;
            base -= digit * self.strides[k];
        }
        (sub, base)
    }
}

#[inline]
fn col_major(m: &CMatrix) -> (&[Complex64], usize) {
    (m.as_slice(), m.nrows())
}

/// `op^targets · m` without materializing the extension.
pub fn apply_matrix_left(op: &CMatrix, map: &TargetMap, m: &CMatrix) -> CMatrix {
    let dim = m.nrows();
    let sub = map.sub_dim;
    let (mdat, _) = col_major(m);
    let (odat, onr) = col_major(op);
    let mut out = CMatrix::zeros(dim, m.ncols());
    let out_slice = out.as_mut_slice();
    for r in 0..dim {
        let (sr, base) = map.split(r);
        for sp in 0..sub {
            let coeff = odat[sr + sp * onr];
            if coeff == Complex64::ZERO {
                continue;
            }
            let src_row = base + map.offsets[sp];
            for c in 0..m.ncols() {
                out_slice[r + c * dim] += coeff * mdat[src_row + c * dim];
            }
        }
    }
    out
}

/// `m · (op^targets)†` without materializing the extension.
pub fn apply_matrix_right(op: &CMatrix, map: &TargetMap, m: &CMatrix) -> CMatrix {
    let dim = m.ncols();
    let sub = map.sub_dim;
    let (mdat, nrows) = col_major(m);
    let (odat, onr) = col_major(op);
    let mut out = CMatrix::zeros(m.nrows(), dim);
    let out_slice = out.as_mut_slice();
    for c in 0..dim {
        let (sc, base) = map.split(c);
        for sp in 0..sub {
            let coeff = odat[sc + sp * onr].conj();
            if coeff == Complex64::ZERO {
                continue;
            }
            let src_col = base + map.offsets[sp];
            let src = &mdat[src_col * nrows..src_col * nrows + m.nrows()];
            let dst = &mut out_slice[c * nrows..c * nrows + m.nrows()];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += coeff * s;
            }
        }
    }
    out
}

/// `op^targets · m · (op^targets)†`.
pub fn conjugate(op: &CMatrix, map: &TargetMap, m: &CMatrix) -> CMatrix {
    apply_matrix_right(op, map, &apply_matrix_left(op, map, m))
}

/// `op^targets · v` on a state vector.
pub fn apply_to_vector(op: &CMatrix, map: &TargetMap, v: &CVector) -> CVector {
    let dim = v.len();
    let (odat, onr) = col_major(op);
    let mut out = CVector::zeros(dim);
    for r in 0..dim {
        let (sr, base) = map.split(r);
        let mut acc = Complex64::ZERO;
        for sp in 0..map.sub_dim {
            let coeff = odat[sr + sp * onr];
            if coeff != Complex64::ZERO {
                acc += coeff * v[base + map.offsets[sp]];
            }
        }
        out[r] = acc;
    }
    out
}

/// `tr((e^targets) · m)` for a subspace matrix `e`, without extension.
pub fn expectation_on_targets(e: &CMatrix, map: &TargetMap, m: &CMatrix) -> Complex64 {
    let dim = m.nrows();
    let (mdat, _) = col_major(m);
    let (edat, enr) = col_major(e);
    let mut acc = Complex64::ZERO;
    // tr(E^q m) = Σ_r Σ_{s'} E[s_r, s'] m[base(r)+off(s'), r]
    for r in 0..dim {
        let (sr, base) = map.split(r);
        for sp in 0..map.sub_dim {
            let coeff = edat[sr + sp * enr];
            if coeff != Complex64::ZERO {
                acc += coeff * mdat[base + map.offsets[sp] + r * dim];
            }
        }
    }
    acc
}

/// Canonical extension of a subspace operator to the full space.
///
/// The extension of the identity is the identity, and the map is a
/// homomorphism: `ext(AB) = ext(A)·ext(B)` and `ext(A†) = ext(A)†`.
pub fn extend_to_space(
    op: &CMatrix,
    layout: &Layout,
    targets: &[usize],
) -> Result<CMatrix, OperatorError> {
    for &t in targets {
        if t >= layout.var_count() {
            return Err(OperatorError::UnknownVariable(format!("#{t}")));
        }
    }
    let map = TargetMap::new(layout, targets);
    if op.nrows() != map.sub_dim || op.ncols() != map.sub_dim {
        return Err(OperatorError::DimensionMismatch {
            expected: map.sub_dim,
            got: op.nrows(),
        });
    }
    let dim = layout.total_dim();
    let mut out = CMatrix::zeros(dim, dim);
    for c in 0..dim {
        let (sc, base) = map.split(c);
        for sr in 0..map.sub_dim {
            let coeff = op[(sr, sc)];
            if coeff != Complex64::ZERO {
                out[(base + map.offsets[sr], c)] = coeff;
            }
        }
    }
    Ok(out)
}

/// The initialization channel `Σ_i (|b⟩⟨i|)^q · m · (|i⟩⟨b|)^q`.
///
/// Trace preserving; the result has the `q`-marginal `|b⟩⟨b|`.
pub fn init_channel(layout: &Layout, var: usize, basis: usize, m: &CMatrix) -> CMatrix {
    let dim = m.nrows();
    let dq = layout.dim_of(var);
    let stride = layout.stride_of(var);
    let (mdat, _) = col_major(m);
    let mut out = CMatrix::zeros(dim, dim);
    let out_slice = out.as_mut_slice();
    for c in 0..dim {
        if (c / stride) % dq != basis {
            continue;
        }
        let cb = c - basis * stride;
        for r in 0..dim {
            if (r / stride) % dq != basis {
                continue;
            }
            let rb = r - basis * stride;
            let mut acc = Complex64::ZERO;
            for i in 0..dq {
                acc += mdat[(rb + i * stride) + (cb + i * stride) * dim];
            }
            out_slice[r + c * dim] = acc;
        }
    }
    out
}

/// Adjoint of the initialization channel: `A ↦ Σ_i (|i⟩⟨b|)^q A (|b⟩⟨i|)^q`.
///
/// Satisfies `tr(A · init(ρ)) = tr(init_adjoint(A) · ρ)`.
pub fn init_adjoint(layout: &Layout, var: usize, basis: usize, a: &CMatrix) -> CMatrix {
    let dim = a.nrows();
    let dq = layout.dim_of(var);
    let stride = layout.stride_of(var);
    let (adat, _) = col_major(a);
    let mut out = CMatrix::zeros(dim, dim);
    let out_slice = out.as_mut_slice();
    for c in 0..dim {
        let dc = (c / stride) % dq;
        let cb = c + basis * stride - dc * stride;
        for r in 0..dim {
            let dr = (r / stride) % dq;
            if dr != dc {
                continue;
            }
            let rb = r + basis * stride - dr * stride;
            out_slice[r + c * dim] = adat[rb + cb * dim];
        }
    }
    out
}

/// Reduced state of one variable: every other variable traced out.
pub fn marginal_of_var(layout: &Layout, var: usize, m: &CMatrix) -> CMatrix {
    let dq = layout.dim_of(var);
    let stride = layout.stride_of(var);
    let dim = m.nrows();
    let mut out = CMatrix::zeros(dq, dq);
    for full in 0..dim {
        let d = (full / stride) % dq;
        let base = full - d * stride;
        for d2 in 0..dq {
            out[(d, d2)] += m[(full, base + d2 * stride)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }

    /// Naive Kronecker product, used only as a test oracle.
    fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
        let (ar, ac) = (a.nrows(), a.ncols());
        let (br, bc) = (b.nrows(), b.ncols());
        CMatrix::from_fn(ar * br, ac * bc, |i, j| {
            a[(i / br, j / bc)] * b[(i % br, j % bc)]
        })
    }

    #[test]
    fn extend_rejects_bad_inputs() {
        let l = Layout::new(vec![("q", 2), ("r", 2)]).unwrap();
        let id2 = CMatrix::identity(2, 2);
        assert!(matches!(
            extend_to_space(&id2, &l, &[7]),
            Err(OperatorError::UnknownVariable(_))
        ));
        let id3 = CMatrix::identity(3, 3);
        assert!(matches!(
            extend_to_space(&id3, &l, &[0]),
            Err(OperatorError::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn extend_identity_is_identity() {
        let l = Layout::new(vec![("q", 2), ("r", 2)]).unwrap();
        let id2 = CMatrix::identity(2, 2);
        let full = extend_to_space(&id2, &l, &[0]).unwrap();
        assert_eq!(full, CMatrix::identity(4, 4));
    }

    #[test]
    fn extend_first_var_is_plain_kron() {
        let l = Layout::new(vec![("q", 2), ("r", 2)]).unwrap();
        let full = extend_to_space(&pauli_x(), &l, &[0]).unwrap();
        let expect = kron(&pauli_x(), &CMatrix::identity(2, 2));
        assert_eq!(full, expect);
    }

    #[test]
    fn extend_matches_brute_force_permutation() {
        // X on r in layout (q, r): oracle builds X⊗I in (r, q) order and
        // conjugates with the explicit index permutation back to (q, r).
        let l = Layout::new(vec![("q", 2), ("r", 2)]).unwrap();
        let full = extend_to_space(&pauli_x(), &l, &[1]).unwrap();

        let subset_first = kron(&pauli_x(), &CMatrix::identity(2, 2));
        // permutation: layout index (q,r) -> subset-order index (r,q)
        let dim = 4;
        let mut perm = CMatrix::zeros(dim, dim);
        for idx in 0..dim {
            let q = idx / 2;
            let r = idx % 2;
            let subset_idx = r * 2 + q;
            perm[(subset_idx, idx)] = c(1., 0.);
        }
        let oracle = perm.adjoint() * subset_first * &perm;
        assert!((&full - &oracle).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn extension_is_homomorphism() {
        let l = Layout::new(vec![("a", 2), ("k", 3), ("b", 2)]).unwrap();
        let mut rng = crate::rng::SplitMix64::new(9);
        let rand = |rng: &mut crate::rng::SplitMix64| {
            CMatrix::from_fn(3, 3, |_, _| c(rng.next_gaussian(), rng.next_gaussian()))
        };
        let a = rand(&mut rng);
        let b = rand(&mut rng);
        let ea = extend_to_space(&a, &l, &[1]).unwrap();
        let eb = extend_to_space(&b, &l, &[1]).unwrap();
        let eab = extend_to_space(&(&a * &b), &l, &[1]).unwrap();
        assert!((&ea * &eb - eab).iter().all(|z| z.norm() < 1e-12));
        let eadj = extend_to_space(&a.adjoint(), &l, &[1]).unwrap();
        assert!((ea.adjoint() - eadj).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn structured_apply_agrees_with_extension() {
        let l = Layout::new(vec![("q", 2), ("k", 3)]).unwrap();
        let mut rng = crate::rng::SplitMix64::new(3);
        let op = CMatrix::from_fn(3, 3, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
        let m = CMatrix::from_fn(6, 6, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
        let map = TargetMap::new(&l, &[1]);
        let ext = extend_to_space(&op, &l, &[1]).unwrap();

        let fast = conjugate(&op, &map, &m);
        let slow = &ext * &m * ext.adjoint();
        assert!((&fast - &slow).iter().all(|z| z.norm() < 1e-12));

        let exp = expectation_on_targets(&op, &map, &m);
        let exp_slow = (&ext * &m).trace();
        assert!((exp - exp_slow).norm() < 1e-12);
    }

    #[test]
    fn targets_in_non_declaration_order() {
        let l = Layout::new(vec![("q", 2), ("r", 2)]).unwrap();
        let mut rng = crate::rng::SplitMix64::new(5);
        let op = CMatrix::from_fn(4, 4, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
        let m = CMatrix::from_fn(4, 4, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
        let map = TargetMap::new(&l, &[1, 0]);
        let ext = extend_to_space(&op, &l, &[1, 0]).unwrap();
        let fast = apply_matrix_left(&op, &map, &m);
        let slow = &ext * &m;
        assert!((&fast - &slow).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn init_channel_matches_definition() {
        let l = Layout::new(vec![("q", 2), ("r", 2)]).unwrap();
        let mut rng = crate::rng::SplitMix64::new(11);
        let m = CMatrix::from_fn(4, 4, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
        // oracle: Σ_i ext(|b><i|) m ext(|i><b|)
        let b = 0usize;
        let mut oracle = CMatrix::zeros(4, 4);
        for i in 0..2 {
            let mut ketbra = CMatrix::zeros(2, 2);
            ketbra[(b, i)] = c(1., 0.);
            let e = extend_to_space(&ketbra, &l, &[0]).unwrap();
            oracle += &e * &m * e.adjoint();
        }
        let fast = init_channel(&l, 0, b, &m);
        assert!((&fast - &oracle).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn init_adjoint_is_adjoint_of_channel() {
        let l = Layout::new(vec![("q", 2), ("k", 3)]).unwrap();
        let mut rng = crate::rng::SplitMix64::new(13);
        let rho = CMatrix::from_fn(6, 6, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
        let a = CMatrix::from_fn(6, 6, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
        let lhs = (&a * init_channel(&l, 1, 2, &rho)).trace();
        let rhs = (init_adjoint(&l, 1, 2, &a) * &rho).trace();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn marginal_traces_out_the_rest() {
        let l = Layout::new(vec![("q", 2), ("r", 2)]).unwrap();
        // |10><10| => marginal of q is |1><1|
        let mut m = CMatrix::zeros(4, 4);
        m[(2, 2)] = c(1., 0.);
        let marg = marginal_of_var(&l, 0, &m);
        assert!((marg[(1, 1)] - c(1., 0.)).norm() < 1e-14);
        assert!(marg[(0, 0)].norm() < 1e-14);
    }
}
