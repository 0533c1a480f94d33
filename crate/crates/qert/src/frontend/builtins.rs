//! Built-in operator library.

use crate::operators::CMatrix;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A resolved builtin: either a unitary matrix or measurement matrices,
/// both on the subspace of the use site's targets.
#[derive(Debug, Clone)]
pub enum BuiltinOp {
    Unitary(CMatrix),
    Measurement(Vec<(u32, CMatrix)>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinError {
    Unknown(String),
    Arity { name: String, expected: usize, got: usize },
    BadArgs(String),
    Dim { name: String, expected: usize, got: usize },
}

impl std::fmt::Display for BuiltinError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BuiltinError::Unknown(n) => write!(f, "unknown builtin `{n}`"),
            BuiltinError::Arity {
                name,
                expected,
                got,
            } => write!(f, "builtin `{name}` takes {expected} argument(s), got {got}"),
            BuiltinError::BadArgs(m) => write!(f, "{m}"),
            BuiltinError::Dim {
                name,
                expected,
                got,
            } => write!(
                f,
                "builtin `{name}` acts on dimension {expected}, but the targets have dimension {got}"
            ),
        }
    }
}

pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)])
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

/// Standard-basis projective measurement: outcomes `0..d-1`, `M_i = |i⟩⟨i|`.
pub fn m_std(d: usize) -> Vec<(u32, CMatrix)> {
    (0..d)
        .map(|i| {
            let mut m = CMatrix::zeros(d, d);
            m[(i, i)] = c(1., 0.);
            (i as u32, m)
        })
        .collect()
}

/// Threshold measurement on a `d`-level counter: outcome 0 is
/// `M_≥ = Σ_{i=m}^{d-1} |i⟩⟨i|` (the counter reached `m`), outcome 1 is
/// `M_< = I - M_≥` (keep looping).
pub fn m_geq(m: usize, d: usize) -> Vec<(u32, CMatrix)> {
    let mut geq = CMatrix::zeros(d, d);
    let mut lt = CMatrix::zeros(d, d);
    for i in 0..d {
        if i >= m {
            geq[(i, i)] = c(1., 0.);
        } else {
            lt[(i, i)] = c(1., 0.);
        }
    }
    vec![(0, geq), (1, lt)]
}

/// Cyclic increment `|i⟩ → |i+1 mod d⟩`.
pub fn u_succ(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[((i + 1) % d, i)] = c(1., 0.);
    }
    m
}

/// Controlled bit-setter on `[k, Q_0, ..., Q_{m-1}]` (dimension `d·2^m`).
///
/// Conditioned on the counter being `|h⟩` with `h < m`, applies `X` to
/// `Q_h` when `b = 1` (and nothing when `b = 0`); identity for `h >= m`.
/// On states where `Q_h` is still `|0⟩` this sets the h-th key bit to `|b⟩`.
pub fn u_p(b: usize, d: usize, m: usize) -> CMatrix {
    let qdim = 1usize << m;
    let dim = d * qdim;
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let h = col / qdim;
        let q = col % qdim;
        let q2 = if b == 1 && h < m {
            q ^ (1usize << (m - 1 - h))
        } else {
            q
        };
        out[(h * qdim + q2, col)] = c(1., 0.);
    }
    out
}

/// Resolves a builtin by name.
///
/// `use_dim` is the dimension of the use site's target subspace; dimension-
/// generic builtins (`I`, `M_std`) instantiate at that dimension, the rest
/// are checked against it when it is known.
pub fn builtin(
    name: &str,
    args: &[usize],
    use_dim: Option<usize>,
) -> Result<BuiltinOp, BuiltinError> {
    let arity = |expected: usize| -> Result<(), BuiltinError> {
        if args.len() != expected {
            Err(BuiltinError::Arity {
                name: name.to_string(),
                expected,
                got: args.len(),
            })
        } else {
            Ok(())
        }
    };
    let check_dim = |expected: usize| -> Result<(), BuiltinError> {
        match use_dim {
            Some(got) if got != expected => Err(BuiltinError::Dim {
                name: name.to_string(),
                expected,
                got,
            }),
            _ => Ok(()),
        }
    };
    match name {
        "H" => {
            arity(0)?;
            check_dim(2)?;
            Ok(BuiltinOp::Unitary(hadamard()))
        }
        "X" => {
            arity(0)?;
            check_dim(2)?;
            Ok(BuiltinOp::Unitary(pauli_x()))
        }
        "I" => {
            arity(0)?;
            let d = use_dim.ok_or_else(|| {
                BuiltinError::BadArgs("builtin `I` needs a use site to fix its dimension".into())
            })?;
            Ok(BuiltinOp::Unitary(CMatrix::identity(d, d)))
        }
        "M_std" => {
            arity(0)?;
            let d = use_dim.ok_or_else(|| {
                BuiltinError::BadArgs(
                    "builtin `M_std` needs a use site to fix its dimension".into(),
                )
            })?;
            Ok(BuiltinOp::Measurement(m_std(d)))
        }
        "M_geq" => {
            arity(2)?;
            let (m, d) = (args[0], args[1]);
            if d < 2 || m > d {
                return Err(BuiltinError::BadArgs(format!(
                    "M_geq({m}, {d}) needs d >= 2 and m <= d"
                )));
            }
            check_dim(d)?;
            Ok(BuiltinOp::Measurement(m_geq(m, d)))
        }
        "U_succ" => {
            arity(1)?;
            let d = args[0];
            if d < 2 {
                return Err(BuiltinError::BadArgs(format!("U_succ({d}) needs d >= 2")));
            }
            check_dim(d)?;
            Ok(BuiltinOp::Unitary(u_succ(d)))
        }
        "U_P" => {
            arity(3)?;
            let (b, d, m) = (args[0], args[1], args[2]);
            if b > 1 {
                return Err(BuiltinError::BadArgs(format!(
                    "U_P bit must be 0 or 1, got {b}"
                )));
            }
            if d < 2 || m == 0 || m >= d {
                return Err(BuiltinError::BadArgs(format!(
                    "U_P({b}, {d}, {m}) needs d >= 2 and 1 <= m < d"
                )));
            }
            check_dim(d << m)?;
            Ok(BuiltinOp::Unitary(u_p(b, d, m)))
        }
        _ => Err(BuiltinError::Unknown(name.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hadamard_is_unitary() {
        let h = hadamard();
        let gram = h.adjoint() * &h;
        assert!((gram - CMatrix::identity(2, 2))
            .iter()
            .all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn m_geq_matches_threshold() {
        let set = m_geq(2, 4);
        let (id0, geq) = &set[0];
        assert_eq!(*id0, 0);
        for i in 0..4 {
            let expect = if i >= 2 { 1.0 } else { 0.0 };
            assert!((geq[(i, i)].re - expect).abs() < 1e-15);
        }
        let (_, lt) = &set[1];
        for i in 0..4 {
            let expect = if i < 2 { 1.0 } else { 0.0 };
            assert!((lt[(i, i)].re - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn u_succ_is_a_cyclic_permutation() {
        let u = u_succ(4);
        // each column has exactly one 1, and |3> wraps to |0>
        for colidx in 0..4 {
            let col = u.column(colidx);
            let ones = col.iter().filter(|z| (z.re - 1.0).abs() < 1e-15).count();
            let zeros = col.iter().filter(|z| z.norm() < 1e-15).count();
            assert_eq!(ones, 1);
            assert_eq!(zeros, 3);
        }
        assert!((u[(0, 3)].re - 1.0).abs() < 1e-15);
        let gram = u.adjoint() * &u;
        assert!((gram - CMatrix::identity(4, 4))
            .iter()
            .all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn u_p_sets_the_indexed_bit() {
        // d=4, m=2: control |k=0>, Q=|00> -> Q=|10>
        let u = u_p(1, 4, 2);
        assert!((u[(2, 0)].re - 1.0).abs() < 1e-15);
        // control |k=1>: bit 1 flips: Q=|00> -> |01>, column 1*4+0=4, row 4+1=5
        assert!((u[(5, 4)].re - 1.0).abs() < 1e-15);
        // control |k=2> (>= m): identity
        assert!((u[(8, 8)].re - 1.0).abs() < 1e-15);
        // U_P0 is the identity
        let u0 = u_p(0, 4, 2);
        assert!((u0 - CMatrix::identity(16, 16))
            .iter()
            .all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn builtin_resolution_checks_dims() {
        assert!(matches!(
            builtin("H", &[], Some(4)),
            Err(BuiltinError::Dim { .. })
        ));
        assert!(matches!(
            builtin("nope", &[], None),
            Err(BuiltinError::Unknown(_))
        ));
        assert!(matches!(builtin("M_std", &[], Some(3)), Ok(BuiltinOp::Measurement(v)) if v.len() == 3));
    }
}
