//! Tensor-product state-space layouts.

use super::OperatorError;

/// An ordered list of named variables with their Hilbert-space dimensions.
///
/// The full state space is the tensor product of the per-variable spaces in
/// declaration order, which is fixed for the lifetime of a program. Basis
/// indices are mixed-radix numbers with the first declared variable as the
/// most significant digit.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    names: Vec<String>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    total_dim: usize,
}

impl Layout {
    /// Builds a layout from `(name, dimension)` pairs in declaration order.
    pub fn new<S: Into<String>>(vars: Vec<(S, usize)>) -> Result<Self, OperatorError> {
        let mut names = Vec::with_capacity(vars.len());
        let mut dims = Vec::with_capacity(vars.len());
        for (name, dim) in vars {
            let name = name.into();
            if dim < 2 {
                return Err(OperatorError::BadDimension(name, dim));
            }
            if names.contains(&name) {
                return Err(OperatorError::DuplicateVariable(name));
            }
            names.push(name);
            dims.push(dim);
        }
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let total_dim = dims.iter().product::<usize>().max(1);
        Ok(Self {
            names,
            dims,
            strides,
            total_dim,
        })
    }

    pub fn var_count(&self) -> usize {
        self.names.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn dim_of(&self, var: usize) -> usize {
        self.dims[var]
    }

    pub fn name_of(&self, var: usize) -> &str {
        &self.names[var]
    }

    pub fn stride_of(&self, var: usize) -> usize {
        self.strides[var]
    }

    /// Index of a variable by name.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Like [`Layout::index_of`] but failing with `UnknownVariable`.
    pub fn require(&self, name: &str) -> Result<usize, OperatorError> {
        self.index_of(name)
            .ok_or_else(|| OperatorError::UnknownVariable(name.to_string()))
    }

    /// The digit of `full_index` belonging to `var`.
    #[inline]
    pub fn digit(&self, full_index: usize, var: usize) -> usize {
        (full_index / self.strides[var]) % self.dims[var]
    }

    /// Full basis index for one digit per variable, in declaration order.
    pub fn pack(&self, digits: &[usize]) -> Result<usize, OperatorError> {
        if digits.len() != self.dims.len() {
            return Err(OperatorError::DimensionMismatch {
                expected: self.dims.len(),
                got: digits.len(),
            });
        }
        let mut idx = 0usize;
        for (v, &d) in digits.iter().enumerate() {
            if d >= self.dims[v] {
                return Err(OperatorError::BasisOutOfRange {
                    var: self.names[v].clone(),
                    index: d,
                    dim: self.dims[v],
                });
            }
            idx += d * self.strides[v];
        }
        Ok(idx)
    }

    /// All `(name, dim)` pairs in order.
    pub fn vars(&self) -> impl Iterator<Item = (&str, usize)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.dims.iter().copied())
    }
}
