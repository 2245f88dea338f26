//! Solver-independent description of decision variables and the affine
//! scalar and matrix constraints built on them.
//!
//! Constraints reference variables by [`VarId`] only, never by value, so
//! the same constraint list can be solved with some variables frozen or
//! replaced by a fixed rank-one structure.

use crate::hermitian::{CMatrix, HermitianMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Scalar { nonneg: bool },
    Hermitian { dim: usize, psd: bool },
}

impl VarKind {
    /// Number of real parameters: 1 for scalars, `n²` for Hermitian `n × n`.
    pub fn real_dim(&self) -> usize {
        match *self {
            VarKind::Scalar { .. } => 1,
            VarKind::Hermitian { dim, .. } => dim * dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VarTable {
    decls: Vec<VarDecl>,
}

impl VarTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_scalar(&mut self, name: impl Into<String>, nonneg: bool) -> VarId {
        self.push(name.into(), VarKind::Scalar { nonneg })
    }

    pub fn add_hermitian(&mut self, name: impl Into<String>, dim: usize, psd: bool) -> VarId {
        self.push(name.into(), VarKind::Hermitian { dim, psd })
    }

    fn push(&mut self, name: String, kind: VarKind) -> VarId {
        self.decls.push(VarDecl { name, kind });
        VarId(self.decls.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    pub fn get(&self, id: VarId) -> &VarDecl {
        &self.decls[id.0]
    }

    pub fn contains(&self, id: VarId) -> bool {
        id.0 < self.decls.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &VarDecl)> {
        self.decls.iter().enumerate().map(|(i, d)| (VarId(i), d))
    }

    pub fn scalar_count(&self) -> usize {
        self.decls.iter().filter(|d| matches!(d.kind, VarKind::Scalar { .. })).count()
    }

    /// Hermitian variable counts grouped by dimension, ascending.
    pub fn hermitian_counts(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for d in &self.decls {
            if let VarKind::Hermitian { dim, .. } = d.kind {
                match out.iter_mut().find(|(n, _)| *n == dim) {
                    Some(e) => e.1 += 1,
                    None => out.push((dim, 1)),
                }
            }
        }
        out.sort();
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Scalar(f64),
    Hermitian(HermitianMatrix),
}

impl Value {
    pub fn zero(kind: VarKind) -> Self {
        match kind {
            VarKind::Scalar { .. } => Value::Scalar(0.0),
            VarKind::Hermitian { dim, .. } => Value::Hermitian(HermitianMatrix::zeros(dim)),
        }
    }
}

/// One value per declared variable, indexed by `VarId`.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment(pub Vec<Value>);

impl Assignment {
    pub fn zeros(table: &VarTable) -> Self {
        Self(table.iter().map(|(_, d)| Value::zero(d.kind)).collect())
    }

    pub fn scalar(&self, id: VarId) -> f64 {
        match &self.0[id.0] {
            Value::Scalar(x) => *x,
            Value::Hermitian(_) => panic!("variable {} is not scalar", id.0),
        }
    }

    pub fn matrix(&self, id: VarId) -> &HermitianMatrix {
        match &self.0[id.0] {
            Value::Hermitian(m) => m,
            Value::Scalar(_) => panic!("variable {} is not a matrix", id.0),
        }
    }

    pub fn set(&mut self, id: VarId, value: Value) {
        self.0[id.0] = value;
    }
}

/// `constant + Σ a·x + Σ Re Tr(C·X)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearForm {
    pub constant: f64,
    pub scalars: Vec<(VarId, f64)>,
    pub matrices: Vec<(VarId, HermitianMatrix)>,
}

impl LinearForm {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            ..Self::default()
        }
    }

    pub fn add_scalar(&mut self, id: VarId, coeff: f64) -> &mut Self {
        self.scalars.push((id, coeff));
        self
    }

    pub fn add_matrix(&mut self, id: VarId, coeff: HermitianMatrix) -> &mut Self {
        self.matrices.push((id, coeff));
        self
    }

    pub fn eval(&self, x: &Assignment) -> f64 {
        self.constant
            + self.scalars.iter().map(|(id, a)| a * x.scalar(*id)).sum::<f64>()
            + self
                .matrices
                .iter()
                .map(|(id, c)| c.trace_product(x.matrix(*id)))
                .sum::<f64>()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.scalars
            .iter()
            .map(|(id, _)| *id)
            .chain(self.matrices.iter().map(|(id, _)| *id))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    /// `form ≥ 0`.
    NonNegative,
    /// `form = 0`.
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffineConstraint {
    pub name: String,
    pub form: LinearForm,
    pub sense: Sense,
}

impl AffineConstraint {
    /// Signed margin: positive when satisfied with room, negative when
    /// violated. Equalities report `−|form|`.
    pub fn margin(&self, x: &Assignment) -> f64 {
        let v = self.form.eval(x);
        match self.sense {
            Sense::NonNegative => v,
            Sense::Zero => -v.abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LmiTerm {
    /// `x · matrix` for a scalar variable.
    Scaled { var: VarId, matrix: HermitianMatrix },
    /// `coeff · Fᴴ X F` for a Hermitian variable `X`.
    Congruence { var: VarId, factor: CMatrix, coeff: f64 },
}

impl LmiTerm {
    pub fn var(&self) -> VarId {
        match self {
            LmiTerm::Scaled { var, .. } | LmiTerm::Congruence { var, .. } => *var,
        }
    }
}

/// Affine Hermitian-matrix-valued function required to be PSD.
#[derive(Clone, Debug, PartialEq)]
pub struct LmiBlock {
    pub name: String,
    pub constant: HermitianMatrix,
    pub terms: Vec<LmiTerm>,
}

impl LmiBlock {
    pub fn new(name: impl Into<String>, constant: HermitianMatrix) -> Self {
        Self {
            name: name.into(),
            constant,
            terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.constant.dim()
    }

    pub fn scaled(mut self, var: VarId, matrix: HermitianMatrix) -> Self {
        debug_assert_eq!(matrix.dim(), self.dim());
        self.terms.push(LmiTerm::Scaled { var, matrix });
        self
    }

    pub fn congruence(mut self, var: VarId, factor: CMatrix, coeff: f64) -> Self {
        debug_assert_eq!(factor.ncols(), self.dim());
        self.terms.push(LmiTerm::Congruence { var, factor, coeff });
        self
    }

    pub fn eval(&self, x: &Assignment) -> HermitianMatrix {
        let mut acc = self.constant.clone();
        for t in &self.terms {
            match t {
                LmiTerm::Scaled { var, matrix } => acc += &(matrix * x.scalar(*var)),
                LmiTerm::Congruence { var, factor, coeff } => {
                    acc += &(&x.matrix(*var).congruence(factor) * *coeff)
                }
            }
        }
        acc
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms.iter().map(LmiTerm::var)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    Lmi(LmiBlock),
    Affine(AffineConstraint),
}

impl Constraint {
    pub fn name(&self) -> &str {
        match self {
            Constraint::Lmi(b) => &b.name,
            Constraint::Affine(a) => &a.name,
        }
    }

    pub fn vars(&self) -> Vec<VarId> {
        match self {
            Constraint::Lmi(b) => b.vars().collect(),
            Constraint::Affine(a) => a.form.vars().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{CVector, C64};

    #[test]
    fn linear_form_and_lmi_eval() {
        let mut t = VarTable::new();
        let x = t.add_scalar("x", true);
        let w = t.add_hermitian("W", 2, true);
        let mut a = Assignment::zeros(&t);
        a.set(x, Value::Scalar(2.0));
        let v = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        a.set(w, Value::Hermitian(HermitianMatrix::outer(&v)));

        let mut f = LinearForm::constant(1.0);
        f.add_scalar(x, 3.0).add_matrix(w, HermitianMatrix::identity(2));
        assert!((f.eval(&a) - (1.0 + 6.0 + 2.0)).abs() < 1e-15);

        let factor = CMatrix::from_column_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let b = LmiBlock::new("b", HermitianMatrix::identity(1))
            .scaled(x, HermitianMatrix::identity(1) * -0.5)
            .congruence(w, factor, 2.0);
        let val = b.eval(&a);
        assert!((val.get(0, 0).re - (1.0 - 1.0 + 2.0)).abs() < 1e-15);
        assert_eq!(b.vars().collect::<Vec<_>>(), vec![x, w]);
    }

    #[test]
    fn table_counts() {
        let mut t = VarTable::new();
        t.add_hermitian("a", 3, true);
        t.add_hermitian("b", 2, false);
        t.add_hermitian("c", 3, true);
        t.add_scalar("s", true);
        assert_eq!(t.scalar_count(), 1);
        assert_eq!(t.hermitian_counts(), vec![(2, 1), (3, 2)]);
        assert_eq!(t.get(VarId(1)).kind.real_dim(), 4);
    }
}
