//! Lowering of a [`ConicProgram`] onto real parameters.
//!
//! A free Hermitian `n × n` variable becomes `n²` real parameters in the
//! basis `E_ii`, `E_ij + E_ji`, `i(E_ij − E_ji)` (`i < j`). Every parameter
//! is measured in units of its variable's scale hint; every matrix block is
//! then conditioned by a positive diagonal congruence `D·X·D` (which keeps
//! PSD-ness) that brings its diagonal entries to order one, and every scalar
//! row is divided by its largest coefficient. Violations reported here are in
//! these normalized units.

use std::collections::BTreeMap;

use super::backend::{PsdBlock, RealConicProblem, SparseRow};
use super::{Binding, ConicProgram};
use crate::hermitian::{eig_hermitian, real_embed, CMatrix, HermitianMatrix, C64};
use crate::model::{Assignment, Constraint, LinearForm, LmiTerm, Sense, Value, VarId, VarKind};

/// The `idx`-th basis matrix of the real parameterization of `n × n`
/// Hermitian matrices.
pub fn hermitian_basis(n: usize, idx: usize) -> HermitianMatrix {
    let mut m = CMatrix::zeros(n, n);
    if idx < n {
        m[(idx, idx)] = C64::new(1.0, 0.0);
    } else {
        let (i, j, imag) = pair_of(n, idx);
        if imag {
            m[(i, j)] = C64::new(0.0, 1.0);
            m[(j, i)] = C64::new(0.0, -1.0);
        } else {
            m[(i, j)] = C64::new(1.0, 0.0);
            m[(j, i)] = C64::new(1.0, 0.0);
        }
    }
    HermitianMatrix::symmetrized(m)
}

fn pair_of(n: usize, idx: usize) -> (usize, usize, bool) {
    let mut r = idx - n;
    let imag = r % 2 == 1;
    r /= 2;
    for i in 0..n {
        let row = n - i - 1;
        if r < row {
            return (i, i + 1 + r, imag);
        }
        r -= row;
    }
    unreachable!("basis index out of range")
}

fn hermitian_params(x: &HermitianMatrix) -> Vec<f64> {
    let n = x.dim();
    let mut out = Vec::with_capacity(n * n);
    out.extend((0..n).map(|i| x.get(i, i).re));
    for i in 0..n {
        for j in i + 1..n {
            let v = x.get(i, j);
            out.push(v.re);
            out.push(v.im);
        }
    }
    out
}

fn hermitian_from_params(n: usize, p: &[f64]) -> HermitianMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(p[i], 0.0);
    }
    let mut idx = n;
    for i in 0..n {
        for j in i + 1..n {
            let v = C64::new(p[idx], p[idx + 1]);
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
            idx += 2;
        }
    }
    HermitianMatrix::symmetrized(m)
}

#[derive(Clone, Debug)]
pub(crate) struct LoweredLmi {
    pub name: String,
    pub constant: HermitianMatrix,
    pub terms: Vec<(usize, HermitianMatrix)>,
}

#[derive(Clone, Debug)]
pub(crate) struct LoweredRow {
    pub name: String,
    pub sense: Sense,
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

/// Program over normalized real parameters `y`, where a free variable's
/// physical parameters are `scale · y`.
#[derive(Clone, Debug)]
pub struct LoweredProgram {
    pub n_params: usize,
    offsets: Vec<Option<usize>>,
    param_scale: Vec<f64>,
    objective: Vec<(usize, f64)>,
    objective_norm: f64,
    objective_constant: f64,
    pub(crate) lmis: Vec<LoweredLmi>,
    pub(crate) rows: Vec<LoweredRow>,
}

struct Lowerer<'a> {
    program: &'a ConicProgram,
    offsets: Vec<Option<usize>>,
    param_scale: Vec<f64>,
}

impl<'a> Lowerer<'a> {
    fn new(program: &'a ConicProgram) -> Self {
        let mut offsets = Vec::with_capacity(program.vars.table.len());
        let mut param_scale = Vec::new();
        for (id, decl) in program.vars.table.iter() {
            if matches!(program.bindings[id.0], Binding::Free) {
                offsets.push(Some(param_scale.len()));
                let s = program.scales[id.0];
                let s = if s.is_finite() && s > 0.0 { s } else { 1.0 };
                param_scale.extend(std::iter::repeat_n(s, decl.kind.real_dim()));
            } else {
                offsets.push(None);
            }
        }
        Self {
            program,
            offsets,
            param_scale,
        }
    }

    fn dim_of(&self, id: VarId) -> usize {
        match self.program.vars.table.get(id).kind {
            VarKind::Hermitian { dim, .. } => dim,
            VarKind::Scalar { .. } => 1,
        }
    }

    /// Adds `coeff · Fᴴ X F` for the variable `id` into `(constant, terms)`.
    fn congruence(
        &self,
        id: VarId,
        factor: &CMatrix,
        coeff: f64,
        constant: &mut HermitianMatrix,
        terms: &mut BTreeMap<usize, HermitianMatrix>,
    ) {
        match &self.program.bindings[id.0] {
            Binding::Free => {
                let off = self.offsets[id.0].expect("free");
                let n = self.dim_of(id);
                for b in 0..n * n {
                    let m = hermitian_basis(n, b).congruence(factor) * (coeff * self.param_scale[off + b]);
                    accumulate(terms, off + b, m);
                }
            }
            Binding::Fixed(Value::Hermitian(x)) => *constant += &(&x.congruence(factor) * coeff),
            Binding::Fixed(Value::Scalar(_)) => unreachable!("validated"),
            Binding::RankOne { power, direction } => {
                let u = factor.adjoint() * direction;
                let m = HermitianMatrix::outer(&u) * coeff;
                self.scaled(*power, &m, constant, terms);
            }
        }
    }

    fn scaled(
        &self,
        id: VarId,
        matrix: &HermitianMatrix,
        constant: &mut HermitianMatrix,
        terms: &mut BTreeMap<usize, HermitianMatrix>,
    ) {
        match &self.program.bindings[id.0] {
            Binding::Free => {
                let off = self.offsets[id.0].expect("free");
                accumulate(terms, off, matrix * self.param_scale[off]);
            }
            Binding::Fixed(Value::Scalar(x)) => *constant += &(matrix * *x),
            _ => unreachable!("validated"),
        }
    }

    fn linear(&self, form: &LinearForm) -> (f64, BTreeMap<usize, f64>) {
        let mut constant = form.constant;
        let mut terms = BTreeMap::new();
        for (id, a) in &form.scalars {
            self.linear_scalar(*id, *a, &mut constant, &mut terms);
        }
        for (id, c) in &form.matrices {
            match &self.program.bindings[id.0] {
                Binding::Free => {
                    let off = self.offsets[id.0].expect("free");
                    let n = c.dim();
                    for b in 0..n * n {
                        let v = c.trace_product(&hermitian_basis(n, b)) * self.param_scale[off + b];
                        *terms.entry(off + b).or_insert(0.0) += v;
                    }
                }
                Binding::Fixed(Value::Hermitian(x)) => constant += c.trace_product(x),
                Binding::Fixed(Value::Scalar(_)) => unreachable!("validated"),
                Binding::RankOne { power, direction } => {
                    self.linear_scalar(*power, c.quadratic_form(direction), &mut constant, &mut terms)
                }
            }
        }
        (constant, terms)
    }

    fn linear_scalar(&self, id: VarId, a: f64, constant: &mut f64, terms: &mut BTreeMap<usize, f64>) {
        match &self.program.bindings[id.0] {
            Binding::Free => {
                let off = self.offsets[id.0].expect("free");
                *terms.entry(off).or_insert(0.0) += a * self.param_scale[off];
            }
            Binding::Fixed(Value::Scalar(x)) => *constant += a * x,
            _ => unreachable!("validated"),
        }
    }
}

fn accumulate(terms: &mut BTreeMap<usize, HermitianMatrix>, idx: usize, m: HermitianMatrix) {
    match terms.get_mut(&idx) {
        Some(acc) => *acc += &m,
        None => {
            terms.insert(idx, m);
        }
    }
}

/// Diagonal congruence bringing the largest diagonal contribution of every
/// row to one.
fn condition_lmi(name: String, constant: HermitianMatrix, terms: BTreeMap<usize, HermitianMatrix>) -> LoweredLmi {
    let n = constant.dim();
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let m = terms
                .values()
                .map(|t| t.get(i, i).re.abs())
                .fold(constant.get(i, i).re.abs(), f64::max);
            if m > 0.0 && m.is_finite() {
                1.0 / m.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    LoweredLmi {
        name,
        constant: constant.scale_diagonal(&d),
        terms: terms.into_iter().map(|(i, m)| (i, m.scale_diagonal(&d))).collect(),
    }
}

fn condition_row(name: String, sense: Sense, constant: f64, terms: BTreeMap<usize, f64>) -> LoweredRow {
    let norm = terms.values().map(|a| a.abs()).fold(constant.abs(), f64::max);
    let norm = if norm > 0.0 && norm.is_finite() { norm } else { 1.0 };
    LoweredRow {
        name,
        sense,
        constant: constant / norm,
        terms: terms.into_iter().filter(|(_, a)| *a != 0.0).map(|(i, a)| (i, a / norm)).collect(),
    }
}

pub(crate) fn lower(program: &ConicProgram) -> LoweredProgram {
    let lw = Lowerer::new(program);
    let mut lmis = Vec::new();
    let mut rows = Vec::new();

    for c in &program.constraints {
        match c {
            Constraint::Lmi(block) => {
                let mut constant = block.constant.clone();
                let mut terms = BTreeMap::new();
                for t in &block.terms {
                    match t {
                        LmiTerm::Scaled { var, matrix } => lw.scaled(*var, matrix, &mut constant, &mut terms),
                        LmiTerm::Congruence { var, factor, coeff } => {
                            lw.congruence(*var, factor, *coeff, &mut constant, &mut terms)
                        }
                    }
                }
                lmis.push(condition_lmi(block.name.clone(), constant, terms));
            }
            Constraint::Affine(a) => {
                let (constant, terms) = lw.linear(&a.form);
                rows.push(condition_row(a.name.clone(), a.sense, constant, terms));
            }
        }
    }

    // Variable domains.
    for (id, decl) in program.vars.table.iter() {
        let binding = &program.bindings[id.0];
        match (decl.kind, binding) {
            (VarKind::Scalar { nonneg: true }, Binding::Free) => {
                let off = lw.offsets[id.0].expect("free");
                rows.push(LoweredRow {
                    name: format!("{} >= 0", decl.name),
                    sense: Sense::NonNegative,
                    constant: 0.0,
                    terms: vec![(off, 1.0)],
                });
            }
            (VarKind::Scalar { nonneg: true }, Binding::Fixed(Value::Scalar(x))) => {
                rows.push(LoweredRow {
                    name: format!("{} >= 0", decl.name),
                    sense: Sense::NonNegative,
                    constant: x / program.scales[id.0].max(f64::MIN_POSITIVE),
                    terms: Vec::new(),
                });
            }
            (VarKind::Hermitian { dim, psd: true }, Binding::Free) => {
                let off = lw.offsets[id.0].expect("free");
                let terms = (0..dim * dim)
                    .map(|b| (off + b, hermitian_basis(dim, b) * lw.param_scale[off + b]))
                    .collect();
                lmis.push(condition_lmi(format!("{} psd", decl.name), HermitianMatrix::zeros(dim), terms));
            }
            (VarKind::Hermitian { psd: true, .. }, Binding::Fixed(Value::Hermitian(x))) => {
                let s = program.scales[id.0].max(f64::MIN_POSITIVE);
                lmis.push(LoweredLmi {
                    name: format!("{} psd", decl.name),
                    constant: x * (1.0 / s),
                    terms: Vec::new(),
                });
            }
            _ => {}
        }
    }

    let (objective_constant, obj_terms) = lw.linear(&program.objective);
    let objective_norm = obj_terms.values().map(|a| a.abs()).fold(0.0, f64::max);
    let objective_norm = if objective_norm > 0.0 { objective_norm } else { 1.0 };
    LoweredProgram {
        n_params: lw.param_scale.len(),
        offsets: lw.offsets,
        param_scale: lw.param_scale,
        objective: obj_terms.into_iter().map(|(i, a)| (i, a / objective_norm)).collect(),
        objective_norm,
        objective_constant,
        lmis,
        rows,
    }
}

impl LoweredProgram {
    pub fn objective_to_physical(&self, normalized: f64) -> f64 {
        normalized * self.objective_norm + self.objective_constant
    }

    /// Real-cone form for a backend. Blocks without free parameters are
    /// left out (they are only verified); `1 × 1` blocks become scalar rows.
    pub fn to_real_cone(&self) -> RealConicProblem {
        let mut objective = vec![0.0; self.n_params];
        for &(i, a) in &self.objective {
            objective[i] = a;
        }
        let mut zero = Vec::new();
        let mut nonneg = Vec::new();
        let mut psd = Vec::new();
        for r in self.rows.iter().filter(|r| !r.terms.is_empty()) {
            let row = SparseRow {
                constant: r.constant,
                terms: r.terms.clone(),
            };
            match r.sense {
                Sense::NonNegative => nonneg.push(row),
                Sense::Zero => zero.push(row),
            }
        }
        for l in self.lmis.iter().filter(|l| !l.terms.is_empty()) {
            if l.constant.dim() == 1 {
                nonneg.push(SparseRow {
                    constant: l.constant.get(0, 0).re,
                    terms: l.terms.iter().map(|(i, m)| (*i, m.get(0, 0).re)).collect(),
                });
            } else {
                psd.push(PsdBlock {
                    constant: real_embed(&l.constant),
                    terms: l.terms.iter().map(|(i, m)| (*i, real_embed(m))).collect(),
                });
            }
        }
        RealConicProblem {
            n: self.n_params,
            objective,
            zero,
            nonneg,
            psd,
        }
    }

    fn lmi_value(l: &LoweredLmi, y: &[f64]) -> HermitianMatrix {
        let mut acc = l.constant.clone();
        for (i, m) in &l.terms {
            acc += &(m * y[*i]);
        }
        acc
    }

    /// Per-constraint violations in normalized units, by name.
    pub fn violations(&self, y: &[f64]) -> Vec<(String, f64)> {
        let mut out = Vec::with_capacity(self.lmis.len() + self.rows.len());
        for l in &self.lmis {
            let v = Self::lmi_value(l, y);
            let min = eig_hermitian(&v).values.last().copied().unwrap_or(0.0);
            out.push((l.name.clone(), (-min).max(0.0)));
        }
        for r in &self.rows {
            let v = r.constant + r.terms.iter().map(|(i, a)| a * y[*i]).sum::<f64>();
            let viol = match r.sense {
                Sense::NonNegative => (-v).max(0.0),
                Sense::Zero => v.abs(),
            };
            out.push((r.name.clone(), viol));
        }
        out
    }

    pub fn max_violation(&self, y: &[f64]) -> f64 {
        self.violations(y).into_iter().map(|(_, v)| v).fold(0.0, f64::max)
    }

    /// Model values for normalized parameters `y`.
    pub fn assignment_from(&self, program: &ConicProgram, y: &[f64]) -> Assignment {
        let table = &program.vars.table;
        let phys: Vec<f64> = y.iter().zip(&self.param_scale).map(|(a, s)| a * s).collect();
        let mut out = Assignment::zeros(table);
        for (id, decl) in table.iter() {
            let value = match (&program.bindings[id.0], decl.kind) {
                (Binding::Free, VarKind::Scalar { .. }) => Value::Scalar(phys[self.offsets[id.0].expect("free")]),
                (Binding::Free, VarKind::Hermitian { dim, .. }) => {
                    let off = self.offsets[id.0].expect("free");
                    Value::Hermitian(hermitian_from_params(dim, &phys[off..off + dim * dim]))
                }
                (Binding::Fixed(v), _) => v.clone(),
                (Binding::RankOne { .. }, _) => continue,
            };
            out.set(id, value);
        }
        for (id, _) in table.iter() {
            if let Binding::RankOne { power, direction } = &program.bindings[id.0] {
                let p = out.scalar(*power);
                out.set(id, Value::Hermitian(HermitianMatrix::outer(direction) * p));
            }
        }
        out
    }

    /// Normalized parameters of the free variables in `values`.
    pub fn params_from(&self, program: &ConicProgram, values: &Assignment) -> Vec<f64> {
        let mut y = vec![0.0; self.n_params];
        for (id, _) in program.vars.table.iter() {
            let Some(off) = self.offsets[id.0] else { continue };
            let phys = match &values.0[id.0] {
                Value::Scalar(x) => vec![*x],
                Value::Hermitian(h) => hermitian_params(h),
            };
            for (i, x) in phys.into_iter().enumerate() {
                y[off + i] = x / self.param_scale[off + i];
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_round_trip() {
        let n = 4;
        let p: Vec<f64> = (0..n * n).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = hermitian_from_params(n, &p);
        assert_eq!(hermitian_params(&x), p);
        let mut acc = HermitianMatrix::zeros(n);
        for (b, &v) in p.iter().enumerate() {
            acc += &(hermitian_basis(n, b) * v);
        }
        assert!((&acc - &x).frobenius_norm() < 1e-15);
    }

    #[test]
    fn basis_is_orthogonal() {
        let n = 3;
        for a in 0..n * n {
            for b in 0..n * n {
                let ip = hermitian_basis(n, a).trace_product(&hermitian_basis(n, b));
                let want = if a != b { 0.0 } else if a < n { 1.0 } else { 2.0 };
                assert!((ip - want).abs() < 1e-15);
            }
        }
    }
}
