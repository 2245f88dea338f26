//! Plain-text dump of a program for cross-checking in an external tool.
//!
//! ```text
//! program <label>
//! variables <count>
//! var <id> <name> scalar <nonneg|free> <binding>
//! var <id> <name> hermitian <dim> <psd|free> <binding>
//! objective
//!   const <c>
//!   scalar <id> <coef>
//!   matrix <id> <dim>
//!     <re> <im> ...          one line per row
//! constraint lmi <name> <dim>
//!   const
//!     <re> <im> ...
//!   scaled <id>
//!     <re> <im> ...
//!   congruence <id> <coef> <rows> <cols>
//!     <re> <im> ...
//! constraint affine <name> <ge|eq>
//!   (same body as objective)
//! end
//! ```
//!
//! A binding is `free`, `fixed` followed by the value, or `rank1 <power-id>`
//! followed by the direction. Numbers use 17 significant digits.

use std::io::{self, Write};

use super::{Binding, ConicProgram};
use crate::hermitian::{CMatrix, HermitianMatrix};
use crate::model::{Constraint, LinearForm, LmiTerm, Sense, Value, VarKind};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_complex_rows(w: &mut dyn Write, m: &CMatrix, indent: &str) -> io::Result<()> {
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| format!("{} {}", num(m[(r, c)].re), num(m[(r, c)].im)))
            .collect();
        writeln!(w, "{indent}{}", row.join(" "))?;
    }
    Ok(())
}

fn write_hermitian(w: &mut dyn Write, m: &HermitianMatrix, indent: &str) -> io::Result<()> {
    write_complex_rows(w, m.as_matrix(), indent)
}

fn write_form(w: &mut dyn Write, f: &LinearForm) -> io::Result<()> {
    writeln!(w, "  const {}", num(f.constant))?;
    for (id, a) in &f.scalars {
        writeln!(w, "  scalar {} {}", id.0, num(*a))?;
    }
    for (id, c) in &f.matrices {
        writeln!(w, "  matrix {} {}", id.0, c.dim())?;
        write_hermitian(w, c, "    ")?;
    }
    Ok(())
}

pub fn write_program(program: &ConicProgram, w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "program {}", program.label)?;
    writeln!(w, "variables {}", program.vars.table.len())?;
    for (id, decl) in program.vars.table.iter() {
        let kind = match decl.kind {
            VarKind::Scalar { nonneg } => format!("scalar {}", if nonneg { "nonneg" } else { "free" }),
            VarKind::Hermitian { dim, psd } => format!("hermitian {dim} {}", if psd { "psd" } else { "free" }),
        };
        match &program.bindings[id.0] {
            Binding::Free => writeln!(w, "var {} {} {kind} free", id.0, decl.name)?,
            Binding::Fixed(Value::Scalar(x)) => writeln!(w, "var {} {} {kind} fixed {}", id.0, decl.name, num(*x))?,
            Binding::Fixed(Value::Hermitian(h)) => {
                writeln!(w, "var {} {} {kind} fixed", id.0, decl.name)?;
                write_hermitian(w, h, "  ")?;
            }
            Binding::RankOne { power, direction } => {
                writeln!(w, "var {} {} {kind} rank1 {}", id.0, decl.name, power.0)?;
                write_complex_rows(w, &CMatrix::from_column_slice(direction.len(), 1, direction.as_slice()), "  ")?;
            }
        }
    }
    writeln!(w, "objective")?;
    write_form(w, &program.objective)?;
    for c in &program.constraints {
        match c {
            Constraint::Lmi(b) => {
                writeln!(w, "constraint lmi {} {}", b.name, b.dim())?;
                writeln!(w, "  const")?;
                write_hermitian(w, &b.constant, "    ")?;
                for t in &b.terms {
                    match t {
                        LmiTerm::Scaled { var, matrix } => {
                            writeln!(w, "  scaled {}", var.0)?;
                            write_hermitian(w, matrix, "    ")?;
                        }
                        LmiTerm::Congruence { var, factor, coeff } => {
                            writeln!(
                                w,
                                "  congruence {} {} {} {}",
                                var.0,
                                num(*coeff),
                                factor.nrows(),
                                factor.ncols()
                            )?;
                            write_complex_rows(w, factor, "    ")?;
                        }
                    }
                }
            }
            Constraint::Affine(a) => {
                let sense = match a.sense {
                    Sense::NonNegative => "ge",
                    Sense::Zero => "eq",
                };
                writeln!(w, "constraint affine {} {sense}", a.name)?;
                write_form(w, &a.form)?;
            }
        }
    }
    writeln!(w, "end")
}
