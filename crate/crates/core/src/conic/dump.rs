//! Plain-text sparse triplet dump of an assembled problem.
//!
//! One line per nonzero upper-triangle entry:
//! `constraint row col var coef`, where `var = 0` is the constant term and
//! `var = k >= 1` is the `k`-th scalar unknown. Variable cones and the
//! objective follow as comment lines.

use std::io::Write;

use super::compile::{layout, raw_blocks};
use super::model::{ConicProblem, ConstraintKind};

pub fn write_triplets<W: Write>(problem: &ConicProblem, mut out: W) -> std::io::Result<()> {
    let (offsets, m) = layout(problem);
    writeln!(out, "# unknowns {m}")?;
    for (i, v) in problem.variables.iter().enumerate() {
        writeln!(
            out,
            "# var {} {:?} dim {} unknowns {}..{}",
            v.name,
            v.kind,
            v.dim,
            offsets[i] + 1,
            offsets[i] + v.n_entries()
        )?;
    }
    for o in &problem.objective {
        let v = problem.variable(o.var);
        for (k, (p, q)) in v.entries().into_iter().enumerate() {
            let c = o.coef[(p, q)];
            if c != 0.0 {
                let k = offsets[o.var.index()] + k + 1;
                writeln!(out, "# objective {k} {}", if p == q { c } else { 2.0 * c })?;
            }
        }
    }
    let blocks = raw_blocks(problem, &offsets);
    let n_user = problem.constraints.len();
    for (ci, (kind, blk)) in blocks.iter().enumerate() {
        if ci >= n_user {
            // PSD variable cones are listed above
            break;
        }
        let tag = match kind {
            ConstraintKind::Nsd => "nsd",
            ConstraintKind::Zero => "zero",
        };
        writeln!(out, "# constraint {} {tag} size {}", ci + 1, blk.dim)?;
        let mut emit = |var: usize, mat: &nalgebra::DMatrix<f64>| -> std::io::Result<()> {
            for r in 0..blk.dim {
                for c in r..blk.dim {
                    let v = mat[(r, c)];
                    if v.abs() > 1e-300 {
                        writeln!(out, "{} {} {} {} {:e}", ci + 1, r + 1, c + 1, var, v)?;
                    }
                }
            }
            Ok(())
        };
        emit(0, &(-&blk.c))?;
        for k in 0..blk.vars.len() {
            emit(blk.vars[k] + 1, &blk.dense(k))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::model::{AffineExpr, VarKind};
    use nalgebra::DMatrix;

    #[test]
    fn dump_lists_every_nonzero() {
        let mut p = ConicProblem::new();
        let t = p.add_scalar("t");
        let x = p.add_var("X", VarKind::Nonneg, 2);
        let mut e = AffineExpr::new(DMatrix::from_diagonal_element(2, 2, 2.0));
        e.add_scalar(t, -DMatrix::identity(2, 2));
        let eye = DMatrix::identity(2, 2);
        e.add_congruence(x, eye.clone(), eye, 0.5);
        p.add_nsd(e);
        p.minimize_scalar(t, 1.0);
        let mut buf = Vec::new();
        write_triplets(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        // constant: 2 diagonal; t: 2 diagonal; X: 3 unknowns, one entry each
        assert_eq!(data.len(), 7, "{text}");
        assert!(data.contains(&"1 1 2 3 1e0"), "{text}");
    }
}
