//! Line-oriented text dump of a constraint system for external solvers.
//!
//! ```text
//! # losr-system v1
//! columns <n>
//! block <b> offset <o> coords <c> label <label>
//! <row> <tag> <column> <coefficient>
//! <row> <tag> rhs <value>
//! ```
//!
//! Column `o + c` is coordinate `c` of block `b`; column `o` (coordinate 0)
//! is the constant 1 and is always zero-coefficient in equality rows. Tags
//! `C1`, `C2+` and `IND` are equalities `Σ coef·col = rhs`. Tag `GE` rows are
//! the nonnegativity of one block entry, `Σ coef·col ≥ 0`, and use the
//! constant column for their constant term.

use std::io::{self, Write};

use super::{ConstraintSystem, EqRow};
use crate::index;
use crate::scalar::Scalar;

pub fn write_system<T: Scalar, W: Write>(sys: &ConstraintSystem<T>, out: &mut W) -> io::Result<()> {
    let mut offsets = Vec::with_capacity(sys.blocks.len());
    let mut total = 0;
    for b in &sys.blocks {
        offsets.push(total);
        total += b.n_coords();
    }
    writeln!(out, "# losr-system v1")?;
    writeln!(out, "columns {total}")?;
    for (i, b) in sys.blocks.iter().enumerate() {
        writeln!(
            out,
            "block {i} offset {} coords {} label {} {}",
            offsets[i],
            b.n_coords(),
            b.label,
            b.inflation.wiring_label().replace(' ', "_")
        )?;
    }
    let col = |n: super::Node| offsets[n.block] + n.coord;
    for (r, row) in sys.rows.iter().enumerate() {
        let tag = row.origin();
        match row {
            EqRow::Identify { left, right, .. } => {
                writeln!(out, "{r} {tag} {} 1", col(*left))?;
                writeln!(out, "{r} {tag} {} -1", col(*right))?;
                writeln!(out, "{r} {tag} rhs 0")?;
            }
            EqRow::Pin { node, p_coord, .. } => {
                writeln!(out, "{r} {tag} {} 1", col(*node))?;
                writeln!(out, "{r} {tag} rhs {}", sys.p_value(*p_coord))?;
            }
            EqRow::Fix { node, value, .. } => {
                writeln!(out, "{r} {tag} {} 1", col(*node))?;
                writeln!(out, "{r} {tag} rhs {value}")?;
            }
        }
    }
    let mut r = sys.rows.len();
    for (bi, b) in sys.blocks.iter().enumerate() {
        let rin: Vec<usize> = b.layout.specs().iter().map(|s| s.inputs).collect();
        let rout: Vec<usize> = b.layout.specs().iter().map(|s| s.outputs).collect();
        for x in index::tuples(&rin) {
            for a in index::tuples(&rout) {
                for (c, k) in b.layout.expand_entry(&x, &a) {
                    writeln!(out, "{r} GE {} {k}", offsets[bi] + c)?;
                }
                r += 1;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::Behavior;
    use crate::constraints::{compile, DEFAULT_MAX_VARIABLES};
    use crate::network::{canonical_scenario, Inflation, PartySpec};

    #[test]
    fn dump_is_parseable() {
        let s = canonical_scenario(3, (0..3).map(|i| PartySpec::new(format!("P{i}"), 1, 2)).collect()).unwrap();
        let p: Behavior<f64> = Behavior::uniform(s.parties().to_vec());
        let sys = compile(&s, &p, &[Inflation::identity(s.clone(), 2)], DEFAULT_MAX_VARIABLES).unwrap();
        let mut buf = Vec::new();
        write_system(&sys, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut ge_rows = std::collections::BTreeSet::new();
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("columns") && !l.starts_with("block")) {
            let f: Vec<&str> = line.split_whitespace().collect();
            assert_eq!(f.len(), 4, "{line}");
            f[0].parse::<usize>().unwrap();
            if f[1] == "GE" {
                ge_rows.insert(f[0].to_string());
            }
        }
        assert_eq!(ge_rows.len(), sys.n_variables());
    }
}
