use std::io::{self, Write};

use super::{LinearProgram, RowSense};

/// Write `lp` in CPLEX LP text format, one term per line for easy diffing.
///
/// Names are sanitised to the LP-format character set (`[`, `]`, `,` and
/// `-` become `_`), so the output is meant for inspection and for loading
/// into another solver, not for round-tripping names.
pub fn write_lp_format<W: Write>(lp: &LinearProgram, mut out: W) -> io::Result<()> {
    let name = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
            .collect()
    };
    writeln!(out, "\\ {} variables, {} rows", lp.num_vars(), lp.num_rows())?;
    writeln!(out, "Minimize")?;
    writeln!(out, " obj:")?;
    for v in lp.vars.iter().filter(|v| v.cost != 0.0) {
        writeln!(out, "  {:+e} {}", v.cost, name(&v.name))?;
    }
    writeln!(out, "Subject To")?;
    for row in &lp.rows {
        writeln!(out, " {}:", name(&row.name))?;
        for &(j, a) in &row.coeffs {
            writeln!(out, "  {:+e} {}", a, name(&lp.vars[j].name))?;
        }
        let op = match row.sense {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        };
        writeln!(out, "  {op} {:e}", row.rhs)?;
    }
    writeln!(out, "Bounds")?;
    for v in &lp.vars {
        let n = name(&v.name);
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => writeln!(out, " {n} free")?,
            (true, true) => writeln!(out, " {:e} <= {n} <= {:e}", v.lower, v.upper)?,
            (true, false) => writeln!(out, " {n} >= {:e}", v.lower)?,
            (false, true) => writeln!(out, " -inf <= {n} <= {:e}", v.upper)?,
        }
    }
    writeln!(out, "End")
}
