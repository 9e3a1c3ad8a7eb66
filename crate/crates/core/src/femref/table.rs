use std::io::{self, Write};
use std::time::{Duration, Instant};

use super::{henon_heiles_system, shift_invert_eigs, EigenOptions};
use crate::error::Result;

/// Element counts per axis of the standard refinement study.
pub const TABLE_MESHES: [usize; 6] = [5, 7, 11, 16, 21, 29];

#[derive(Debug, Clone, PartialEq)]
pub struct TableColumn {
    pub mesh: usize,
    /// Nodes of the assembled system, boundary included.
    pub unknowns: usize,
    /// Lowest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Largest `‖Kψ − εMψ‖ / ‖Kψ‖` over the column.
    pub max_residual: f64,
    pub wall_time: Duration,
}

/// Hénon–Heiles eigenvalues for each mesh size.
pub fn table1(meshes: &[usize], options: &EigenOptions) -> Result<Vec<TableColumn>> {
    meshes
        .iter()
        .map(|&n| {
            let start = Instant::now();
            let (mesh, sys) = henon_heiles_system(n)?;
            let report = shift_invert_eigs(&sys, options)?;
            Ok(TableColumn {
                mesh: n,
                unknowns: mesh.n_nodes(),
                eigenvalues: report.values(),
                max_residual: report.pairs.iter().fold(0.0, |m, p| m.max(p.residual)),
                wall_time: start.elapsed(),
            })
        })
        .collect()
}

/// One row per level, one column per mesh (`level,5x5,7x7,…`).
pub fn write_table_csv<W: Write>(columns: &[TableColumn], mut w: W) -> io::Result<()> {
    write!(w, "level")?;
    for c in columns {
        write!(w, ",{0}x{0}", c.mesh)?;
    }
    writeln!(w)?;
    let rows = columns
        .iter()
        .map(|c| c.eigenvalues.len())
        .max()
        .unwrap_or(0);
    for r in 0..rows {
        write!(w, "{}", r + 1)?;
        for c in columns {
            match c.eigenvalues.get(r) {
                Some(v) => write!(w, ",{v:.16e}")?,
                None => write!(w, ",")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Increasing indices `j_1 < … < j_r` into `computed` that minimize
/// `max_i |computed[j_i] − reference[i]|`. `None` when `computed` is shorter.
pub fn match_ordered(computed: &[f64], reference: &[f64]) -> Option<Vec<usize>> {
    let (n, r) = (computed.len(), reference.len());
    if r > n {
        return None;
    }
    if r == 0 {
        return Some(Vec::new());
    }
    // cost[i][j]: best worst-deviation matching reference[..=i] with reference[i] ↦ computed[j]
    let mut cost = vec![vec![f64::INFINITY; n]; r];
    let mut from = vec![vec![usize::MAX; n]; r];
    for j in 0..n {
        cost[0][j] = (computed[j] - reference[0]).abs();
    }
    for i in 1..r {
        for j in i..n {
            let d = (computed[j] - reference[i]).abs();
            for p in i - 1..j {
                let c = cost[i - 1][p].max(d);
                if c < cost[i][j] {
                    cost[i][j] = c;
                    from[i][j] = p;
                }
            }
        }
    }
    let mut j = (r - 1..n).min_by(|&a, &b| cost[r - 1][a].total_cmp(&cost[r - 1][b]))?;
    let mut out = vec![0; r];
    for i in (0..r).rev() {
        out[i] = j;
        j = from[i][j];
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_matching_skips_extras() {
        let computed = [1.0, 2.0, 2.01, 3.0, 3.5, 4.0];
        let m = match_ordered(&computed, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, vec![0, 1, 3, 5]);
        assert_eq!(match_ordered(&computed, &[0.0; 7]), None);
        assert_eq!(match_ordered(&[1.0], &[]), Some(vec![]));
    }

    #[test]
    fn csv_has_row_per_level() {
        let cols = vec![
            TableColumn {
                mesh: 5,
                unknowns: 121,
                eigenvalues: vec![1.0, 2.0],
                max_residual: 0.0,
                wall_time: Duration::ZERO,
            },
            TableColumn {
                mesh: 7,
                unknowns: 225,
                eigenvalues: vec![1.5],
                max_residual: 0.0,
                wall_time: Duration::ZERO,
            },
        ];
        let mut buf = Vec::new();
        write_table_csv(&cols, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "level,5x5,7x7");
        assert!(lines[2].ends_with(','));
        assert_eq!(lines.len(), 3);
    }
}
