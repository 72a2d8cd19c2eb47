//! Line-oriented lattice file format:
//!
//! ```text
//! torus-code v1
//! darts N
//! <id> <opposite> <next> <vertex> <face> <edge>     (N lines)
//! initial_qubits K
//! ```

use std::fmt::Write;

use super::{CodeLattice, Dart, LatticeError};

const HEADER: &str = "torus-code v1";

impl CodeLattice {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{HEADER}").unwrap();
        writeln!(out, "darts {}", self.darts().len()).unwrap();
        for (i, d) in self.darts().iter().enumerate() {
            writeln!(out, "{i} {} {} {} {} {}", d.opposite, d.next, d.vertex, d.face, d.edge).unwrap();
        }
        writeln!(out, "initial_qubits {}", self.n_initial_qubits()).unwrap();
        out
    }

    /// Parses the text format. Only the torus-map structure is enforced;
    /// call [`CodeLattice::check_code_constraints`] for the code bounds.
    pub fn from_text(text: &str) -> Result<CodeLattice, LatticeError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let err = |line: usize, message: String| LatticeError::Parse { line, message };
        let mut next_line = |what: &str| {
            lines
                .next()
                .ok_or_else(|| err(0, format!("unexpected end of file, expected {what}")))
        };

        let (ln, header) = next_line("header")?;
        if header != HEADER {
            return Err(err(ln, format!("expected header `{HEADER}`")));
        }
        let (ln, count) = next_line("dart count")?;
        let n: usize = keyed(count, "darts").ok_or_else(|| err(ln, "expected `darts N`".into()))?;
        let mut darts = Vec::with_capacity(n);
        for i in 0..n {
            let (ln, line) = next_line("dart record")?;
            let fields: Vec<u32> = line
                .split_whitespace()
                .map(|t| t.parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|e| err(ln, format!("bad dart record: {e}")))?;
            let [id, opposite, next, vertex, face, edge] = fields[..] else {
                return Err(err(ln, "dart record needs 6 fields".into()));
            };
            if id as usize != i {
                return Err(err(ln, format!("dart ids must be consecutive, got {id}, expected {i}")));
            }
            darts.push(Dart {
                opposite,
                next,
                vertex,
                face,
                edge,
            });
        }
        let (ln, tail) = next_line("initial_qubits")?;
        let k: usize = keyed(tail, "initial_qubits").ok_or_else(|| err(ln, "expected `initial_qubits K`".into()))?;
        if let Some((ln, _)) = lines.next() {
            return Err(err(ln, "trailing content".into()));
        }
        CodeLattice::from_darts_unconstrained(darts, k)
    }
}

fn keyed(line: &str, key: &str) -> Option<usize> {
    let mut parts = line.split_whitespace();
    (parts.next()? == key).then_some(())?;
    let value = parts.next()?.parse().ok()?;
    parts.next().is_none().then_some(value)
}
