//! Sparse SDPA text format.
//!
//! The problem `min c'y` s.t. `C_j + Σ y_v A_{j,v} ⪰ 0`, `a_e'y = b_e` is
//! written as `F_0 = -C_j`, `F_v = A_{j,v}` per block. Equalities go into one
//! trailing diagonal block holding `a_e'y - b_e` and `b_e - a_e'y` for every
//! `e`. Variable names other than the defaults `y0, y1, ...` are stored in
//! leading `*name <index> <label>` comment lines.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ncfair_core::sdp::{BlockEntry, LinearEquality, PsdBlock, SdpProblem};

use crate::error::{IoError, Result};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_sdpa_string(prob: &SdpProblem) -> Result<String> {
    if prob.blocks.is_empty() {
        return Err(ncfair_core::Error::invalid("SDPA export needs at least one PSD block").into());
    }
    let prob = SdpProblem::new(
        prob.num_vars,
        prob.objective.clone(),
        prob.blocks.clone(),
        prob.equalities.clone(),
        prob.variable_names.clone(),
    )?;
    let mut out = String::new();
    let defaults = SdpProblem::default_names(prob.num_vars);
    for (i, (name, default)) in prob.variable_names.iter().zip(&defaults).enumerate() {
        if name != default {
            if name.chars().any(|c| c == '\n' || c == '\r') {
                return Err(ncfair_core::Error::invalid(format!(
                    "variable name {i} contains a line break"
                ))
                .into());
            }
            writeln!(out, "*name {i} {name}").unwrap();
        }
    }
    let n_eq = prob.equalities.len();
    let n_blocks = prob.blocks.len() + usize::from(n_eq > 0);
    writeln!(out, "{}", prob.num_vars).unwrap();
    writeln!(out, "{n_blocks}").unwrap();
    let mut dims: Vec<String> = prob.blocks.iter().map(|b| b.dim.to_string()).collect();
    if n_eq > 0 {
        dims.push(format!("-{}", 2 * n_eq));
    }
    writeln!(out, "{}", dims.join(" ")).unwrap();
    let mut c = vec![0.0; prob.num_vars];
    for &(v, x) in &prob.objective {
        c[v] = x;
    }
    writeln!(out, "{}", c.iter().map(|&x| num(x)).collect::<Vec<_>>().join(" ")).unwrap();

    // (matno, block, i, j, value), 1-based block and indices.
    let mut lines: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for (j, block) in prob.blocks.iter().enumerate() {
        for e in &block.entries {
            if e.constant != 0.0 {
                lines.push((0, j + 1, e.row + 1, e.col + 1, -e.constant));
            }
            for &(v, x) in &e.coeffs {
                lines.push((v + 1, j + 1, e.row + 1, e.col + 1, x));
            }
        }
    }
    if n_eq > 0 {
        let blk = prob.blocks.len() + 1;
        for (e, eq) in prob.equalities.iter().enumerate() {
            let (p, m) = (2 * e + 1, 2 * e + 2);
            if eq.rhs != 0.0 {
                lines.push((0, blk, p, p, eq.rhs));
                lines.push((0, blk, m, m, -eq.rhs));
            }
            for &(v, x) in &eq.coeffs {
                lines.push((v + 1, blk, p, p, x));
                lines.push((v + 1, blk, m, m, -x));
            }
        }
    }
    lines.sort_by_key(|l| (l.0, l.1, l.2, l.3));
    for (mat, blk, i, j, x) in lines {
        writeln!(out, "{mat} {blk} {i} {j} {}", num(x)).unwrap();
    }
    Ok(out)
}

pub fn export_sparse_sdpa(prob: &SdpProblem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = to_sdpa_string(prob)?;
    fs::write(path, text).map_err(|e| IoError::io(path, e))
}

pub fn import_sparse_sdpa(path: impl AsRef<Path>) -> Result<SdpProblem> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    from_sdpa_str(&text)
}

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
        .filter(|t| !t.is_empty())
}

fn parse_tok<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| IoError::parse(line, format!("invalid {what} '{tok}'")))
}

pub fn from_sdpa_str(text: &str) -> Result<SdpProblem> {
    let mut names: Vec<(usize, usize, String)> = Vec::new();
    let mut body = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("*name ") {
            let (i, name) = rest
                .split_once(' ')
                .ok_or_else(|| IoError::parse(lineno, "expected '*name <index> <label>'"))?;
            names.push((lineno, parse_tok(i, lineno, "variable index")?, name.to_string()));
        } else if line.is_empty() || line.starts_with('*') || line.starts_with('"') {
            continue;
        } else {
            body.push((lineno, line));
        }
    }
    let mut it = body.into_iter();
    let mut header = |what: &str| {
        it.next()
            .ok_or_else(|| IoError::parse(text.lines().count() + 1, format!("missing {what}")))
    };

    let (l, line) = header("variable count")?;
    let num_vars: usize = parse_tok(single(line, l)?, l, "variable count")?;
    let (l, line) = header("block count")?;
    let n_blocks: usize = parse_tok(single(line, l)?, l, "block count")?;
    let (l, line) = header("block sizes")?;
    let dims: Vec<i64> = tokens(line)
        .map(|t| parse_tok(t, l, "block size"))
        .collect::<Result<_>>()?;
    if dims.len() != n_blocks {
        return Err(IoError::parse(l, format!("expected {n_blocks} block sizes, found {}", dims.len())));
    }
    if dims.contains(&0) {
        return Err(IoError::parse(l, "block size 0"));
    }
    let diag: Vec<usize> = dims
        .iter()
        .enumerate()
        .filter(|(_, &d)| d < 0)
        .map(|(i, _)| i)
        .collect();
    let eq_block = match diag.as_slice() {
        [] => None,
        [i] if *i == dims.len() - 1 && dims[*i] % 2 == 0 => Some(*i),
        _ => {
            return Err(IoError::parse(
                l,
                "only a trailing diagonal block of even size (the equality block) is supported",
            ))
        }
    };
    let (l, line) = header("objective")?;
    let c: Vec<f64> = tokens(line)
        .map(|t| parse_tok(t, l, "objective coefficient"))
        .collect::<Result<_>>()?;
    if c.len() != num_vars {
        return Err(IoError::parse(l, format!("expected {num_vars} objective coefficients, found {}", c.len())));
    }

    let n_psd = eq_block.unwrap_or(dims.len());
    let mut blocks: Vec<Vec<BlockEntry>> = vec![Vec::new(); n_psd];
    let n_eq = eq_block.map_or(0, |b| (-dims[b]) as usize / 2);
    // Diagonal entries of the equality block: (constant, coefficients).
    let mut diag_rows: Vec<(f64, Vec<(usize, f64)>)> = vec![(0.0, Vec::new()); 2 * n_eq];
    for (l, line) in it {
        let t: Vec<&str> = tokens(line).collect();
        if t.len() != 5 {
            return Err(IoError::parse(l, format!("expected 5 fields, found {}", t.len())));
        }
        let mat: usize = parse_tok(t[0], l, "matrix number")?;
        let blk: usize = parse_tok(t[1], l, "block number")?;
        let i: usize = parse_tok(t[2], l, "row index")?;
        let j: usize = parse_tok(t[3], l, "column index")?;
        let x: f64 = parse_tok(t[4], l, "value")?;
        if !x.is_finite() {
            return Err(IoError::parse(l, "value is not finite"));
        }
        if mat > num_vars {
            return Err(IoError::parse(l, format!("matrix number {mat} exceeds {num_vars}")));
        }
        if blk == 0 || blk > dims.len() {
            return Err(IoError::parse(l, format!("block number {blk} out of range")));
        }
        let dim = dims[blk - 1].unsigned_abs() as usize;
        if i == 0 || j == 0 || i > dim || j > dim {
            return Err(IoError::parse(l, format!("index ({i}, {j}) outside block of size {dim}")));
        }
        let (i, j) = if i <= j { (i - 1, j - 1) } else { (j - 1, i - 1) };
        if Some(blk - 1) == eq_block {
            if i != j {
                return Err(IoError::parse(l, "off-diagonal entry in a diagonal block"));
            }
            let row = &mut diag_rows[i];
            if mat == 0 {
                row.0 -= x;
            } else {
                row.1.push((mat - 1, x));
            }
        } else {
            let entry = BlockEntry {
                row: i,
                col: j,
                constant: if mat == 0 { -x } else { 0.0 },
                coeffs: if mat == 0 { Vec::new() } else { vec![(mat - 1, x)] },
            };
            blocks[blk - 1].push(entry);
        }
    }

    let mut equalities = Vec::with_capacity(n_eq);
    for e in 0..n_eq {
        let (plus_c, mut plus) = diag_rows[2 * e].clone();
        let (minus_c, mut minus) = diag_rows[2 * e + 1].clone();
        plus.sort_by_key(|&(v, _)| v);
        minus.sort_by_key(|&(v, _)| v);
        let negated = plus_c == -minus_c
            && plus.len() == minus.len()
            && plus.iter().zip(&minus).all(|(a, b)| a.0 == b.0 && a.1 == -b.1);
        if !negated {
            return Err(ncfair_core::Error::invalid(format!(
                "equality block rows {} and {} are not a ± pair",
                2 * e + 1,
                2 * e + 2
            ))
            .into());
        }
        // plus row is a'y - b, stored as constant -b.
        equalities.push(LinearEquality {
            coeffs: plus,
            rhs: -plus_c,
        });
    }

    let mut variable_names = SdpProblem::default_names(num_vars);
    for (l, i, name) in names {
        if i >= num_vars {
            return Err(IoError::parse(l, format!("name for variable {i} of {num_vars}")));
        }
        variable_names[i] = name;
    }
    let objective = c
        .into_iter()
        .enumerate()
        .filter(|&(_, x)| x != 0.0)
        .collect();
    let blocks = blocks
        .into_iter()
        .zip(&dims)
        .map(|(entries, &d)| PsdBlock {
            dim: d as usize,
            entries,
        })
        .collect();
    Ok(SdpProblem::new(num_vars, objective, blocks, equalities, variable_names)?)
}

fn single(line: &str, l: usize) -> Result<&str> {
    let mut t = tokens(line);
    match (t.next(), t.next()) {
        (Some(x), None) => Ok(x),
        _ => Err(IoError::parse(l, "expected a single value")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var() -> SdpProblem {
        // min y  s.t.  [[1, y], [y, 1]] ⪰ 0
        SdpProblem::new(
            1,
            vec![(0, 1.0)],
            vec![PsdBlock {
                dim: 2,
                entries: vec![
                    BlockEntry { row: 0, col: 0, constant: 1.0, coeffs: vec![] },
                    BlockEntry { row: 0, col: 1, constant: 0.0, coeffs: vec![(0, 1.0)] },
                    BlockEntry { row: 1, col: 1, constant: 1.0, coeffs: vec![] },
                ],
            }],
            vec![],
            SdpProblem::default_names(1),
        )
        .unwrap()
    }

    #[test]
    fn golden_one_variable() {
        let golden = "\
1
1
2
1.0000000000000000e0
0 1 1 1 -1.0000000000000000e0
0 1 2 2 -1.0000000000000000e0
1 1 1 2 1.0000000000000000e0
";
        let text = to_sdpa_string(&one_var()).unwrap();
        assert_eq!(text, golden);
        assert_eq!(text.lines().count(), 7);
        assert_eq!(from_sdpa_str(golden).unwrap(), one_var());
    }

    #[test]
    fn equalities_and_names_round_trip() {
        let mut p = one_var();
        p = SdpProblem::new(
            2,
            vec![(0, 1.0), (1, -0.1)],
            p.blocks,
            vec![
                LinearEquality { coeffs: vec![(0, 1.0), (1, 2.5)], rhs: 1.0 / 3.0 },
                LinearEquality { coeffs: vec![(1, 1.0)], rhs: 0.0 },
            ],
            vec!["1".into(), "x*y".into()],
        )
        .unwrap();
        let text = to_sdpa_string(&p).unwrap();
        assert!(text.contains("-4\n"));
        assert_eq!(from_sdpa_str(&text).unwrap(), p);
    }

    #[test]
    fn empty_blocks_rejected() {
        let p = SdpProblem::new(1, vec![(0, 1.0)], vec![], vec![], SdpProblem::default_names(1)).unwrap();
        assert!(to_sdpa_string(&p).is_err());
    }

    #[test]
    fn malformed_inputs_report_lines() {
        let bad_value = "1\n1\n2\n1.0\n0 1 1 1 abc\n";
        match from_sdpa_str(bad_value) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let bad_index = "1\n1\n2\n1.0\n0 1 3 1 1.0\n";
        match from_sdpa_str(bad_index) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let short = "1\n1\n";
        assert!(matches!(from_sdpa_str(short), Err(IoError::Parse { .. })));
    }
}
