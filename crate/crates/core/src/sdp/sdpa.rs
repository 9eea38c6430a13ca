//! SDPA sparse input format (.dat-s) writer/reader and a parser for SDPA
//! result files, for bridging to an external solver.
//!
//! Mapping: our data (min ⟨C,X⟩ s.t. ⟨A_p,X⟩ = b_p, X ⪰ 0) is the SDPA
//! dual, so F₀ = C, F_p = A_p, and the SDPA cost vector c = b. The SDPA
//! primal variables x correspond to our dual vector y, and the SDPA yMat
//! to our primal X.
//!
//! Values are written as exact decimals when the rational has a 2^a·5^b
//! denominator; otherwise as `p/q` (readable back exactly; pass
//! `lossy_decimals` to force plain floats for strict external tools).

use super::{SdpProblem, SdpSolution, SdpStatus, SparseSymEntry};
use crate::expr::fmt_rat;
use crate::rational::{parse_rat, Rat};
use nalgebra::DMatrix;
use num::traits::Zero;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpaError {
    #[error("malformed SDPA file at line {0}: {1}")]
    Malformed(usize, String),
    #[error("malformed solution file: {0}")]
    MalformedSolutionFile(String),
}

/// Serialize in SDPA sparse format. Block sizes are positive (no diagonal
/// blocks are emitted by our builders).
pub fn export_sdpa_sparse(p: &SdpProblem, lossy_decimals: bool) -> String {
    let fmt = |r: &Rat| -> String {
        if lossy_decimals {
            format!("{:.17e}", crate::rational::rat_to_f64(r))
        } else {
            fmt_rat(r)
        }
    };
    let mut out = String::new();
    out.push_str(&format!("{}\n", p.num_eqs()));
    out.push_str(&format!("{}\n", p.block_dims.len()));
    let sizes: Vec<String> = p.block_dims.iter().map(|d| d.to_string()).collect();
    out.push_str(&sizes.join(" "));
    out.push('\n');
    let rhs: Vec<String> = p.rhs.iter().map(&fmt).collect();
    out.push_str(&rhs.join(" "));
    out.push('\n');
    let emit = |matno: usize, entries: &[SparseSymEntry], out: &mut String| {
        for e in entries {
            if e.value.is_zero() {
                continue;
            }
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                matno,
                e.block + 1,
                e.i + 1,
                e.j + 1,
                fmt(&e.value)
            ));
        }
    };
    emit(0, &p.cost, &mut out);
    for (q, a) in p.cons.iter().enumerate() {
        emit(q + 1, a, &mut out);
    }
    out
}

/// Parse SDPA sparse format back into a problem (rational values,
/// including the `p/q` extension).
pub fn import_sdpa_sparse(text: &str) -> Result<SdpProblem, SdpaError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| {
            !l.is_empty() && !l.starts_with('"') && !l.starts_with('*') && !l.starts_with('#')
        });
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| SdpaError::Malformed(0, format!("missing {what}")))
    };
    let (ln, l) = next("constraint count")?;
    let m: usize = l
        .split_whitespace()
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| SdpaError::Malformed(ln, "bad constraint count".to_string()))?;
    let (ln, l) = next("block count")?;
    let nblocks: usize = l
        .split_whitespace()
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| SdpaError::Malformed(ln, "bad block count".to_string()))?;
    let (ln, l) = next("block sizes")?;
    let mut block_dims = Vec::with_capacity(nblocks);
    for tok in l
        .split(|c: char| c.is_whitespace() || c == ',' || c == '(' || c == ')' || c == '{' || c == '}')
        .filter(|t| !t.is_empty())
    {
        let v: i64 = tok
            .parse()
            .map_err(|_| SdpaError::Malformed(ln, format!("bad block size `{tok}`")))?;
        block_dims.push(v.unsigned_abs() as usize);
    }
    if block_dims.len() != nblocks {
        return Err(SdpaError::Malformed(ln, "block size count mismatch".to_string()));
    }
    let (ln, l) = next("rhs vector")?;
    let mut rhs = Vec::with_capacity(m);
    for tok in l
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
    {
        rhs.push(
            parse_rat(tok).ok_or_else(|| SdpaError::Malformed(ln, format!("bad rhs `{tok}`")))?,
        );
    }
    if rhs.len() != m {
        return Err(SdpaError::Malformed(ln, "rhs length mismatch".to_string()));
    }
    let mut cost = Vec::new();
    let mut cons: Vec<Vec<SparseSymEntry>> = vec![Vec::new(); m];
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(SdpaError::Malformed(ln, "expected `matno blkno i j value`".to_string()));
        }
        let matno: usize = toks[0]
            .parse()
            .map_err(|_| SdpaError::Malformed(ln, "bad matno".to_string()))?;
        let blk: usize = toks[1]
            .parse()
            .map_err(|_| SdpaError::Malformed(ln, "bad blkno".to_string()))?;
        let i: usize = toks[2]
            .parse()
            .map_err(|_| SdpaError::Malformed(ln, "bad row".to_string()))?;
        let j: usize = toks[3]
            .parse()
            .map_err(|_| SdpaError::Malformed(ln, "bad col".to_string()))?;
        let v = parse_rat(toks[4])
            .ok_or_else(|| SdpaError::Malformed(ln, format!("bad value `{}`", toks[4])))?;
        if blk == 0 || blk > nblocks || matno > m || i == 0 || j == 0 || i > j {
            return Err(SdpaError::Malformed(ln, "entry indices out of range".to_string()));
        }
        let e = SparseSymEntry { block: blk - 1, i: i - 1, j: j - 1, value: v };
        if matno == 0 {
            cost.push(e);
        } else {
            cons[matno - 1].push(e);
        }
    }
    Ok(SdpProblem {
        block_dims,
        rhs,
        cost,
        cons,
        obj_const: Rat::zero(),
        eq_groups: None,
    })
}

/// Write an SDPA-style result file for a solution (phase, objectives,
/// xVec = our dual y, yMat = our primal X).
pub fn write_sdpa_solution(sol: &SdpSolution) -> String {
    let mut out = String::new();
    let phase = match sol.status {
        SdpStatus::Optimal => "pdOPT",
        SdpStatus::Infeasible => "pINF",
        SdpStatus::IterationLimit => "pdFEAS",
        SdpStatus::NumericalTrouble => "pUNBD",
    };
    out.push_str(&format!("phase.value  = {phase}\n"));
    out.push_str(&format!("objValPrimal = {:.16e}\n", sol.dual_objective));
    out.push_str(&format!("objValDual   = {:.16e}\n", sol.primal_objective));
    out.push_str("xVec = \n{");
    let xs: Vec<String> = sol.dual_y.iter().map(|v| format!("{v:.16e}")).collect();
    out.push_str(&xs.join(","));
    out.push_str("}\n");
    out.push_str("yMat = \n{\n");
    for b in &sol.primal_blocks {
        out.push_str("{ ");
        let rows: Vec<String> = (0..b.nrows())
            .map(|i| {
                let cols: Vec<String> = (0..b.ncols()).map(|j| format!("{:.16e}", b[(i, j)])).collect();
                format!("{{{}}}", cols.join(","))
            })
            .collect();
        out.push_str(&rows.join(", "));
        out.push_str(" }\n");
    }
    out.push_str("}\n");
    out
}

/// Parse an SDPA result file into an [`SdpSolution`] (objective values,
/// xVec as dual y, yMat blocks as primal X).
pub fn parse_sdpa_solution(
    text: &str,
    block_dims: &[usize],
) -> Result<SdpSolution, SdpaError> {
    let phase = text
        .lines()
        .find(|l| l.contains("phase.value"))
        .and_then(|l| l.split('=').nth(1))
        .map(|s| s.trim().to_string())
        .ok_or_else(|| SdpaError::MalformedSolutionFile("missing phase.value".to_string()))?;
    let status = match phase.as_str() {
        "pdOPT" | "pdFEAS" => SdpStatus::Optimal,
        "pINF" | "dINF" | "pdINF" => SdpStatus::Infeasible,
        "pFEAS" | "dFEAS" => SdpStatus::IterationLimit,
        _ => SdpStatus::NumericalTrouble,
    };
    let scan_obj = |key: &str| -> Result<f64, SdpaError> {
        text.lines()
            .find(|l| l.contains(key))
            .and_then(|l| l.split('=').nth(1))
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| SdpaError::MalformedSolutionFile(format!("missing {key}")))
    };
    let obj_primal = scan_obj("objValPrimal")?;
    let obj_dual = scan_obj("objValDual")?;
    // xVec = {...}
    let xvec_start = text
        .find("xVec")
        .ok_or_else(|| SdpaError::MalformedSolutionFile("missing xVec".to_string()))?;
    let after = &text[xvec_start..];
    let open = after
        .find('{')
        .ok_or_else(|| SdpaError::MalformedSolutionFile("xVec has no `{`".to_string()))?;
    let close = after[open..]
        .find('}')
        .ok_or_else(|| SdpaError::MalformedSolutionFile("xVec has no `}`".to_string()))?;
    let body = &after[open + 1..open + close];
    let dual_y: Vec<f64> = body
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| SdpaError::MalformedSolutionFile(format!("bad xVec value `{t}`")))
        })
        .collect::<Result<_, _>>()?;
    // yMat: flat numbers in row-major block order
    let ymat_start = text
        .find("yMat")
        .ok_or_else(|| SdpaError::MalformedSolutionFile("missing yMat".to_string()))?;
    let nums: Vec<f64> = text[ymat_start..]
        .split(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E'))
        .filter(|t| !t.is_empty() && t.chars().any(|c| c.is_ascii_digit()))
        .filter_map(|t| t.parse::<f64>().ok())
        .collect();
    let needed: usize = block_dims.iter().map(|&d| d * d).sum();
    if nums.len() < needed {
        return Err(SdpaError::MalformedSolutionFile(format!(
            "yMat has {} values, need {needed}",
            nums.len()
        )));
    }
    let mut primal_blocks = Vec::with_capacity(block_dims.len());
    let mut pos = 0usize;
    for &d in block_dims {
        let mut mat = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                mat[(i, j)] = nums[pos];
                pos += 1;
            }
        }
        primal_blocks.push(mat);
    }
    let primal_objective = obj_dual; // our ⟨C,X⟩ is SDPA's dual objective
    let dual_objective = obj_primal;
    Ok(SdpSolution {
        status,
        primal_blocks,
        dual_y,
        dual_slacks: block_dims.iter().map(|&d| DMatrix::zeros(d, d)).collect(),
        primal_objective,
        dual_objective,
        gap: (primal_objective - dual_objective).abs()
            / (1.0 + primal_objective.abs() + dual_objective.abs()),
        pinfeas: 0.0,
        dinfeas: 0.0,
        iterations: 0,
        bound: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};
    use crate::sdp::{solve, SolveParams};

    fn one_by_one() -> SdpProblem {
        SdpProblem {
            block_dims: vec![1],
            rhs: vec![rat_int(1)],
            cost: vec![SparseSymEntry { block: 0, i: 0, j: 0, value: rat_int(5) }],
            cons: vec![vec![SparseSymEntry { block: 0, i: 0, j: 0, value: rat_int(1) }]],
            obj_const: Rat::zero(),
            eq_groups: None,
        }
    }

    #[test]
    fn minimal_file_layout() {
        let text = export_sdpa_sparse(&one_by_one(), false);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "1");
        assert_eq!(lines[1], "1");
        assert_eq!(lines[2], "1");
        assert_eq!(lines[3], "1");
        assert_eq!(lines[4], "0 1 1 1 5");
        assert_eq!(lines[5], "1 1 1 1 1");
    }

    #[test]
    fn roundtrip_is_exact_in_rational_data() {
        let p = SdpProblem {
            block_dims: vec![2, 1],
            rhs: vec![rat(1, 3), rat_int(2)],
            cost: vec![
                SparseSymEntry { block: 0, i: 0, j: 1, value: rat(-7, 2) },
                SparseSymEntry { block: 1, i: 0, j: 0, value: rat(636, 100) },
            ],
            cons: vec![
                vec![SparseSymEntry { block: 0, i: 0, j: 0, value: rat(22, 7) }],
                vec![SparseSymEntry { block: 0, i: 1, j: 1, value: rat_int(1) }],
            ],
            obj_const: Rat::zero(),
            eq_groups: None,
        };
        let text = export_sdpa_sparse(&p, false);
        let q = import_sdpa_sparse(&text).unwrap();
        assert_eq!(p.block_dims, q.block_dims);
        assert_eq!(p.rhs, q.rhs);
        assert_eq!(p.cost, q.cost);
        assert_eq!(p.cons, q.cons);
        // and the re-exported text is byte-identical
        assert_eq!(text, export_sdpa_sparse(&q, false));
    }

    #[test]
    fn grammar_check_nonneg_blocks_and_bounds() {
        // quintuples must satisfy i ≤ j, valid block and matno ranges
        let text = export_sdpa_sparse(&one_by_one(), false);
        for line in text.lines().skip(4) {
            let toks: Vec<&str> = line.split_whitespace().collect();
            assert_eq!(toks.len(), 5);
            let i: usize = toks[2].parse().unwrap();
            let j: usize = toks[3].parse().unwrap();
            assert!(i <= j && i >= 1);
        }
        assert!(import_sdpa_sparse("1\n1\n1\n").is_err());
        assert!(import_sdpa_sparse("1\n1\n1\n1.0\n0 1 2 1 5").is_err());
    }

    #[test]
    fn solution_roundtrip_against_embedded_solver() {
        let p = SdpProblem {
            block_dims: vec![2],
            rhs: vec![rat_int(1)],
            cost: vec![
                SparseSymEntry { block: 0, i: 0, j: 0, value: rat_int(1) },
                SparseSymEntry { block: 0, i: 1, j: 1, value: rat_int(1) },
            ],
            cons: vec![vec![SparseSymEntry { block: 0, i: 0, j: 1, value: rat_int(-1) }]],
            obj_const: Rat::zero(),
            eq_groups: None,
        };
        let sol = solve(&p, &SolveParams::default());
        let text = write_sdpa_solution(&sol);
        let parsed = parse_sdpa_solution(&text, &p.block_dims).unwrap();
        assert_eq!(parsed.status, SdpStatus::Optimal);
        assert!((parsed.primal_objective - sol.primal_objective).abs() < 1e-6);
        assert!((parsed.dual_y[0] - sol.dual_y[0]).abs() < 1e-6);
        assert!((parsed.primal_blocks[0][(0, 1)] - sol.primal_blocks[0][(0, 1)]).abs() < 1e-6);

        // truncated file is rejected
        assert!(matches!(
            parse_sdpa_solution(&text[..40], &p.block_dims),
            Err(SdpaError::MalformedSolutionFile(_))
        ));
    }

    #[test]
    fn scalar_example_solution_vector() {
        let sol = solve(&one_by_one(), &SolveParams::default());
        let text = write_sdpa_solution(&sol);
        let parsed = parse_sdpa_solution(&text, &[1]).unwrap();
        assert!((parsed.dual_y[0] - 5.0).abs() < 1e-6);
    }
}
