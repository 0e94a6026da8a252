//! Plain-text dump of a [`BoxedLp`] with hexadecimal floats, for reproducing
//! pathological LPs outside the solver.
//!
//! ```text
//! boxedlp 1
//! dims <n_vars> <n_eq> <n_ineq>
//! cost <n values>
//! eq <n values>          (n_eq lines)
//! eq_rhs <n_eq values>
//! ineq <n values>        (n_ineq lines)
//! ineq_rhs <n_ineq values>
//! lower <n values>
//! upper <n values>
//! ```

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use super::hexfloat::{format_hex, parse_hex};
use super::BoxedLp;
use crate::error::{FslpError, Result};

pub fn write_hex_dump<W: Write>(lp: &BoxedLp, mut out: W) -> Result<()> {
    fn line<'a, W: Write>(out: &mut W, tag: &str, values: impl Iterator<Item = &'a f64>) -> Result<()> {
        write!(out, "{tag}")?;
        for v in values {
            write!(out, " {}", format_hex(*v))?;
        }
        writeln!(out)?;
        Ok(())
    }

    writeln!(out, "boxedlp 1")?;
    writeln!(out, "dims {} {} {}", lp.n_vars(), lp.n_eq(), lp.n_ineq())?;
    line(&mut out, "cost", lp.cost.iter())?;
    for i in 0..lp.n_eq() {
        line(&mut out, "eq", lp.eq_matrix.row(i).iter())?;
    }
    line(&mut out, "eq_rhs", lp.eq_rhs.iter())?;
    for i in 0..lp.n_ineq() {
        line(&mut out, "ineq", lp.ineq_matrix.row(i).iter())?;
    }
    line(&mut out, "ineq_rhs", lp.ineq_rhs.iter())?;
    line(&mut out, "lower", lp.lower.iter())?;
    line(&mut out, "upper", lp.upper.iter())?;
    Ok(())
}

pub fn read_hex_dump<R: BufRead>(input: R) -> Result<BoxedLp> {
    let lines: Vec<String> = input.lines().collect::<std::io::Result<_>>()?;
    let mut cursor = 0usize;
    let mut next = |tag: &str, count: usize| -> Result<Vec<f64>> {
        let lineno = cursor + 1;
        let err = |reason: String| FslpError::LpDump { line: lineno, reason };
        let text = lines.get(cursor).ok_or_else(|| err("unexpected end of input".into()))?;
        cursor += 1;
        let mut parts = text.split_whitespace();
        if parts.next() != Some(tag) {
            return Err(err(format!("expected '{tag}'")));
        }
        let values = if tag == "dims" || tag == "boxedlp" {
            parts
                .map(|p| p.parse::<usize>().map(|v| v as f64).map_err(|e| err(e.to_string())))
                .collect::<Result<Vec<_>>>()?
        } else {
            parts
                .map(|p| parse_hex(p).ok_or_else(|| err(format!("bad hex float '{p}'"))))
                .collect::<Result<Vec<_>>>()?
        };
        if values.len() != count {
            return Err(err(format!("expected {count} values, found {}", values.len())));
        }
        Ok(values)
    };

    if next("boxedlp", 1)?[0] != 1.0 {
        return Err(FslpError::LpDump {
            line: 1,
            reason: "unsupported version".into(),
        });
    }
    let dims = next("dims", 3)?;
    let (n, n_eq, n_ineq) = (dims[0] as usize, dims[1] as usize, dims[2] as usize);
    let cost = DVector::from_vec(next("cost", n)?);
    let mut eq_matrix = DMatrix::zeros(n_eq, n);
    for i in 0..n_eq {
        eq_matrix.row_mut(i).copy_from_slice(&next("eq", n)?);
    }
    let eq_rhs = DVector::from_vec(next("eq_rhs", n_eq)?);
    let mut ineq_matrix = DMatrix::zeros(n_ineq, n);
    for i in 0..n_ineq {
        ineq_matrix.row_mut(i).copy_from_slice(&next("ineq", n)?);
    }
    let ineq_rhs = DVector::from_vec(next("ineq_rhs", n_ineq)?);
    let lower = DVector::from_vec(next("lower", n)?);
    let upper = DVector::from_vec(next("upper", n)?);
    let lp = BoxedLp {
        cost,
        eq_matrix,
        eq_rhs,
        ineq_matrix,
        ineq_rhs,
        lower,
        upper,
    };
    lp.validate()?;
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips_exactly() {
        let lp = BoxedLp {
            cost: DVector::from_row_slice(&[-2.0, 1.0 / 3.0]),
            eq_matrix: DMatrix::from_row_slice(1, 2, &[0.1, 0.7]),
            eq_rhs: DVector::from_row_slice(&[1e-300]),
            ineq_matrix: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -3.5, 2.0]),
            ineq_rhs: DVector::from_row_slice(&[1.0, std::f64::consts::PI]),
            lower: DVector::from_row_slice(&[0.0, f64::NEG_INFINITY]),
            upper: DVector::from_row_slice(&[f64::INFINITY, 4.0]),
        };
        let mut buf = Vec::new();
        write_hex_dump(&lp, &mut buf).unwrap();
        let back = read_hex_dump(buf.as_slice()).unwrap();
        assert_eq!(back, lp);
    }

    #[test]
    fn truncated_dump_reports_line() {
        let err = read_hex_dump("boxedlp 1\ndims 2 0 0\ncost 0x1p+0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FslpError::LpDump { line: 3, .. }));
    }
}
