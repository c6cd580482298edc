use std::fmt::Write as _;

use neglabel::theory::{self, SimulationConfig, TheoryParams};

use super::emit;
use crate::args::TheoryArgs;
use crate::failure::{Failure, Result};

pub const HEADER: &str = "M,p1,p2,lambda,fpr_closed,dfpr_dM,fpr_mc,mc_stderr";

/// One table row. The simulation columns stay empty when `n` is 0 or M is
/// not a whole number.
pub fn row(tp: &TheoryParams, n: usize, seed: u64, shards: usize) -> Result<String> {
    let fpr = theory::fpr_closed_form(tp)?;
    let d = theory::fpr_derivative_in_m(tp)?;
    let mut line = format!("{},{},{},{},{fpr},{d}", tp.m, tp.p1, tp.p2, tp.lambda);
    if n > 0 && tp.m.fract() == 0.0 {
        let cfg = SimulationConfig::new(n, n, seed).with_shards(shards);
        let mc = theory::empirical_fpr(tp, &cfg)?;
        write!(line, ",{},{}", mc.fpr, mc.stderr).expect("write to String");
    } else {
        line.push_str(",,");
    }
    Ok(line)
}

pub fn run(a: &TheoryArgs) -> Result<()> {
    if a.shards == 0 {
        return Err(Failure::validation(
            "ZeroShards",
            "--shards must be at least 1",
        ));
    }
    let mut out = String::from(HEADER);
    out.push('\n');
    for &m in &a.m {
        let tp = TheoryParams::new(m, a.p1, a.p2, a.lambda)?;
        out.push_str(&row(&tp, a.n, a.seed, a.shards)?);
        out.push('\n');
    }
    emit(a.out.as_deref(), &out)
}
