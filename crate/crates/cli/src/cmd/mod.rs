mod eval;
mod mine;
mod score;
mod sweep;
mod synth;
mod theory;

use std::path::Path;

use crate::args::Command;
use crate::failure::Result;
use crate::files::write_text;

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Mine(a) => mine::run(&a),
        Command::Score(a) => score::run(&a),
        Command::Eval(a) => eval::run(&a),
        Command::Theory(a) => theory::run(&a),
        Command::Synth(a) => synth::run(&a),
        Command::Sweep(a) => sweep::run(&a),
    }
}

/// Writes to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
