//! `gradcheck`: run the standard gradient verification suite — every
//! decoder layer under a linear readout, every loss on its own toy, and
//! the end-to-end composite — over the frozen seeds, and fail loudly if
//! any analytic gradient disagrees with central finite differences.

use super::prepare_out;
use crate::config::{write_echo, RunConfig};
use braindecode::eval::write_lines;
use braindecode::nn::GradCheckSettings;
use braindecode::verify::{gradient_suite, standard_seeds};
use braindecode::{Error, Result};

pub fn run(cfg: &RunConfig) -> Result<()> {
    let report = gradient_suite(&standard_seeds(), &GradCheckSettings::default())?;
    let lines = report.lines();
    for line in &lines {
        println!("{line}");
    }
    let out = prepare_out(cfg)?;
    write_lines(&out.join("gradcheck.txt"), &lines)?;
    write_echo(&out, cfg)?;
    if !report.pass() {
        return Err(Error::Contract(format!(
            "gradient suite failed: max relative error {:.3e}",
            report.max_error()
        )));
    }
    Ok(())
}
