use std::io::Write;

use perfopt::environment::{Domain, EnvKind, GroundTruth};

use crate::error::HarnessError;

pub const DEFAULT_RESOLUTION: usize = 101;

/// Dense-grid PR landscape as CSV `theta_0,theta_1,pr`, axis 0 slowest.
pub fn write_landscape<W: Write>(kind: EnvKind, resolution: usize, out: W) -> Result<(), HarnessError> {
    if resolution < 2 {
        return Err(HarnessError::Config("resolution must be at least 2".into()));
    }
    let env = kind.build(0);
    let fail = |e: csv::Error| HarnessError::Missing(format!("cannot write landscape: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta_0", "theta_1", "pr"]).map_err(fail)?;
    for p in env.domain().grid(resolution) {
        w.write_record([p[0].to_string(), p[1].to_string(), env.true_pr(&p).to_string()]).map_err(fail)?;
    }
    w.flush().map_err(|e| HarnessError::Missing(format!("cannot write landscape: {e}")))
}
