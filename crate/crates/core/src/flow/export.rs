use std::io::Write;

use super::MonitorRecord;

pub const TRAJECTORY_HEADER: &str =
    "t,E,E_f,alpha,F2,H,conf_volume,f_mass,min_u,max_u,min_Pu,Q_min,residual_inf";

/// Writes one CSV row per record with 17 significant digits.
pub fn write_trajectory_csv(mut out: impl Write, records: &[MonitorRecord]) -> std::io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for r in records {
        let row = [
            r.t,
            r.e,
            r.e_f,
            r.alpha,
            r.f2,
            r.h,
            r.conf_volume,
            r.f_mass,
            r.min_u,
            r.max_u,
            r.min_pu,
            r.q_min,
            r.residual_inf,
        ];
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
