//! CSV emission. Every real is written with 17 significant digits so a file
//! parses back to the identical doubles.

use std::path::Path;

use csv::Writer;

use crate::error::Result;
use crate::record::SimulationRecord;

use super::study::StudyTable;

pub const SERIES_HEADER: [&str; 9] = ["t", "i", "X_i", "x_i", "f_i", "E1", "E2", "xi_left", "xi_right"];
pub const STUDY_HEADER: [&str; 12] = [
    "M",
    "tau",
    "err_l2_f",
    "order_l2_f",
    "err_linf_f",
    "order_linf_f",
    "err_l2_x",
    "order_l2_x",
    "err_linf_x",
    "order_linf_x",
    "cpu_s",
    "energy_margin",
];
pub const STEPS_HEADER: [&str; 12] = [
    "n",
    "t",
    "E1",
    "E2",
    "xi_left",
    "xi_right",
    "newton_iterations",
    "newton_lambda",
    "newton_residual",
    "energy_margin",
    "pinned_left",
    "pinned_right",
];

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

/// One row per node of every snapshot.
pub fn write_series<W: std::io::Write>(record: &SimulationRecord, out: W) -> Result<()> {
    let mut w = Writer::from_writer(out);
    w.write_record(SERIES_HEADER)?;
    for s in &record.snapshots {
        let (t, e1, e2, xl, xr) = (real(s.t), real(s.e1), real(s.e2), real(s.xi_left()), real(s.xi_right()));
        for i in 0..s.x.len() {
            w.write_record([
                t.as_str(),
                &i.to_string(),
                &real(s.labels[i]),
                &real(s.x[i]),
                &real(s.f[i]),
                &e1,
                &e2,
                &xl,
                &xr,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per time step: energies, interfaces and solver statistics.
pub fn write_steps<W: std::io::Write>(record: &SimulationRecord, out: W) -> Result<()> {
    let mut w = Writer::from_writer(out);
    w.write_record(STEPS_HEADER)?;
    for s in &record.steps {
        let nr = s.newton;
        w.write_record([
            s.n.to_string(),
            real(s.t),
            real(s.e1),
            real(s.e2),
            real(s.xi_left),
            real(s.xi_right),
            nr.map(|r| r.iterations.to_string()).unwrap_or_default(),
            opt(nr.map(|r| r.final_lambda).filter(|v| v.is_finite())),
            opt(nr.map(|r| r.final_residual_norm)),
            real(s.energy_margin),
            s.pinned[0].to_string(),
            s.pinned[1].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ratio_history<W: std::io::Write>(history: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = Writer::from_writer(out);
    w.write_record(["t", "ratio"])?;
    for &(t, r) in history {
        w.write_record([real(t), real(r)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_study<W: std::io::Write>(table: &StudyTable, out: W) -> Result<()> {
    let mut w = Writer::from_writer(out);
    w.write_record(STUDY_HEADER)?;
    for r in &table.rows {
        let o = r.orders;
        w.write_record([
            r.cells.to_string(),
            real(r.tau),
            real(r.errors.l2_f),
            opt(o.map(|o| o.l2_f)),
            real(r.errors.linf_f),
            opt(o.map(|o| o.linf_f)),
            real(r.errors.l2_x),
            opt(o.map(|o| o.l2_x)),
            real(r.errors.linf_x),
            opt(o.map(|o| o.linf_x)),
            real(r.cpu_s),
            real(r.energy_margin),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// What [`emit_csv`] can write.
pub enum CsvOutput<'a> {
    Series(&'a SimulationRecord),
    Steps(&'a SimulationRecord),
    Study(&'a StudyTable),
    Ratios(&'a [(f64, f64)]),
}

pub fn emit_csv(what: CsvOutput<'_>, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match what {
        CsvOutput::Series(r) => write_series(r, file),
        CsvOutput::Steps(r) => write_steps(r, file),
        CsvOutput::Study(t) => write_study(t, file),
        CsvOutput::Ratios(h) => write_ratio_history(h, file),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_record_is_header_only() {
        let mut buf = Vec::new();
        write_series(&SimulationRecord::default(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,i,X_i,x_i,f_i,E1,E2,xi_left,xi_right\n");
    }

    #[test]
    fn reals_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.718281828459045e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(real(v).parse::<f64>().unwrap(), v);
        }
    }
}
