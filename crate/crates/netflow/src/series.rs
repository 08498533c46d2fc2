//! Time-series CSV.
//!
//! Columns: `time_s`, then `q_<id>` (outflow in m³/s, positive leaving the
//! network) per tracked vertex, then optionally `volume_<id>` (cumulative
//! trapezoidal outflow volume in m³).

use std::fs::File;
use std::io::Write;
use std::path::Path;

use netflow_core::pulsatile::TimeSeries;

use crate::error::{Error, Result};

pub fn header(series: &TimeSeries, volumes: bool) -> Vec<String> {
    let mut h = vec!["time_s".to_string()];
    h.extend(series.vertices.iter().map(|v| format!("q_{v}")));
    if volumes {
        h.extend(series.vertices.iter().map(|v| format!("volume_{v}")));
    }
    h
}

pub fn write_series<W: Write>(out: W, series: &TimeSeries, volumes: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(series, volumes))?;
    let cumulative: Vec<Vec<f64>> = if volumes {
        series
            .vertices
            .iter()
            .map(|&v| series.cumulative_volume(v).expect("tracked vertex"))
            .collect()
    } else {
        Vec::new()
    };
    for (k, t) in series.times.iter().enumerate() {
        let mut row = vec![format!("{t:e}")];
        row.extend(series.flux.iter().map(|q| format!("{:e}", q[k])));
        row.extend(cumulative.iter().map(|c| format!("{:e}", c[k])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series_file(path: &Path, series: &TimeSeries, volumes: bool) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_series(file, series, volumes).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_and_volumes() {
        let series = TimeSeries {
            times: vec![0.0, 0.5, 1.0],
            vertices: vec![3, 9],
            flux: vec![vec![1.0, 1.0, 1.0], vec![0.0, -2.0, 0.0]],
            max_jump: vec![0.0; 3],
            max_flux: vec![0.0; 3],
            balance_residual: vec![0.0; 3],
            balance_scale: vec![0.0; 3],
            snapshots: vec![],
        };
        let mut buf = Vec::new();
        write_series(&mut buf, &series, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "time_s,q_3,q_9,volume_3,volume_9");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[3], "1e0,1e0,0e0,1e0,-1e0");
        let mut buf = Vec::new();
        write_series(&mut buf, &series, false).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("time_s,q_3,q_9\n"));
    }
}
