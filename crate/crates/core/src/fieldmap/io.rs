//! Field-map CSV: `x_m,y_m,z_m,hx_re,hx_im,hy_re,hy_im,hz_re,hz_im,weight_m3`.
//!
//! Without a `weight_m3` column every sample gets `V_box/N`, where `V_box`
//! is the bounding box of the sample positions extended by half a grid
//! spacing on each side.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FieldSample;
use crate::error::{Error, Result};
use crate::format_sig;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    x_m: f64,
    y_m: f64,
    z_m: f64,
    hx_re: f64,
    hx_im: f64,
    hy_re: f64,
    hy_im: f64,
    hz_re: f64,
    hz_im: f64,
    #[serde(default)]
    weight_m3: Option<f64>,
}

pub fn read_samples<R: Read>(input: R) -> Result<Vec<FieldSample>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let rows = reader.deserialize::<Row>().collect::<std::result::Result<Vec<Row>, _>>()?;
    let weighted = rows.iter().filter(|r| r.weight_m3.is_some()).count();
    if weighted != 0 && weighted != rows.len() {
        return Err(Error::InvalidParameter(format!(
            "weight_m3 given for {weighted} of {} samples; give it for all or none",
            rows.len()
        )));
    }
    let positions: Vec<[f64; 3]> = rows.iter().map(|r| [r.x_m, r.y_m, r.z_m]).collect();
    let uniform = if weighted == 0 { uniform_weight(&positions) } else { 0.0 };
    let mut out = Vec::with_capacity(rows.len());
    for (r, position) in rows.iter().zip(positions) {
        let s = FieldSample {
            position,
            h: [
                Complex64::new(r.hx_re, r.hx_im),
                Complex64::new(r.hy_re, r.hy_im),
                Complex64::new(r.hz_re, r.hz_im),
            ],
            weight: r.weight_m3.unwrap_or(uniform),
        };
        s.validate()?;
        out.push(s);
    }
    Ok(out)
}

/// `V_box/N` for samples without quadrature weights. An axis with `n`
/// distinct coordinates spanning `L` contributes `L·n/(n−1)`, the extent of
/// a cell-centred grid; a flat axis contributes 1.
fn uniform_weight(positions: &[[f64; 3]]) -> f64 {
    if positions.is_empty() {
        return 0.0;
    }
    let mut volume = 1.0;
    for axis in 0..3 {
        let mut coords: Vec<f64> = positions.iter().map(|p| p[axis]).collect();
        coords.sort_by(f64::total_cmp);
        coords.dedup();
        let n = coords.len();
        if n > 1 {
            volume *= (coords[n - 1] - coords[0]) * n as f64 / (n - 1) as f64;
        }
    }
    volume / positions.len() as f64
}

pub fn read_samples_path(path: &Path) -> Result<Vec<FieldSample>> {
    read_samples(std::fs::File::open(path)?)
}

pub fn write_samples<W: Write>(samples: &[FieldSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x_m", "y_m", "z_m", "hx_re", "hx_im", "hy_re", "hy_im", "hz_re", "hz_im", "weight_m3"])?;
    for s in samples {
        let mut rec = s.position.map(format_sig).to_vec();
        for c in s.h {
            rec.push(format_sig(c.re));
            rec.push(format_sig(c.im));
        }
        rec.push(format_sig(s.weight));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
