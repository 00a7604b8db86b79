//! File formats: matrix / Bloch-vector / extremal-spec JSON, step logs as
//! JSON lines, and the boundary, cloud and empirical-boundary CSVs.
//!
//! CSV floats carry 12 significant digits.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{BoundaryCurve, BoundarySample, Region};
use crate::imaginarity::ImaginarityReport;
use crate::numerics::{ComplexSquareMatrix, NumericsError};
use crate::sampling::{CoordinateRecord, EmpiricalCurve};
use crate::transform::RotationStep;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// `x` rounded to 12 significant digits, printed in shortest form.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// `{"dim": d, "re": [[..]], "im": [[..]]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &ComplexSquareMatrix) -> Self {
        Self {
            dim: m.dim(),
            re: m.real_rows(),
            im: m.imag_rows(),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexSquareMatrix, IoError> {
        if self.re.len() != self.dim || self.im.len() != self.dim {
            return Err(IoError::Format(format!(
                "dim = {} but {} real and {} imaginary rows",
                self.dim,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(ComplexSquareMatrix::from_parts(&self.re, &self.im)?)
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(reader: impl Read) -> Result<T, IoError> {
    Ok(serde_json::from_reader(reader)?)
}

pub fn write_json<T: Serialize>(mut writer: impl Write, value: &T) -> Result<(), IoError> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writeln!(writer)?;
    Ok(())
}

pub fn write_step_log(mut writer: impl Write, steps: &[RotationStep]) -> Result<(), IoError> {
    for step in steps {
        serde_json::to_writer(&mut writer, step)?;
        writeln!(writer)?;
    }
    Ok(())
}

pub fn read_step_log(reader: impl BufRead) -> Result<Vec<RotationStep>, IoError> {
    let mut steps = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        steps.push(serde_json::from_str(&line)?);
    }
    Ok(steps)
}

pub const BOUNDARY_HEADER: [&str; 3] = ["s_r", "s_i_max", "region"];

pub fn write_boundary_csv(writer: impl Write, curve: &BoundaryCurve) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(BOUNDARY_HEADER)?;
    for s in &curve.samples {
        w.write_record([fmt_sig12(s.s_r), fmt_sig12(s.s_i_max), s.region.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(field: Option<&str>, what: &str) -> Result<f64, IoError> {
    let raw = field.ok_or_else(|| IoError::Format(format!("missing column {what}")))?;
    raw.trim()
        .parse()
        .map_err(|_| IoError::Format(format!("column {what}: {raw:?} is not a number")))
}

fn check_header(r: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<(), IoError> {
    let header = r.headers()?;
    if !header.iter().zip(expected).all(|(a, b)| a == *b) || header.len() < expected.len() {
        return Err(IoError::Format(format!(
            "unexpected header {:?}, wanted {:?}",
            header.iter().collect::<Vec<_>>(),
            expected
        )));
    }
    Ok(())
}

pub fn read_boundary_csv(reader: impl Read, dim: usize) -> Result<BoundaryCurve, IoError> {
    let mut r = csv::Reader::from_reader(reader);
    check_header(&mut r, &BOUNDARY_HEADER)?;
    let mut samples = Vec::new();
    for row in r.records() {
        let row = row?;
        samples.push(BoundarySample {
            s_r: parse_f64(row.get(0), "s_r")?,
            s_i_max: parse_f64(row.get(1), "s_i_max")?,
            region: row
                .get(2)
                .unwrap_or("")
                .parse::<Region>()
                .map_err(IoError::Format)?,
        });
    }
    Ok(BoundaryCurve { dim, samples })
}

pub const CLOUD_HEADER: [&str; 6] = ["idx", "s_d", "s_x", "s_i", "s_r", "purity"];
pub const ROBUSTNESS_COLUMNS: [&str; 2] = ["robustness", "full_imaginarity"];

/// Streaming writer for cloud rows, optionally with the imaginarity columns.
pub struct CloudWriter<W: Write> {
    inner: csv::Writer<W>,
    with_robustness: bool,
}

impl<W: Write> CloudWriter<W> {
    pub fn new(writer: W, with_robustness: bool) -> Result<Self, IoError> {
        let mut inner = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = CLOUD_HEADER.to_vec();
        if with_robustness {
            header.extend(ROBUSTNESS_COLUMNS);
        }
        inner.write_record(&header)?;
        Ok(Self {
            inner,
            with_robustness,
        })
    }

    pub fn write(
        &mut self,
        rec: &CoordinateRecord,
        imag: Option<&ImaginarityReport>,
    ) -> Result<(), IoError> {
        let mut row = vec![
            rec.idx.to_string(),
            fmt_sig12(rec.s_d),
            fmt_sig12(rec.s_x),
            fmt_sig12(rec.s_i),
            fmt_sig12(rec.s_r),
            fmt_sig12(rec.purity),
        ];
        if self.with_robustness {
            let imag = imag.ok_or_else(|| {
                IoError::Format("robustness columns requested but no report given".into())
            })?;
            row.push(fmt_sig12(imag.robustness));
            row.push(imag.full_imaginarity.to_string());
        }
        self.inner.write_record(&row)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, IoError> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| IoError::Io(std::io::Error::other(e.to_string())))
    }
}

/// Parsed cloud row; imaginarity columns are present only if the file had them.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudRow {
    pub record: CoordinateRecord,
    pub robustness: Option<f64>,
    pub full_imaginarity: Option<bool>,
}

pub fn read_cloud_csv(reader: impl Read, dim: usize) -> Result<Vec<CloudRow>, IoError> {
    let mut r = csv::Reader::from_reader(reader);
    check_header(&mut r, &CLOUD_HEADER)?;
    let with_robustness = r.headers()?.len() == CLOUD_HEADER.len() + ROBUSTNESS_COLUMNS.len();
    let mut rows = Vec::new();
    for row in r.records() {
        let row = row?;
        let idx = row
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| IoError::Format("bad idx column".into()))?;
        let record = CoordinateRecord {
            idx,
            dim,
            s_d: parse_f64(row.get(1), "s_d")?,
            s_x: parse_f64(row.get(2), "s_x")?,
            s_i: parse_f64(row.get(3), "s_i")?,
            s_r: parse_f64(row.get(4), "s_r")?,
            purity: parse_f64(row.get(5), "purity")?,
        };
        let (robustness, full_imaginarity) = if with_robustness {
            let flag = row
                .get(7)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| IoError::Format("bad full_imaginarity column".into()))?;
            (Some(parse_f64(row.get(6), "robustness")?), Some(flag))
        } else {
            (None, None)
        };
        rows.push(CloudRow {
            record,
            robustness,
            full_imaginarity,
        });
    }
    Ok(rows)
}

pub const EMPIRICAL_HEADER: [&str; 2] = ["s_r_bin_center", "s_i_max_empirical"];

/// Empty bins are left out.
pub fn write_empirical_csv(writer: impl Write, curve: &EmpiricalCurve) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(EMPIRICAL_HEADER)?;
    for bin in &curve.bins {
        if let Some(s_i) = bin.s_i_max() {
            w.write_record([fmt_sig12(bin.center), fmt_sig12(s_i)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_empirical_csv(reader: impl Read) -> Result<Vec<(f64, f64)>, IoError> {
    let mut r = csv::Reader::from_reader(reader);
    check_header(&mut r, &EMPIRICAL_HEADER)?;
    r.records()
        .map(|row| {
            let row = row?;
            Ok((
                parse_f64(row.get(0), "s_r_bin_center")?,
                parse_f64(row.get(1), "s_i_max_empirical")?,
            ))
        })
        .collect()
}

/// Minimal static SVG: the boundary as one polyline per region.
pub fn boundary_svg(curve: &BoundaryCurve) -> String {
    const W: f64 = 480.0;
    const H: f64 = 480.0;
    const PAD: f64 = 30.0;
    let top = ((curve.dim - 1) as f64).sqrt().max(1.0);
    let sx = |r: f64| PAD + r / top * (W - 2.0 * PAD);
    let sy = |i: f64| H - PAD - i / top * (H - 2.0 * PAD);
    let color = |r: Region| match r {
        Region::Linear => "green",
        Region::Quadratic => "blue",
        Region::Purity => "orange",
    };
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    );
    out.push_str(&format!(
        "<line x1=\"{PAD}\" y1=\"{y}\" x2=\"{x}\" y2=\"{y}\" stroke=\"black\"/>\n<line x1=\"{PAD}\" y1=\"{y}\" x2=\"{PAD}\" y2=\"{PAD}\" stroke=\"black\"/>\n",
        y = H - PAD,
        x = W - PAD
    ));
    let mut i = 0;
    let samples = &curve.samples;
    while i < samples.len() {
        let region = samples[i].region;
        let mut j = i;
        while j + 1 < samples.len() && samples[j + 1].region == region {
            j += 1;
        }
        // share the joint with the next run so the curve is unbroken
        let end = (j + 1).min(samples.len() - 1);
        let pts: Vec<String> = samples[i..=end]
            .iter()
            .map(|s| format!("{:.2},{:.2}", sx(s.s_r), sy(s.s_i_max)))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" data-region=\"{}\" points=\"{}\"/>\n",
            color(region),
            region,
            pts.join(" ")
        ));
        i = j + 1;
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::boundary_samples;
    use crate::sampling::{coordinate_cloud, Measure};
    use crate::transform::RotationStep;
    use proptest::prelude::*;

    #[test]
    fn sig12_formatting() {
        assert_eq!(fmt_sig12(0.0), "0");
        assert_eq!(fmt_sig12(-0.0), "0");
        assert_eq!(fmt_sig12(1.0), "1");
        assert_eq!(fmt_sig12(0.5f64.sqrt()), "0.707106781187");
        assert_eq!(fmt_sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig12(2.5e-13), "0.00000000000025");
    }

    #[test]
    fn matrix_file_shape_errors() {
        let f: MatrixFile =
            serde_json::from_str(r#"{"dim": 2, "re": [[0.5, 0], [0, 0.5]], "im": [[0, 0]]}"#)
                .unwrap();
        assert!(matches!(f.to_matrix(), Err(IoError::Format(_))));
        let f: MatrixFile =
            serde_json::from_str(r#"{"dim": 2, "re": [[0.5, 0], [0]], "im": [[0, 0], [0, 0]]}"#)
                .unwrap();
        assert!(f.to_matrix().is_err());
    }

    #[test]
    fn step_log_roundtrip() {
        let steps = vec![
            RotationStep::new(0, 3, 0.25),
            RotationStep::new(2, 1, -1e-7),
        ];
        let mut buf = Vec::new();
        write_step_log(&mut buf, &steps).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            r#"{"k":0,"l":3,"theta":0.25}"#
        );
        assert_eq!(read_step_log(&buf[..]).unwrap(), steps);
    }

    #[test]
    fn boundary_csv_roundtrip() {
        let curve = boundary_samples(5, 101).unwrap();
        let mut buf = Vec::new();
        write_boundary_csv(&mut buf, &curve).unwrap();
        assert!(
            String::from_utf8_lossy(&buf).starts_with("s_r,s_i_max,region\n0,0.894427191,LINEAR\n")
        );
        let back = read_boundary_csv(&buf[..], 5).unwrap();
        assert_eq!(back.samples.len(), 101);
        for (a, b) in curve.samples.iter().zip(&back.samples) {
            assert!((a.s_r - b.s_r).abs() <= 1e-11 * a.s_r.abs().max(1e-300));
            assert!((a.s_i_max - b.s_i_max).abs() <= 1e-11 * a.s_i_max.abs().max(1e-300));
            assert_eq!(a.region, b.region);
        }
        assert!(read_boundary_csv("a,b,c\n".as_bytes(), 5).is_err());
    }

    #[test]
    fn cloud_csv_roundtrip_with_robustness() {
        let cloud = coordinate_cloud(3, 20, Measure::HsMixed, 9).unwrap();
        let mut w = CloudWriter::new(Vec::new(), true).unwrap();
        let report = ImaginarityReport {
            robustness: 0.25,
            s_r: 0.0,
            full_imaginarity: false,
        };
        for rec in &cloud {
            w.write(rec, Some(&report)).unwrap();
        }
        let buf = w.finish().unwrap();
        let rows = read_cloud_csv(&buf[..], 3).unwrap();
        assert_eq!(rows.len(), 20);
        assert_eq!(rows[3].record.idx, 3);
        assert_eq!(rows[3].robustness, Some(0.25));
        assert!((rows[3].record.purity - cloud[3].purity).abs() <= 1e-12);

        let mut w = CloudWriter::new(Vec::new(), true).unwrap();
        assert!(w.write(&cloud[0], None).is_err());
    }

    #[test]
    fn svg_has_one_polyline_per_region() {
        let svg = boundary_svg(&boundary_samples(5, 200).unwrap());
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("data-region=\"LINEAR\""));
    }

    proptest! {
        #[test]
        fn sig12_roundtrip_is_tight(x in -1e6f64..1e6) {
            let back: f64 = fmt_sig12(x).parse().unwrap();
            prop_assert!((back - x).abs() <= 5e-12 * x.abs());
        }
    }
}
