//! Descriptor CSV files.
//!
//! ```text
//! SDPF1,<kd>,<ka>,<kc>,<normalized 0|1>
//! <image path>,<label>,<v0>,...,<v(D-1)>
//! ```
//!
//! Values are written with 9 significant digits.

use std::io::{Read, Write};
use std::path::Path;

use crate::descriptor::DescriptorConfig;
use crate::{Error, Result};

const MAGIC: &str = "SDPF1";

#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorRecord {
    pub path: String,
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorFile {
    pub config: DescriptorConfig,
    pub records: Vec<DescriptorRecord>,
}

/// Formats `v` with 9 significant digits, `%g` style.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-4..9).contains(&exp) {
        trim(format!("{:.*}", (8 - exp) as usize, v))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn format_err(msg: String) -> Error {
    Error::Format {
        kind: "descriptor csv",
        msg,
    }
}

pub fn write_descriptors<W: Write>(out: W, file: &DescriptorFile) -> Result<()> {
    let cfg = &file.config;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_writer(out);
    let csv_err = |e: csv::Error| format_err(e.to_string());
    w.write_record([
        MAGIC.to_string(),
        cfg.distance_bins.to_string(),
        cfg.angle_bins.to_string(),
        cfg.color_bins.to_string(),
        (cfg.normalize as u8).to_string(),
    ])
    .map_err(csv_err)?;
    for r in &file.records {
        if r.values.len() != cfg.len() {
            return Err(Error::DimensionMismatch {
                expected: cfg.len(),
                got: r.values.len(),
            });
        }
        let mut row = Vec::with_capacity(r.values.len() + 2);
        row.push(r.path.clone());
        row.push(r.label.clone());
        row.extend(r.values.iter().map(|&v| format_sig9(v)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| format_err(e.to_string()))?;
    Ok(())
}

pub fn read_descriptors<R: Read>(input: R) -> Result<DescriptorFile> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut rows = rd.records();
    let header = rows
        .next()
        .ok_or_else(|| format_err("empty file".to_string()))?
        .map_err(|e| format_err(e.to_string()))?;
    if header.len() != 5 || &header[0] != MAGIC {
        return Err(format_err(format!(
            "expected header {MAGIC},kd,ka,kc,normalized"
        )));
    }
    let num = |k: usize| {
        header[k]
            .trim()
            .parse::<usize>()
            .map_err(|_| format_err(format!("bad header field {:?}", &header[k])))
    };
    let normalize = match header[4].trim() {
        "0" => false,
        "1" => true,
        other => return Err(format_err(format!("bad normalized flag {other:?}"))),
    };
    let config = DescriptorConfig {
        distance_bins: num(1)?,
        angle_bins: num(2)?,
        color_bins: num(3)?,
        normalize,
    };
    config.validate()?;
    let dim = config.len();

    let mut records = Vec::new();
    for (line, row) in rows.enumerate() {
        let row = row.map_err(|e| format_err(e.to_string()))?;
        if row.len() != dim + 2 {
            return Err(format_err(format!(
                "record {}: expected {} fields, found {}",
                line + 1,
                dim + 2,
                row.len()
            )));
        }
        let values = row
            .iter()
            .skip(2)
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| format_err(format!("record {}: bad value {t:?}", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        records.push(DescriptorRecord {
            path: row[0].to_string(),
            label: row[1].to_string(),
            values,
        });
    }
    Ok(DescriptorFile { config, records })
}

pub fn save_descriptors(path: impl AsRef<Path>, file: &DescriptorFile) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_descriptors(std::io::BufWriter::new(f), file)
}

pub fn load_descriptors(path: impl AsRef<Path>) -> Result<DescriptorFile> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_descriptors(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig9_examples() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.25), "0.25");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1234567891.0), "1.23456789e9");
        assert_eq!(format_sig9(0.000012345678912), "1.23456789e-5");
        assert_eq!(format_sig9(-2.5e-7), "-2.5e-7");
        assert_eq!(format_sig9(0.0001), "0.0001");
    }

    proptest! {
        #[test]
        fn sig9_is_within_relative_half_ulp_of_nine_digits(v in -1e12f64..1e12) {
            let back: f64 = format_sig9(v).parse().unwrap();
            prop_assert!((back - v).abs() <= v.abs() * 5e-9 + 1e-300);
        }
    }

    fn sample() -> DescriptorFile {
        let config = DescriptorConfig::default();
        let mut values = vec![0.0; config.len()];
        values[3] = 0.125;
        values[255] = 1.0 / 7.0;
        DescriptorFile {
            config,
            records: vec![
                DescriptorRecord {
                    path: "root/a,b/img 1.png".into(),
                    label: "a,b".into(),
                    values: values.clone(),
                },
                DescriptorRecord {
                    path: "root/c/x.ppm".into(),
                    label: "c".into(),
                    values: vec![0.0; 256],
                },
            ],
        }
    }

    #[test]
    fn round_trip() {
        let file = sample();
        let mut buf = Vec::new();
        write_descriptors(&mut buf, &file).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("SDPF1,4,8,8,1\n"));
        let back = read_descriptors(buf.as_slice()).unwrap();
        assert_eq!(back.config, file.config);
        assert_eq!(back.records[0].path, file.records[0].path);
        assert_eq!(back.records[0].label, "a,b");
        assert_eq!(back.records[0].values[3], 0.125);
        assert!((back.records[0].values[255] - 1.0 / 7.0).abs() < 1e-9);
        assert_eq!(back.records[1].values, vec![0.0; 256]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_descriptors("".as_bytes()).is_err());
        assert!(read_descriptors("SDPF2,4,8,8,1\n".as_bytes()).is_err());
        assert!(read_descriptors("SDPF1,4,8,8,2\n".as_bytes()).is_err());
        assert!(read_descriptors("SDPF1,4,8,7,1\n".as_bytes()).is_err());
        assert!(read_descriptors("SDPF1,1,1,8,1\np,l,1,2,3\n".as_bytes()).is_err());
        assert!(read_descriptors("SDPF1,1,1,8,1\np,l,1,2,3,4,5,6,7,x\n".as_bytes()).is_err());
        let ok = read_descriptors("SDPF1,1,1,8,0\np,l,1,2,3,4,5,6,7,8\n".as_bytes()).unwrap();
        assert_eq!(ok.records[0].values[7], 8.0);

        let mut file = sample();
        file.records[0].values.pop();
        assert!(write_descriptors(Vec::new(), &file).is_err());
    }
}
