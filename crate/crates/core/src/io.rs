//! Population (`stratum,x,y`) and sample CSV files, and the numeric
//! formatting shared by the report writers.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::strata::{Design, StratifiedPopulation, StratifiedSample, Stratum};

/// Literal written for an estimate that cannot be computed.
pub const NA: &str = "NA";

/// Load a population from a `stratum,x,y` CSV file.
pub fn population_from_csv<T: Real>(path: impl AsRef<Path>) -> Result<StratifiedPopulation<T>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    population_from_reader(file, path)
}

/// Same as [`population_from_csv`] for an arbitrary reader; `origin` is only
/// used in error messages.
pub fn population_from_reader<T: Real, R: Read>(
    reader: R,
    origin: impl AsRef<Path>,
) -> Result<StratifiedPopulation<T>> {
    let origin = origin.as_ref();
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["stratum", "x", "y"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(parse_err(1, format!("expected header 'stratum,x,y', got '{}'", headers.iter().collect::<Vec<_>>().join(","))));
    }

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut strata: Vec<Stratum<T>> = Vec::new();
    let mut first_x: Vec<f64> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let label = record.get(0).unwrap_or("").to_string();
        if label.is_empty() {
            return Err(parse_err(line, "empty stratum id".into()));
        }
        let parse = |field: usize, name: &str| -> Result<f64> {
            let raw = record.get(field).unwrap_or("");
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(line, format!("invalid {name} value '{raw}'")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite {name} value '{raw}'")));
            }
            Ok(v)
        };
        let x = parse(1, "x")?;
        let y = parse(2, "y")?;

        let h = match index.get(&label) {
            Some(&h) => {
                if first_x[h] != x {
                    return Err(Error::InconsistentKey {
                        stratum: label,
                        first: first_x[h],
                        other: x,
                    });
                }
                h
            }
            None => {
                let h = strata.len();
                index.insert(label.clone(), h);
                first_x.push(x);
                strata.push(Stratum {
                    id: h,
                    label,
                    key: T::from_f64_lossy(x),
                    values: Vec::new(),
                });
                h
            }
        };
        strata[h].values.push(T::from_f64_lossy(y));
    }
    if strata.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    StratifiedPopulation::new(strata)
}

/// Write a population in the loader's schema. Values are written in the
/// shortest form that parses back to the same `f64`.
pub fn write_population_csv<T: Real, W: Write>(
    pop: &StratifiedPopulation<T>,
    writer: W,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["stratum", "x", "y"])?;
    for s in pop.strata() {
        let x = s.key.to_f64_lossy().to_string();
        for y in &s.values {
            wtr.write_record([s.label.as_str(), x.as_str(), &y.to_f64_lossy().to_string()])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// A sample read from a `stratum,x,stratum_size,unit,y` file.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile<T> {
    pub labels: Vec<String>,
    pub keys: Vec<T>,
    pub sample: StratifiedSample<T>,
}

/// Write the sampled units of `sample` as `stratum,x,stratum_size,unit,y`.
pub fn write_sample_csv<T: Real, W: Write>(
    pop: &StratifiedPopulation<T>,
    sample: &StratifiedSample<T>,
    writer: W,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["stratum", "x", "stratum_size", "unit", "y"])?;
    for s in &sample.strata {
        let st = &pop.strata()[s.stratum];
        let x = st.key.to_f64_lossy().to_string();
        for (&j, &y) in s.indices.iter().zip(&s.values) {
            wtr.write_record([
                st.label.clone(),
                x.clone(),
                s.population_size.to_string(),
                j.to_string(),
                y.to_f64_lossy().to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn sample_from_csv<T: Real>(path: impl AsRef<Path>, design: Design) -> Result<SampleFile<T>> {
    let path = path.as_ref();
    sample_from_reader(File::open(path)?, path, design)
}

/// Read a sample file; strata keep their order of first appearance.
pub fn sample_from_reader<T: Real, R: Read>(
    reader: R,
    origin: impl AsRef<Path>,
    design: Design,
) -> Result<SampleFile<T>> {
    let origin = origin.as_ref();
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let expected = ["stratum", "x", "stratum_size", "unit", "y"];
    let headers = rdr.headers()?.clone();
    if headers.len() != expected.len() || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(parse_err(1, format!("expected header '{}'", expected.join(","))));
    }
    struct Acc {
        x: f64,
        big_n: usize,
        units: Vec<usize>,
        values: Vec<f64>,
    }
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut acc: Vec<Acc> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            parse_err(e.position().map(|p| p.line()).unwrap_or(0), e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("invalid {} value '{}'", expected[i], field(i))))
        };
        let int = |i: usize| -> Result<usize> {
            field(i)
                .parse::<usize>()
                .map_err(|_| parse_err(line, format!("invalid {} value '{}'", expected[i], field(i))))
        };
        let label = field(0).to_string();
        if label.is_empty() {
            return Err(parse_err(line, "empty stratum id".into()));
        }
        let (x, big_n, unit, y) = (num(1)?, int(2)?, int(3)?, num(4)?);
        let h = match index.get(&label) {
            Some(&h) => {
                if acc[h].x != x {
                    return Err(Error::InconsistentKey { stratum: label, first: acc[h].x, other: x });
                }
                if acc[h].big_n != big_n {
                    return Err(parse_err(line, format!("stratum '{label}' has inconsistent stratum_size")));
                }
                h
            }
            None => {
                index.insert(label.clone(), acc.len());
                labels.push(label);
                acc.push(Acc { x, big_n, units: Vec::new(), values: Vec::new() });
                acc.len() - 1
            }
        };
        if unit >= big_n || acc[h].units.contains(&unit) {
            return Err(parse_err(line, format!("unit {unit} is out of range or repeated")));
        }
        acc[h].units.push(unit);
        acc[h].values.push(y);
    }
    if acc.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    let keys = acc.iter().map(|a| T::from_f64_lossy(a.x)).collect();
    let parts = acc
        .into_iter()
        .map(|a| {
            let values = a.values.into_iter().map(T::from_f64_lossy).collect();
            (a.big_n, a.units, values)
        })
        .collect();
    Ok(SampleFile {
        labels,
        keys,
        sample: StratifiedSample::from_parts(design, parts)?,
    })
}

/// Format with six significant digits in the style of C's `%g`.
pub fn fmt_sig6(x: f64) -> String {
    fmt_sig(x, 6)
}

pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return NA.to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    // Round first so that the exponent reflects the printed mantissa.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// [`fmt_sig6`] for an optional value, `NA` when absent.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_sig6).unwrap_or_else(|| NA.to_string())
}
