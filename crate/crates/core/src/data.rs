//! Series CSV ingestion, mortality tables, and the gender-gap series.

use std::collections::BTreeMap;
use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IngestError, Result};
use crate::hmm::ObservedSeries;

/// Reads column `value_column` of a headed CSV file. Lines starting with `#`
/// are comments. If `label_column` is given its cells become time labels.
pub fn load_series(
    path: &Path,
    value_column: &str,
    label_column: Option<&str>,
) -> Result<ObservedSeries, IngestError> {
    let csv_err = |source| IngestError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let vi = find(value_column)?;
    let li = label_column.map(find).transpose()?;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec.position().map_or(values.len() + 2, |p| p.line() as usize);
        let cell = rec.get(vi).unwrap_or("");
        if cell.is_empty() {
            return Err(IngestError::BlankValue {
                path: path.to_path_buf(),
                row,
                column: value_column.to_string(),
            });
        }
        let v: f64 = cell.parse().map_err(|_| IngestError::NonNumeric {
            path: path.to_path_buf(),
            row,
            column: value_column.to_string(),
            value: cell.to_string(),
        })?;
        if !v.is_finite() {
            return Err(IngestError::NonNumeric {
                path: path.to_path_buf(),
                row,
                column: value_column.to_string(),
                value: cell.to_string(),
            });
        }
        values.push(v);
        if let Some(li) = li {
            labels.push(rec.get(li).unwrap_or("").to_string());
        }
    }
    if values.is_empty() {
        return Err(IngestError::Empty {
            path: path.to_path_buf(),
        });
    }
    let labels = li.map(|_| labels);
    Ok(ObservedSeries { values, labels })
}

/// One (year, age) row of a deaths or exposures table. `None` marks a
/// missing cell (`.` in the source files).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MortalityRecord {
    pub year: i32,
    pub age: u32,
    /// Set for open age groups such as `110+`.
    pub open_age: bool,
    pub female: Option<f64>,
    pub male: Option<f64>,
}

/// Deaths or exposures by year, age and sex.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MortalityTable {
    pub records: Vec<MortalityRecord>,
}

impl MortalityTable {
    pub fn get(&self, year: i32, age: u32) -> Option<&MortalityRecord> {
        self.records
            .iter()
            .find(|r| r.year == year && r.age == age && !r.open_age)
    }

    fn index(&self) -> BTreeMap<(i32, u32), &MortalityRecord> {
        self.records
            .iter()
            .filter(|r| !r.open_age)
            .map(|r| ((r.year, r.age), r))
            .collect()
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn parse_cell(
    path: &Path,
    row: usize,
    column: &str,
    cell: &str,
) -> Result<Option<f64>, IngestError> {
    if cell == "." || cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Some)
        .ok_or_else(|| IngestError::NonNumeric {
            path: path.to_path_buf(),
            row,
            column: column.into(),
            value: cell.into(),
        })
}

/// Parses a table with columns `Year`, `Age`, `Female`, `Male` (others such
/// as `Total` are ignored), delimited by commas or whitespace. Lines before
/// the header row are skipped.
pub fn parse_mortality_table(path: &Path, text: &str) -> Result<MortalityTable, IngestError> {
    let mut lines = text.lines().enumerate();
    let mut columns = None;
    for (_, line) in lines.by_ref() {
        let fields = split_fields(line);
        if fields.iter().any(|f| f.eq_ignore_ascii_case("year"))
            && fields.iter().any(|f| f.eq_ignore_ascii_case("age"))
        {
            let pos = |name: &str| {
                fields
                    .iter()
                    .position(|f| f.eq_ignore_ascii_case(name))
                    .ok_or_else(|| IngestError::MissingColumn {
                        path: path.to_path_buf(),
                        column: name.into(),
                    })
            };
            columns = Some((pos("Year")?, pos("Age")?, pos("Female")?, pos("Male")?));
            break;
        }
    }
    let (yc, ac, fc, mc) = columns.ok_or_else(|| IngestError::MissingColumn {
        path: path.to_path_buf(),
        column: "Year".into(),
    })?;
    let width = yc.max(ac).max(fc).max(mc) + 1;
    let mut records = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_fields(line);
        if fields.len() < width {
            return Err(IngestError::Malformed {
                path: path.to_path_buf(),
                row,
                message: format!("expected at least {width} fields, found {}", fields.len()),
            });
        }
        let year = fields[yc].parse().map_err(|_| IngestError::NonNumeric {
            path: path.to_path_buf(),
            row,
            column: "Year".into(),
            value: fields[yc].into(),
        })?;
        let age_text = fields[ac];
        let open_age = age_text.ends_with('+');
        let age = age_text
            .trim_end_matches('+')
            .parse()
            .map_err(|_| IngestError::NonNumeric {
                path: path.to_path_buf(),
                row,
                column: "Age".into(),
                value: age_text.into(),
            })?;
        records.push(MortalityRecord {
            year,
            age,
            open_age,
            female: parse_cell(path, row, "Female", fields[fc])?,
            male: parse_cell(path, row, "Male", fields[mc])?,
        });
    }
    if records.is_empty() {
        return Err(IngestError::Empty {
            path: path.to_path_buf(),
        });
    }
    Ok(MortalityTable { records })
}

pub fn load_mortality_table(path: &Path) -> Result<MortalityTable, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_mortality_table(path, &text)
}

/// Central death rate `D / E`.
pub fn mortality_rate(deaths: f64, exposure: f64) -> Result<f64> {
    if !(exposure > 0.0) || !exposure.is_finite() {
        return Err(Error::Domain(format!("exposure {exposure} is not positive")));
    }
    if !(deaths >= 0.0) || !deaths.is_finite() {
        return Err(Error::Domain(format!("death count {deaths} is negative or not finite")));
    }
    Ok(deaths / exposure)
}

/// `ln(m_male / m_female)`.
pub fn gender_gap(male_rate: f64, female_rate: f64) -> Result<f64> {
    if !(male_rate > 0.0) || !(female_rate > 0.0) {
        return Err(Error::Domain(format!(
            "rates must be positive, got male {male_rate}, female {female_rate}"
        )));
    }
    Ok((male_rate / female_rate).ln())
}

/// Flattening order of the age-by-year panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PanelOrder {
    /// All ages of the first year, then the next year.
    #[default]
    YearMajor,
    /// All years of the first age, then the next age.
    AgeMajor,
}

impl std::str::FromStr for PanelOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "year-major" => Ok(PanelOrder::YearMajor),
            "age-major" => Ok(PanelOrder::AgeMajor),
            other => Err(Error::Config(format!(
                "unknown order `{other}` (expected year-major or age-major)"
            ))),
        }
    }
}

/// A cell left out of the gender-gap series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub year: i32,
    pub age: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCell {
    pub year: i32,
    pub age: u32,
    pub male_rate: f64,
    pub female_rate: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSeries {
    /// Gap values with `year:age` labels, in panel order.
    pub series: ObservedSeries,
    pub cells: Vec<GapCell>,
    pub exclusions: Vec<Exclusion>,
}

impl GapSeries {
    /// One line per excluded cell.
    pub fn exclusion_log(&self) -> String {
        self.exclusions
            .iter()
            .map(|e| format!("year={} age={} reason={}\n", e.year, e.age, e.reason))
            .collect()
    }
}

fn gap_cell(
    deaths: Option<&&MortalityRecord>,
    exposures: Option<&&MortalityRecord>,
    year: i32,
    age: u32,
) -> std::result::Result<GapCell, String> {
    let d = deaths.ok_or("no deaths row")?;
    let e = exposures.ok_or("no exposures row")?;
    let get = |v: Option<f64>, what: &str| v.ok_or(format!("missing {what}"));
    let male_rate = mortality_rate(get(d.male, "male deaths")?, get(e.male, "male exposure")?)
        .map_err(|_| "male exposure not positive".to_string())?;
    let female_rate =
        mortality_rate(get(d.female, "female deaths")?, get(e.female, "female exposure")?)
            .map_err(|_| "female exposure not positive".to_string())?;
    let gap = gender_gap(male_rate, female_rate).map_err(|_| {
        if male_rate == 0.0 {
            "zero male deaths".to_string()
        } else {
            "zero female deaths".to_string()
        }
    })?;
    Ok(GapCell {
        year,
        age,
        male_rate,
        female_rate,
        gap,
    })
}

/// Builds `ln(m_male / m_female)` over the requested panel. Cells that cannot
/// be computed are logged once each and skipped.
pub fn build_gp_series(
    deaths: &MortalityTable,
    exposures: &MortalityTable,
    ages: RangeInclusive<u32>,
    years: RangeInclusive<i32>,
    order: PanelOrder,
) -> Result<GapSeries> {
    let (di, ei) = (deaths.index(), exposures.index());
    let keys: Vec<(i32, u32)> = match order {
        PanelOrder::YearMajor => years
            .clone()
            .flat_map(|y| ages.clone().map(move |a| (y, a)))
            .collect(),
        PanelOrder::AgeMajor => ages
            .clone()
            .flat_map(|a| years.clone().map(move |y| (y, a)))
            .collect(),
    };
    let mut cells = Vec::new();
    let mut exclusions = Vec::new();
    for (year, age) in keys {
        match gap_cell(di.get(&(year, age)), ei.get(&(year, age)), year, age) {
            Ok(c) => cells.push(c),
            Err(reason) => {
                log::warn!("excluding year {year}, age {age}: {reason}");
                exclusions.push(Exclusion { year, age, reason });
            }
        }
    }
    if cells.is_empty() {
        return Err(IngestError::NoCells.into());
    }
    let series = ObservedSeries::with_labels(
        cells.iter().map(|c| c.gap).collect(),
        Some(cells.iter().map(|c| format!("{}:{}", c.year, c.age)).collect()),
    )?;
    Ok(GapSeries {
        series,
        cells,
        exclusions,
    })
}

/// Parses `lo:hi` into an inclusive range.
pub fn parse_range<T: std::str::FromStr + PartialOrd>(text: &str) -> Result<RangeInclusive<T>> {
    let bad = || Error::Config(format!("invalid range `{text}` (expected lo:hi)"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: T = lo.trim().parse().map_err(|_| bad())?;
    let hi: T = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}
