//! COMPAS two-year-scores ingestion.
//!
//! Each retained defendant contributes their decile score to the period
//! `⌈days / period_days⌉` of their re-offense. Rows are grouped by race
//! (subgroup) and recharge degree (trajectory), and an observation is the
//! mean score within a period.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use ncfair_core::{ObservationKey, TrajectorySet};
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompasFilter {
    pub races: BTreeSet<String>,
    pub sex: String,
    pub age_range: (f64, f64),
    pub max_priors: u32,
    pub charge_degree: String,
    pub recharge_degrees: BTreeSet<String>,
    pub period_days: u32,
}

impl Default for CompasFilter {
    fn default() -> Self {
        CompasFilter {
            races: ["African-American", "Caucasian"].map(String::from).into(),
            sex: "Male".into(),
            age_range: (25.0, 45.0),
            max_priors: 1,
            charge_degree: "M".into(),
            recharge_degrees: ["M1", "M2"].map(String::from).into(),
            period_days: 20,
        }
    }
}

impl CompasFilter {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.age_range;
        if !(lo <= hi) {
            return Err(ncfair_core::Error::invalid(format!("age range [{lo}, {hi}] is empty")).into());
        }
        if self.period_days == 0 {
            return Err(ncfair_core::Error::invalid("period_days must be at least 1").into());
        }
        Ok(())
    }
}

/// Column names for each field the extraction reads. Missing keys in a JSON
/// column map fall back to the public two-year-scores names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub race: String,
    pub sex: String,
    pub age: String,
    pub priors_count: String,
    pub charge_degree: String,
    pub two_year_recid: String,
    pub recharge_degree: String,
    pub days_to_rearrest: String,
    pub decile_score: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            race: "race".into(),
            sex: "sex".into(),
            age: "age".into(),
            priors_count: "priors_count".into(),
            charge_degree: "c_charge_degree".into(),
            two_year_recid: "two_year_recid".into(),
            recharge_degree: "r_charge_degree".into(),
            days_to_rearrest: "end".into(),
            decile_score: "decile_score".into(),
        }
    }
}

impl ColumnMap {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompasExtraction {
    pub data: TrajectorySet,
    /// Rows that passed the filter and landed in some period.
    pub retained: usize,
}

/// "(M1)" and "M1" both read as "M1".
fn degree(raw: &str) -> &str {
    raw.trim().trim_start_matches('(').trim_end_matches(')').trim()
}

pub fn compas_extract(
    csv_path: impl AsRef<Path>,
    filter: &CompasFilter,
    columns: &ColumnMap,
) -> Result<CompasExtraction> {
    let path = csv_path.as_ref();
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    compas_extract_from_reader(file, filter, columns)
}

pub fn compas_extract_from_reader<R: Read>(
    input: R,
    filter: &CompasFilter,
    columns: &ColumnMap,
) -> Result<CompasExtraction> {
    filter.validate()?;
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = r.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IoError::MissingColumn(name.to_string()))
    };
    let race = col(&columns.race)?;
    let sex = col(&columns.sex)?;
    let age = col(&columns.age)?;
    let priors = col(&columns.priors_count)?;
    let charge = col(&columns.charge_degree)?;
    let recid = col(&columns.two_year_recid)?;
    let recharge = col(&columns.recharge_degree)?;
    let days = col(&columns.days_to_rearrest)?;
    let score = col(&columns.decile_score)?;

    // (race, recharge degree, period) -> (sum, count)
    let mut bins: BTreeMap<(String, String, u32), (f64, usize)> = BTreeMap::new();
    let mut retained = 0;
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let number = |i: usize, what: &str| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| IoError::parse(line, format!("non-numeric {what} '{}'", field(i))))
        };
        if !filter.races.contains(field(race))
            || field(sex) != filter.sex
            || degree(field(charge)) != filter.charge_degree
            || !filter.recharge_degrees.contains(degree(field(recharge)))
        {
            continue;
        }
        let a = number(age, "age")?;
        if a < filter.age_range.0 || a > filter.age_range.1 {
            continue;
        }
        if number(priors, "priors count")? > f64::from(filter.max_priors) {
            continue;
        }
        if number(recid, "recidivism label")? != 1.0 {
            continue;
        }
        let s = number(score, "score")?;
        let d = number(days, "days to rearrest")?;
        if d < 1.0 {
            continue;
        }
        let t = (d / f64::from(filter.period_days)).ceil() as u32;
        let bin = bins
            .entry((field(race).to_string(), degree(field(recharge)).to_string(), t))
            .or_insert((0.0, 0));
        bin.0 += s;
        bin.1 += 1;
        retained += 1;
    }
    let mut data = TrajectorySet::new();
    for ((s, i, t), (sum, n)) in bins {
        data.insert(ObservationKey::new(s, i, t), sum / n as f64)?;
    }
    Ok(CompasExtraction { data, retained })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "id,race,sex,age,priors_count,c_charge_degree,two_year_recid,r_charge_degree,end,decile_score";

    fn run(rows: &[&str], filter: &CompasFilter) -> Result<CompasExtraction> {
        let text = std::iter::once(HEADER).chain(rows.iter().copied()).collect::<Vec<_>>().join("\n");
        compas_extract_from_reader(text.as_bytes(), filter, &ColumnMap::default())
    }

    #[test]
    fn binning_and_averaging() {
        let rows = [
            "1,Caucasian,Male,30,0,M,1,(M1),5,4",
            "2,Caucasian,Male,31,1,M,1,(M1),15,6",
            "3,Caucasian,Male,40,0,M,1,(M1),45,8",
            "4,Caucasian,Female,30,0,M,1,(M1),5,10",
            "5,Caucasian,Male,30,0,F,1,(M1),5,10",
            "6,Caucasian,Male,30,0,M,0,(M1),5,10",
        ];
        let out = run(&rows, &CompasFilter::default()).unwrap();
        assert_eq!(out.retained, 3);
        let traj = out.data.trajectory("Caucasian", "M1");
        assert_eq!(traj, BTreeMap::from([(1, 5.0), (3, 8.0)]));
        assert_eq!(out.data.len(), 2);
    }

    #[test]
    fn priors_filter() {
        let rows = ["1,Caucasian,Male,30,5,M,1,(M2),5,4"];
        let filter = CompasFilter {
            max_priors: 2,
            ..CompasFilter::default()
        };
        let out = run(&rows, &filter).unwrap();
        assert!(out.data.is_empty());
        assert_eq!(out.retained, 0);
    }

    #[test]
    fn window_edges() {
        // days 20 is the last day of period 1, 21 the first of period 2
        let rows = [
            "1,African-American,Male,30,0,M,1,(M2),20,2",
            "2,African-American,Male,30,0,M,1,(M2),21,3",
            "3,African-American,Male,30,0,M,1,(M2),0,9",
        ];
        let out = run(&rows, &CompasFilter::default()).unwrap();
        assert_eq!(
            out.data.trajectory("African-American", "M2"),
            BTreeMap::from([(1, 2.0), (2, 3.0)])
        );
    }

    #[test]
    fn errors() {
        let text = "race,sex\nCaucasian,Male\n";
        let err = compas_extract_from_reader(text.as_bytes(), &CompasFilter::default(), &ColumnMap::default());
        assert!(matches!(err, Err(IoError::MissingColumn(c)) if c == "age"));
        let rows = ["1,Caucasian,Male,30,0,M,1,(M1),5,high"];
        assert!(matches!(
            run(&rows, &CompasFilter::default()),
            Err(IoError::Parse { line: 2, .. })
        ));
        let bad = CompasFilter {
            period_days: 0,
            ..CompasFilter::default()
        };
        assert!(run(&[], &bad).is_err());
    }

    #[test]
    fn column_map_defaults_fill_in() {
        let m: ColumnMap = serde_json::from_str(r#"{"days_to_rearrest": "r_days"}"#).unwrap();
        assert_eq!(m.days_to_rearrest, "r_days");
        assert_eq!(m.race, "race");
        assert!(serde_json::from_str::<ColumnMap>(r#"{"rase": "x"}"#).is_err());
    }
}
