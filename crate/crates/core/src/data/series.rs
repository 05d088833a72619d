use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::attribution::{Site, World};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 6] = ["date", "site_id", "lon", "lat", "value", "world"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub date: NaiveDate,
    pub site_id: String,
    pub lon: f64,
    pub lat: f64,
    pub value: f64,
    pub world: World,
}

/// Daily two-world records in file order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GriddedSeries {
    pub records: Vec<Record>,
}

impl GriddedSeries {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Sites of one world in order of first appearance.
    pub fn sites(&self, world: World) -> Vec<Site> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .filter(|r| r.world == world && seen.insert(r.site_id.as_str()))
            .map(|r| Site::new(r.site_id.clone(), r.lon, r.lat))
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    date: String,
    site_id: String,
    lon: f64,
    lat: f64,
    value: f64,
    world: u8,
}

/// Parses the `date,site_id,lon,lat,value,world` schema. Row numbers in
/// errors count the header as row 1.
pub fn read_gridded_csv<R: Read>(reader: R) -> Result<GriddedSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != CSV_HEADER {
        return Err(Error::Schema {
            row: 1,
            message: format!("expected header {}, got {}", CSV_HEADER.join(","), got.join(",")),
        });
    }
    let mut records = Vec::new();
    let mut keys = HashSet::new();
    for (i, raw) in rdr.deserialize::<RawRecord>().enumerate() {
        let row = i + 2;
        let raw = raw.map_err(|e| Error::Schema {
            row,
            message: e.to_string(),
        })?;
        let date = NaiveDate::parse_from_str(raw.date.trim(), "%Y-%m-%d").map_err(|e| Error::Schema {
            row,
            message: format!("bad date {:?}: {e}", raw.date),
        })?;
        let world = World::from_code(raw.world).ok_or_else(|| Error::Schema {
            row,
            message: format!("world must be 0 or 1, got {}", raw.world),
        })?;
        if !raw.value.is_finite() || raw.value < 0.0 {
            return Err(Error::Schema {
                row,
                message: format!("value must be finite and nonnegative, got {}", raw.value),
            });
        }
        if !raw.lon.is_finite() || !raw.lat.is_finite() {
            return Err(Error::Schema {
                row,
                message: "coordinates must be finite".into(),
            });
        }
        if raw.site_id.is_empty() {
            return Err(Error::Schema {
                row,
                message: "empty site_id".into(),
            });
        }
        if !keys.insert((date, raw.site_id.clone(), world)) {
            return Err(Error::Schema {
                row,
                message: format!("duplicate key ({date}, {}, {})", raw.site_id, world.code()),
            });
        }
        records.push(Record {
            date,
            site_id: raw.site_id,
            lon: raw.lon,
            lat: raw.lat,
            value: raw.value,
            world,
        });
    }
    Ok(GriddedSeries { records })
}

pub fn load_gridded_csv(path: &Path) -> Result<GriddedSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    read_gridded_csv(std::io::BufReader::new(file))
}

pub fn write_gridded_csv<W: Write>(series: &GriddedSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in &series.records {
        w.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            r.site_id.clone(),
            r.lon.to_string(),
            r.lat.to_string(),
            r.value.to_string(),
            r.world.code().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_gridded_csv(series: &GriddedSeries, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_gridded_csv(series, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "date,site_id,lon,lat,value,world\n";

    #[test]
    fn empty_file_with_header() {
        assert!(read_gridded_csv(HEADER.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn duplicate_key_names_row() {
        let text = format!("{HEADER}2000-01-01,a,0,0,1.0,0\n2000-01-02,a,0,0,1.0,0\n2000-01-01,a,0,0,2.0,0\n");
        match read_gridded_csv(text.as_bytes()) {
            Err(Error::Schema { row, .. }) => assert_eq!(row, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_rows() {
        for body in [
            "2000-13-01,a,0,0,1.0,0",
            "2000-01-01,a,0,0,NaN,0",
            "2000-01-01,a,0,0,-1,0",
            "2000-01-01,a,0,0,1.0,2",
            "2000-01-01,a,0,0",
        ] {
            let text = format!("{HEADER}{body}\n");
            assert!(
                matches!(read_gridded_csv(text.as_bytes()), Err(Error::Schema { row: 2, .. })),
                "{body}"
            );
        }
        assert!(matches!(
            read_gridded_csv("date,site,lon,lat,value,world\n".as_bytes()),
            Err(Error::Schema { row: 1, .. })
        ));
    }

    #[test]
    fn round_trip() {
        let text = format!("{HEADER}2000-01-01,a,1.5,-2,0.125,0\n2000-01-01,b,3,4,7,1\n");
        let s = read_gridded_csv(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_gridded_csv(&s, &mut out).unwrap();
        assert_eq!(read_gridded_csv(out.as_slice()).unwrap(), s);
        assert_eq!(s.sites(World::Factual), vec![Site::new("b", 3.0, 4.0)]);
    }
}
