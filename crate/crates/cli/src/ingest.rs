//! Assay CSV reading and writing.
//!
//! Schema: `Fe,SiO2,Al2O3,P,LOI,TiO2,MgO,Mn,CaO,S,geozone,group`. Analytes are
//! non-negative numbers on any consistent scale; each row is closed to unit
//! sum. Extra columns are ignored.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use logratio_core::dataset::{Group, GroupMap, LabeledDataset};
use logratio_core::simplex::{closure, ANALYTES};

use crate::error::{io_err, Error, Result};

pub const ZONE_COLUMN: &str = "geozone";
pub const GROUP_COLUMN: &str = "group";

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedAssays {
    pub dataset: LabeledDataset,
    /// Number of zero analyte values that were replaced.
    pub zeros_replaced: usize,
}

pub fn load_assays(path: &Path, zero_replacement: f64) -> Result<LoadedAssays> {
    let file = File::open(path).map_err(io_err(path))?;
    read_assays(file, zero_replacement)
}

/// Parses assay CSV text. Zero analytes become `zero_replacement` times the
/// row total before closure.
pub fn read_assays<R: Read>(reader: R, zero_replacement: f64) -> Result<LoadedAssays> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let analyte_cols = ANALYTES.iter().map(|a| column(a)).collect::<Result<Vec<_>>>()?;
    let zone_col = column(ZONE_COLUMN)?;
    let group_col = column(GROUP_COLUMN)?;

    let mut raw_rows = Vec::new();
    let mut zones: BTreeMap<String, Group> = BTreeMap::new();
    let mut row_zones = Vec::new();
    let mut zeros_replaced = 0;
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let field = |c: usize| record.get(c).unwrap_or("");
        let mut values = Vec::with_capacity(ANALYTES.len());
        for (&c, name) in analyte_cols.iter().zip(ANALYTES) {
            let text = field(c);
            let v: f64 = text.parse().map_err(|_| Error::ParseError {
                row,
                column: name.to_string(),
                value: text.to_string(),
            })?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::ParseError {
                    row,
                    column: name.to_string(),
                    value: text.to_string(),
                });
            }
            values.push(v);
        }
        let total: f64 = values.iter().sum();
        if total == 0.0 {
            return Err(Error::ZeroHandlingError { row });
        }
        for v in values.iter_mut().filter(|v| **v == 0.0) {
            *v = zero_replacement * total;
            zeros_replaced += 1;
        }
        raw_rows.push(values);

        let zone = field(zone_col).to_string();
        let group_text = field(group_col);
        let group: Group = group_text.parse().map_err(|_| Error::ParseError {
            row,
            column: GROUP_COLUMN.to_string(),
            value: group_text.to_string(),
        })?;
        if let Some(&seen) = zones.get(&zone) {
            if seen != group {
                return Err(Error::InconsistentGroup {
                    zone,
                    first: seen.to_string(),
                    second: group.to_string(),
                });
            }
        } else {
            zones.insert(zone.clone(), group);
        }
        row_zones.push(zone);
    }
    if zeros_replaced > 0 {
        log::warn!("replaced {zeros_replaced} zero analyte value(s) before closure");
    }

    let zone_names: Vec<String> = zones.keys().cloned().collect();
    let index: BTreeMap<&str, usize> = zone_names.iter().enumerate().map(|(i, z)| (z.as_str(), i)).collect();
    let labels = row_zones.iter().map(|z| index[z.as_str()]).collect();
    let rows = raw_rows.iter().map(|v| closure(v)).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(LoadedAssays {
        dataset: LabeledDataset {
            part_names: ANALYTES.iter().map(|s| s.to_string()).collect(),
            groups: GroupMap::new(zones.values().copied().collect()),
            zone_names,
            rows,
            labels,
        },
        zeros_replaced,
    })
}

/// Writes a dataset in the assay schema, analytes in weight percent.
pub fn write_assays<W: Write>(dataset: &LabeledDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = dataset.part_names.iter().map(String::as_str).collect();
    header.push(ZONE_COLUMN);
    header.push(GROUP_COLUMN);
    w.write_record(&header)?;
    for (row, &label) in dataset.rows.iter().zip(&dataset.labels) {
        let mut fields: Vec<String> = row.parts().iter().map(|p| format!("{}", p * 100.0)).collect();
        fields.push(dataset.zone_names[label].clone());
        fields.push(dataset.groups.get(label)?.to_string());
        w.write_record(&fields)?;
    }
    w.flush().map_err(io_err("<csv output>"))?;
    Ok(())
}

pub fn save_assays(dataset: &LabeledDataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_assays(dataset, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Fe,SiO2,Al2O3,P,LOI,TiO2,MgO,Mn,CaO,S,geozone,group\n";

    #[test]
    fn rows_are_closed() {
        let text = format!("{HEADER}60,5,2.5,0.1,9,0.1,0.1,0.1,0.1,22.2,z1,M\n");
        let a = read_assays(text.as_bytes(), 1e-6).unwrap();
        let parts = a.dataset.rows[0].parts();
        assert!((parts.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((parts[0] - 60.0 / 99.2).abs() < 1e-15);
        assert_eq!(a.zeros_replaced, 0);
    }

    #[test]
    fn zeros_are_replaced_before_closure() {
        let text = format!("{HEADER}60,5,2.5,0,9,0.1,0.1,0.1,0.1,23.1,z1,M\n");
        let a = read_assays(text.as_bytes(), 1e-6).unwrap();
        assert_eq!(a.zeros_replaced, 1);
        let parts = a.dataset.rows[0].parts();
        // replaced value is 1e-6 of the original total, which closure keeps
        let want = 1e-6 / (1.0 + 1e-6);
        assert!((parts[3] - want).abs() < 1e-18);
    }

    #[test]
    fn malformed_cells_name_row_and_column() {
        let text = format!("{HEADER}60,5,2.5,0.1,9,0.1,0.1,0.1,0.1,22.2,z1,M\n60,5,x,0.1,9,0.1,0.1,0.1,0.1,22.2,z1,M\n");
        match read_assays(text.as_bytes(), 1e-6) {
            Err(Error::ParseError { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "Al2O3", "x"));
            }
            other => panic!("{other:?}"),
        }
        let text = format!("{HEADER}0,0,0,0,0,0,0,0,0,0,z1,M\n");
        assert!(matches!(read_assays(text.as_bytes(), 1e-6), Err(Error::ZeroHandlingError { row: 1 })));
        let text = "Fe,SiO2,geozone,group\n1,2,z,M\n";
        assert!(matches!(read_assays(text.as_bytes(), 1e-6), Err(Error::MissingColumn(c)) if c == "Al2O3"));
        let text = format!("{HEADER}60,5,2.5,0.1,9,0.1,0.1,0.1,0.1,22.2,z1,Q\n");
        assert!(matches!(read_assays(text.as_bytes(), 1e-6), Err(Error::ParseError { column, .. }) if column == "group"));
        let text = format!("{HEADER}1,1,1,1,1,1,1,1,1,1,z1,M\n1,1,1,1,1,1,1,1,1,1,z1,U\n");
        assert!(matches!(read_assays(text.as_bytes(), 1e-6), Err(Error::InconsistentGroup { .. })));
    }

    #[test]
    fn zones_are_indexed_in_sorted_order() {
        let text = format!("{HEADER}1,1,1,1,1,1,1,1,1,1,b,U\n1,1,1,1,1,1,1,1,1,1,a,M\n");
        let a = read_assays(text.as_bytes(), 1e-6).unwrap();
        assert_eq!(a.dataset.zone_names, vec!["a", "b"]);
        assert_eq!(a.dataset.labels, vec![1, 0]);
        assert_eq!(a.dataset.groups.as_slice(), &[Group::M, Group::U]);
    }
}
