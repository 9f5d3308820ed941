//! In-memory data files and the formatting shared by every table.

use anyhow::Result;

/// One file a command produces, named relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Shortest round-trip decimal, switching to exponent form for very small or large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Comma-separated, header first, LF line endings.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new()
            .delimiter(b',')
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Table { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(self, name: &str) -> Result<Artifact> {
        let bytes = self.writer.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(Artifact { name: name.into(), bytes })
    }
}

pub fn json_artifact<T: serde::Serialize>(name: &str, value: &T) -> Result<Artifact> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(Artifact { name: name.into(), bytes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, 1.0, 0.5, 1e-20, 123.456, 0.0001, 9.99e-5, 0.1 + 0.2, -3.5e-7, 1e300] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert!(s.len() < 30, "{s}");
        }
        assert_eq!(num(1e-20), "1e-20");
        assert_eq!(num(0.25), "0.25");
    }

    #[test]
    fn lf_endings_and_quoting() {
        let mut t = Table::new(&["a", "b"]).unwrap();
        t.row(["1", "x,y"]).unwrap();
        let a = t.finish("t.csv").unwrap();
        assert_eq!(String::from_utf8(a.bytes).unwrap(), "a,b\n1,\"x,y\"\n");
    }
}
