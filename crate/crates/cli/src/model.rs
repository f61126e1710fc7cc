//! Model files: the forest together with the training data and CSV schema it
//! needs to compute out-of-bag weights at prediction time.
//!
//! Layout (little endian): magic `FEMODEL1`, schema JSON length (u64) and
//! bytes, `n` and `p` (u64), `n * p` covariates and `n` responses (f64 bits),
//! then the forest in its own versioned encoding.

use std::io::{Read, Write};

use anyhow::{bail, ensure, Context, Result};
use forest_error::sim::CsvSchema;
use forest_error::{Dataset, Forest};

const MAGIC: &[u8; 8] = b"FEMODEL1";

pub struct ModelFile {
    pub schema: CsvSchema,
    pub data: Dataset,
    pub forest: Forest,
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).context("model file is truncated")?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes).context("model file is truncated")?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
        .collect())
}

impl ModelFile {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.write_all(MAGIC)?;
        let schema = serde_json::to_vec(&self.schema)?;
        out.write_all(&(schema.len() as u64).to_le_bytes())?;
        out.write_all(&schema)?;
        out.write_all(&(self.data.n() as u64).to_le_bytes())?;
        out.write_all(&(self.data.p() as u64).to_le_bytes())?;
        for v in self.data.x().iter().chain(self.data.y()) {
            out.write_all(&v.to_bits().to_le_bytes())?;
        }
        self.forest.write_to(&mut out)?;
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).context("model file is truncated")?;
        if &magic != MAGIC {
            bail!("not a forest-error model file");
        }
        let schema_len = usize::try_from(read_u64(&mut r)?)?;
        ensure!(schema_len <= r.len(), "model file is truncated");
        let (schema_bytes, rest) = r.split_at(schema_len);
        let schema: CsvSchema = serde_json::from_slice(schema_bytes).context("model schema is corrupt")?;
        r = rest;
        let n = usize::try_from(read_u64(&mut r)?)?;
        let p = usize::try_from(read_u64(&mut r)?)?;
        let cells = n
            .checked_mul(p)
            .filter(|c| c.saturating_add(n).saturating_mul(8) <= r.len());
        let Some(cells) = cells else {
            bail!("model file is truncated")
        };
        let x = read_f64s(&mut r, cells)?;
        let y = read_f64s(&mut r, n)?;
        let data = Dataset::from_flat(x, y, p)?;
        let forest = Forest::from_bytes(r)?;
        ensure!(
            forest.train_n() == n && forest.train_p() == p && schema.p() == p,
            "model file sections disagree on the data shape"
        );
        Ok(Self { schema, data, forest })
    }
}
