//! Binary model files.
//!
//! Everything is little-endian; reals are stored as their IEEE-754 bit
//! patterns so a write/read cycle is bit-exact.
//!
//! ```text
//! ensemble := "PVPRENS\0" u32:version grid_rows:u32 grid_cols:u32 z:u32
//!             voting:u8 master_seed:u64 template:unit_config n_places:u64
//!             unit{r*c*z}                      (group-major, then unit)
//! unit     := "PVPRUNT\0" unit_config n_places:u64
//!             mask:u64{hidden*32} weights:f64{n_places*hidden} bias:f64{n_places}
//! unit_config := hidden:u64 density:f64 wta:f64 lr:f64 epochs:u64 seed:u64
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use patchvpr_core::{
    DrosoNetModel, EnsembleConfig, GridShape, PatchEnsemble, Projection, UnitConfig, VotingMode, PATCH_LEN,
};

use crate::error::{Error, Result};

const ENSEMBLE_MAGIC: &[u8; 8] = b"PVPRENS\0";
const UNIT_MAGIC: &[u8; 8] = b"PVPRUNT\0";
const VERSION: u32 = 1;
const MASK_WORDS: usize = PATCH_LEN / 64;

struct Writer<W>(W);

impl<W: Write> Writer<W> {
    fn bytes(&mut self, b: &[u8]) -> io::Result<()> {
        self.0.write_all(b)
    }
    fn u8(&mut self, v: u8) -> io::Result<()> {
        self.bytes(&[v])
    }
    fn u32(&mut self, v: u32) -> io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> io::Result<()> {
        self.u64(v.to_bits())
    }

    fn unit_config(&mut self, c: &UnitConfig) -> io::Result<()> {
        self.u64(c.hidden_units as u64)?;
        self.f64(c.projection_density)?;
        self.f64(c.wta_keep_fraction)?;
        self.f64(c.learning_rate)?;
        self.u64(c.epochs as u64)?;
        self.u64(c.seed)
    }

    fn unit(&mut self, m: &DrosoNetModel) -> io::Result<()> {
        self.bytes(UNIT_MAGIC)?;
        self.unit_config(m.config())?;
        self.u64(m.n_places() as u64)?;
        for &w in m.projection().mask() {
            self.u64(w)?;
        }
        for &w in m.out_weights() {
            self.f64(w)?;
        }
        for &b in m.out_bias() {
            self.f64(b)?;
        }
        Ok(())
    }
}

/// Decoding failures carry a message; the caller attaches the path.
type Decode<T> = std::result::Result<T, String>;

struct Reader<R>(R);

impl<R: Read> Reader<R> {
    fn array<const N: usize>(&mut self) -> Decode<[u8; N]> {
        let mut buf = [0u8; N];
        self.0.read_exact(&mut buf).map_err(|_| "unexpected end of file".to_string())?;
        Ok(buf)
    }
    fn u8(&mut self) -> Decode<u8> {
        Ok(self.array::<1>()?[0])
    }
    fn u32(&mut self) -> Decode<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Decode<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn usize(&mut self, limit: usize, what: &str) -> Decode<usize> {
        let v = self.u64()?;
        if v > limit as u64 {
            return Err(format!("{what} = {v} is implausibly large"));
        }
        Ok(v as usize)
    }
    fn f64(&mut self) -> Decode<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn magic(&mut self, expected: &[u8; 8]) -> Decode<()> {
        if &self.array::<8>()? != expected {
            return Err("bad magic bytes".into());
        }
        Ok(())
    }

    fn unit_config(&mut self) -> Decode<UnitConfig> {
        Ok(UnitConfig {
            hidden_units: self.usize(1 << 20, "hidden_units")?,
            projection_density: self.f64()?,
            wta_keep_fraction: self.f64()?,
            learning_rate: self.f64()?,
            epochs: self.usize(usize::MAX, "epochs")?,
            seed: self.u64()?,
        })
    }

    fn unit(&mut self) -> Decode<DrosoNetModel> {
        self.magic(UNIT_MAGIC)?;
        let config = self.unit_config()?;
        let n_places = self.usize(1 << 24, "n_places")?;
        let hidden = config.hidden_units;
        let mask = (0..hidden * MASK_WORDS).map(|_| self.u64()).collect::<Decode<Vec<_>>>()?;
        let weights = (0..n_places * hidden).map(|_| self.f64()).collect::<Decode<Vec<_>>>()?;
        let bias = (0..n_places).map(|_| self.f64()).collect::<Decode<Vec<_>>>()?;
        let projection = Projection::from_mask(hidden, mask).map_err(|e| e.to_string())?;
        DrosoNetModel::from_parts(config, n_places, projection, weights, bias).map_err(|e| e.to_string())
    }

    fn ensemble(&mut self) -> Decode<PatchEnsemble> {
        self.magic(ENSEMBLE_MAGIC)?;
        let version = self.u32()?;
        if version != VERSION {
            return Err(format!("unsupported format version {version}"));
        }
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        let z = self.u32()? as usize;
        let voting = match self.u8()? {
            0 => VotingMode::Soft,
            1 => VotingMode::Hard,
            v => return Err(format!("unknown voting mode tag {v}")),
        };
        let master_seed = self.u64()?;
        let unit_config = self.unit_config()?;
        let n_places = self.usize(1 << 24, "n_places")?;
        let grid = GridShape::new(rows, cols).map_err(|e| e.to_string())?;
        let config = EnsembleConfig { grid, units_per_patch: z, unit_config, voting, master_seed };
        let mut groups = Vec::with_capacity(grid.cells());
        for _ in 0..grid.cells() {
            groups.push((0..z).map(|_| self.unit()).collect::<Decode<Vec<_>>>()?);
        }
        if self.0.read(&mut [0u8; 1]).map_err(|e| e.to_string())? != 0 {
            return Err("trailing bytes after the last unit".into());
        }
        PatchEnsemble::from_groups(config, n_places, groups).map_err(|e| e.to_string())
    }
}

pub fn encode_unit(model: &DrosoNetModel) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.unit(model).expect("writing to memory cannot fail");
    w.0
}

pub fn decode_unit(bytes: &[u8]) -> std::result::Result<DrosoNetModel, String> {
    let mut r = Reader(bytes);
    let m = r.unit()?;
    if !r.0.is_empty() {
        return Err("trailing bytes after unit".into());
    }
    Ok(m)
}

pub fn encode_ensemble(ensemble: &PatchEnsemble) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    let c = ensemble.config();
    let write = |w: &mut Writer<Vec<u8>>| -> io::Result<()> {
        w.bytes(ENSEMBLE_MAGIC)?;
        w.u32(VERSION)?;
        w.u32(c.grid.rows() as u32)?;
        w.u32(c.grid.cols() as u32)?;
        w.u32(c.units_per_patch as u32)?;
        w.u8(match c.voting {
            VotingMode::Soft => 0,
            VotingMode::Hard => 1,
        })?;
        w.u64(c.master_seed)?;
        w.unit_config(&c.unit_config)?;
        w.u64(ensemble.n_places() as u64)?;
        for unit in ensemble.units() {
            w.unit(unit)?;
        }
        Ok(())
    };
    write(&mut w).expect("writing to memory cannot fail");
    w.0
}

pub fn decode_ensemble(bytes: &[u8]) -> std::result::Result<PatchEnsemble, String> {
    Reader(bytes).ensemble()
}

pub fn save_ensemble(path: impl AsRef<Path>, ensemble: &PatchEnsemble) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ensemble(ensemble)).map_err(|e| Error::io(path, e))
}

pub fn load_ensemble(path: impl AsRef<Path>) -> Result<PatchEnsemble> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ensemble(&bytes).map_err(|msg| Error::format(path, msg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use patchvpr_core::ImageTensor;

    fn tiny_ensemble(mode: VotingMode) -> PatchEnsemble {
        let refs: Vec<ImageTensor> = (0..3)
            .map(|n| ImageTensor::from_fn(40, 70, |r, c| ((r * (n + 2) + c) % 9) as f64 / 8.0))
            .collect();
        let mut cfg = EnsembleConfig::new(GridShape::new(2, 1).unwrap(), 2);
        cfg.unit_config.epochs = 3;
        cfg.unit_config.hidden_units = 16;
        cfg.voting = mode;
        cfg.master_seed = 99;
        PatchEnsemble::build_and_train(cfg, &refs).unwrap()
    }

    #[test]
    fn ensemble_round_trip_is_exact() {
        for mode in [VotingMode::Soft, VotingMode::Hard] {
            let e = tiny_ensemble(mode);
            let bytes = encode_ensemble(&e);
            let back = decode_ensemble(&bytes).unwrap();
            assert_eq!(back, e);
            assert_eq!(encode_ensemble(&back), bytes);
        }
    }

    #[test]
    fn unit_round_trip_is_exact() {
        let e = tiny_ensemble(VotingMode::Soft);
        let unit = &e.groups()[1][0];
        assert_eq!(&decode_unit(&encode_unit(unit)).unwrap(), unit);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = encode_ensemble(&tiny_ensemble(VotingMode::Soft));
        assert!(decode_ensemble(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_ensemble(&extra).is_err());
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(decode_ensemble(&bad).is_err());
    }
}
