//! Structure files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "ADMS" | u32 version | u8 mode | u32 len | TOML structure spec (len bytes) | u64 seed
//! dataset:   u32 dim | u64 next_id | u64 live | live × (u64 id | dim × f64)
//! estimators: u32 count, then per estimator
//!            u64 seed | u64 hash_evals | u32 G | u64 R | G·R tables (g-major)
//! table:     u64 buckets | per bucket: u32 key_len | key_len × i64 | u64 ids | ids × u64
//! ```
//!
//! Hash functions are not stored; they are regenerated from each estimator's
//! seed. Buckets are written in key order with ids in stored order, so a
//! reloaded structure samples exactly as the original did.

use std::fs;
use std::path::Path;

use super::config::Mode;
use super::structure::{Engine, Structure, StructureSpec};
use crate::adam::AdamHash;
use crate::dataset::{Dataset, PointId};
use crate::error::{Error, Result};
use crate::hbe_multi::MultiHbe;
use crate::hbe_single::SingleHbe;
use crate::lsh::{BucketKey, HashTable};

pub const STRUCTURE_MAGIC: &[u8; 4] = b"ADMS";
pub const STRUCTURE_VERSION: u32 = 1;

pub fn save(s: &Structure, path: &Path) -> Result<()> {
    fs::write(path, encode(s)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Structure> {
    decode(&fs::read(path)?)
}

/// One persisted estimator: seed, hash counter and its `G × R` tables.
struct Block<'a> {
    seed: u64,
    hash_evals: u64,
    tables: Vec<Vec<&'a HashTable>>,
}

fn multi_block(m: &MultiHbe) -> Block<'_> {
    Block {
        seed: m.seed(),
        hash_evals: m.hash_evals(),
        tables: m.tables().iter().map(|row| row.iter().collect()).collect(),
    }
}

fn blocks(s: &Structure) -> Vec<Block<'_>> {
    match s.engine() {
        Engine::Single(e) => vec![Block {
            seed: e.seed(),
            hash_evals: e.hash_evals(),
            tables: vec![e.tables().iter().collect()],
        }],
        Engine::Multi(m) => vec![multi_block(m)],
        Engine::Adam(a) => a.estimators().iter().map(multi_block).collect(),
    }
}

pub fn encode(s: &Structure) -> Result<Vec<u8>> {
    let mut w = Writer::default();
    w.bytes(STRUCTURE_MAGIC);
    w.u32(STRUCTURE_VERSION);
    w.u8(s.mode().to_byte());
    let spec = toml::to_string(s.spec()).map_err(|e| Error::Format(e.to_string()))?;
    w.u32(spec.len() as u32);
    w.bytes(spec.as_bytes());
    w.u64(s.spec().seed);

    let data = s.dataset();
    w.u32(data.dim() as u32);
    w.u64(data.next_id());
    w.u64(data.len() as u64);
    for (id, x) in data.iter() {
        w.u64(id);
        x.iter().for_each(|&v| w.f64(v));
    }

    let blocks = blocks(s);
    w.u32(blocks.len() as u32);
    for b in &blocks {
        w.u64(b.seed);
        w.u64(b.hash_evals);
        w.u32(b.tables.len() as u32);
        w.u64(b.tables[0].len() as u64);
        for table in b.tables.iter().flatten() {
            let buckets = table.sorted_buckets();
            w.u64(buckets.len() as u64);
            for (key, ids) in buckets {
                w.u32(key.components().len() as u32);
                key.components().iter().for_each(|&c| w.i64(c));
                w.u64(ids.len() as u64);
                ids.iter().for_each(|&id| w.u64(id));
            }
        }
    }
    Ok(w.0)
}

pub fn decode(bytes: &[u8]) -> Result<Structure> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != STRUCTURE_MAGIC {
        return Err(Error::Format("bad structure magic".into()));
    }
    let version = r.u32()?;
    if version != STRUCTURE_VERSION {
        return Err(Error::Format(format!("unsupported structure version {version}")));
    }
    let mode = Mode::from_byte(r.u8()?)?;
    let spec_len = r.u32()? as usize;
    let spec_text = std::str::from_utf8(r.take(spec_len)?)
        .map_err(|_| Error::Format("structure spec is not UTF-8".into()))?;
    let mut spec: StructureSpec = toml::from_str(spec_text).map_err(|e| Error::Format(e.to_string()))?;
    spec.seed = r.u64()?;
    if spec.mode != mode {
        return Err(Error::Format("mode byte disagrees with structure spec".into()));
    }

    let data = read_dataset(&mut r)?;
    let count = r.u32()? as usize;
    let mut blocks = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        blocks.push(read_block(&mut r, data.len())?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }

    let families = spec.hash_families(data.dim())?;
    let kernel = spec.kernel.clone();
    let vprof = spec.variance.clone();
    let engine = match mode {
        Mode::Single => {
            let [(seed, evals, tables)]: [OwnedBlock; 1] = blocks
                .try_into()
                .map_err(|_| Error::Format("single structure must hold one estimator".into()))?;
            let [row]: [Vec<HashTable>; 1] = tables
                .try_into()
                .map_err(|_| Error::Format("single structure must hold one family".into()))?;
            let [family]: [_; 1] = families
                .try_into()
                .map_err(|_| Error::Format("single structure must hold one family".into()))?;
            Engine::Single(SingleHbe::restore(data, kernel, vprof, family, spec.hbe_params(), seed, row, evals)?)
        }
        Mode::Multi => {
            let [(seed, evals, tables)]: [OwnedBlock; 1] = blocks
                .try_into()
                .map_err(|_| Error::Format("multi structure must hold one estimator".into()))?;
            Engine::Multi(MultiHbe::restore(data, kernel, vprof, families, spec.hbe_params(), seed, tables, evals)?)
        }
        Mode::Adam => {
            let inner = spec.adam_params().inner();
            let estimators = blocks
                .into_iter()
                .map(|(seed, evals, tables)| {
                    MultiHbe::restore(
                        data.clone(),
                        kernel.clone(),
                        vprof.clone(),
                        families.clone(),
                        inner.clone(),
                        seed,
                        tables,
                        evals,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Engine::Adam(AdamHash::restore(estimators, kernel, spec.adam_params(), spec.seed)?)
        }
    };
    Ok(Structure::from_parts(spec, engine))
}

type OwnedBlock = (u64, u64, Vec<Vec<HashTable>>);

fn read_dataset(r: &mut Reader<'_>) -> Result<Dataset> {
    let dim = r.u32()? as usize;
    let next_id = r.u64()?;
    let live = r.u64()?;
    let mut data = Dataset::new(dim)?;
    let mut coords = vec![0.0; dim];
    for _ in 0..live {
        let id = r.u64()?;
        for c in coords.iter_mut() {
            *c = r.f64()?;
        }
        data.insert_with_id(id, &coords)?;
    }
    if data.next_id() > next_id {
        return Err(Error::Format("point id beyond next_id".into()));
    }
    data.reserve_ids(next_id);
    Ok(data)
}

fn read_block(r: &mut Reader<'_>, n: usize) -> Result<OwnedBlock> {
    let seed = r.u64()?;
    let evals = r.u64()?;
    let g = r.u32()? as usize;
    let reps = r.u64()? as usize;
    if g == 0 || reps == 0 {
        return Err(Error::Format("estimator without tables".into()));
    }
    let mut grid = Vec::with_capacity(g);
    for _ in 0..g {
        let mut row = Vec::with_capacity(reps.min(1 << 20));
        for _ in 0..reps {
            let table = read_table(r)?;
            if table.total_count() != n {
                return Err(Error::Format(format!(
                    "table holds {} ids for {n} points",
                    table.total_count()
                )));
            }
            row.push(table);
        }
        grid.push(row);
    }
    Ok((seed, evals, grid))
}

fn read_table(r: &mut Reader<'_>) -> Result<HashTable> {
    let buckets = r.u64()?;
    let mut out = Vec::with_capacity((buckets as usize).min(1 << 16));
    let mut key = Vec::new();
    for _ in 0..buckets {
        let key_len = r.u32()? as usize;
        key.clear();
        for _ in 0..key_len {
            key.push(r.i64()?);
        }
        let len = r.u64()? as usize;
        let ids = (0..len).map(|_| r.u64()).collect::<Result<Vec<PointId>>>()?;
        out.push((BucketKey::from_components(&key), ids));
    }
    HashTable::from_buckets(out)
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.bytes(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated structure at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        self.array().map(u32::from_le_bytes)
    }
    fn u64(&mut self) -> Result<u64> {
        self.array().map(u64::from_le_bytes)
    }
    fn i64(&mut self) -> Result<i64> {
        self.array().map(i64::from_le_bytes)
    }
    fn f64(&mut self) -> Result<f64> {
        self.array().map(f64::from_le_bytes)
    }
}
