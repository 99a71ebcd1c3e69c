use std::fs;
use std::io::{self, Write};
use std::path::Path as FsPath;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Configuration;
use crate::sampling::{CovarianceSpec, GmmSampler, DEFAULT_SIGMA};
use crate::workspace::{
    canonicalize, distance_sq, Descriptor, LocalPrimitive, DEFAULT_DISTANCE_THRESHOLD,
};

pub const FORMAT_VERSION: u32 = 1;
/// Entries closer than this (squared descriptor distance) are duplicates.
pub const DEDUP_DISTANCE_SQ: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub created: String,
    pub configs_before: usize,
    pub configs_after: usize,
}

#[derive(Debug, Clone)]
pub struct DatabaseEntry {
    pub canonical_descriptor: Descriptor,
    pub sampler: GmmSampler,
    pub provenance: Provenance,
}

/// Local samplers keyed by canonical primitive descriptors.
#[derive(Debug, Clone)]
pub struct ExperienceDatabase {
    pub dof: usize,
    pub sigma: f64,
    pub distance_threshold: f64,
    entries: Vec<DatabaseEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inserted {
    Added(usize),
    Replaced(usize),
}

/// A sampler fetched for a query primitive, already rotated onto it.
#[derive(Debug, Clone)]
pub struct Retrieved {
    pub sampler: GmmSampler,
    pub entry_index: usize,
    pub distance_sq: f64,
    /// Rotation added to the first joint of every stored mean.
    pub theta: f64,
}

impl ExperienceDatabase {
    pub fn new(dof: usize) -> Self {
        ExperienceDatabase {
            dof,
            sigma: DEFAULT_SIGMA,
            distance_threshold: DEFAULT_DISTANCE_THRESHOLD,
            entries: Vec::new(),
        }
    }

    pub fn with_threshold(mut self, d: f64) -> Self {
        self.distance_threshold = d;
        self
    }

    pub fn entries(&self) -> &[DatabaseEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds an entry, replacing any entry with a near-identical descriptor.
    pub fn insert(&mut self, entry: DatabaseEntry) -> Result<Inserted> {
        check_entry(&entry, self.dof).map_err(|message| Error::MalformedEntry {
            index: self.entries.len(),
            message,
        })?;
        if let Some((i, d)) = self.nearest(&entry.canonical_descriptor) {
            if d < DEDUP_DISTANCE_SQ {
                self.entries[i] = entry;
                return Ok(Inserted::Replaced(i));
            }
        }
        self.entries.push(entry);
        Ok(Inserted::Added(self.entries.len() - 1))
    }

    /// Closest entry by squared descriptor distance; ties go to the lower index.
    pub fn nearest(&self, descriptor: &Descriptor) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in self.entries.iter().enumerate() {
            let d = distance_sq(&e.canonical_descriptor, descriptor);
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((i, d));
            }
        }
        best
    }

    /// Looks up the stored primitive nearest to `lw` after canonicalization
    /// and, when it lies within the distance threshold, returns its sampler
    /// rotated back onto `lw`.
    pub fn retrieve(&self, lw: &LocalPrimitive) -> Option<Retrieved> {
        let origin = Point2::origin();
        let local = LocalPrimitive::from_descriptor(&lw.descriptor, origin).ok()?;
        let canon = canonicalize(&local, origin).ok()?;
        let (i, d) = self.nearest(&canon.primitive.descriptor)?;
        if d >= self.distance_threshold {
            return None;
        }
        Some(Retrieved {
            sampler: transform_sampler(&self.entries[i].sampler, -canon.theta),
            entry_index: i,
            distance_sq: d,
            theta: -canon.theta,
        })
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let text = self.to_json()?;
        let mut f = fs::File::create(path)?;
        f.write_all(text.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        ExperienceDatabase::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = DbFile {
            format_version: FORMAT_VERSION,
            dof: self.dof,
            sigma: self.sigma,
            distance_threshold: self.distance_threshold,
            entries: self
                .entries
                .iter()
                .map(|e| EntryFile {
                    canonical_descriptor: e.canonical_descriptor,
                    means: e.sampler.means().map(|m| m.angles().to_vec()).collect(),
                    covariances: e.sampler.covariances().cloned().collect(),
                    weights: e.sampler.weights().to_vec(),
                    provenance: e.provenance.clone(),
                })
                .collect(),
        };
        to_precise_json(&file)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DbFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        if !(file.distance_threshold > 0.0) {
            return Err(Error::Parse("distance_threshold must be positive".into()));
        }
        let mut entries = Vec::with_capacity(file.entries.len());
        for (index, e) in file.entries.into_iter().enumerate() {
            let malformed = |message: String| Error::MalformedEntry { index, message };
            if let Some(m) = e.means.iter().find(|m| m.len() != file.dof) {
                return Err(malformed(format!(
                    "mean has {} joints, expected {}",
                    m.len(),
                    file.dof
                )));
            }
            let means = e.means.into_iter().map(Configuration::new).collect();
            let sampler = GmmSampler::new(means, e.covariances, e.weights)
                .map_err(|err| malformed(err.to_string()))?;
            let entry = DatabaseEntry {
                canonical_descriptor: e.canonical_descriptor,
                sampler,
                provenance: e.provenance,
            };
            check_entry(&entry, file.dof).map_err(malformed)?;
            entries.push(entry);
        }
        Ok(ExperienceDatabase {
            dof: file.dof,
            sigma: file.sigma,
            distance_threshold: file.distance_threshold,
            entries,
        })
    }
}

fn check_entry(e: &DatabaseEntry, dof: usize) -> std::result::Result<(), String> {
    let d = &e.canonical_descriptor;
    if d.iter().any(|x| !x.is_finite()) {
        return Err("descriptor has non-finite values".into());
    }
    if d[1].abs() > 1e-9 || d[0] <= 0.0 {
        return Err("descriptor is not canonical (circle a must lie on the +x axis)".into());
    }
    if !(d[2] > 0.0 && d[5] > 0.0) {
        return Err("descriptor radii must be positive".into());
    }
    if e.sampler.dof() != dof {
        return Err(format!(
            "sampler has {} joints, database has {dof}",
            e.sampler.dof()
        ));
    }
    Ok(())
}

/// Adds `theta` to the first joint of every mean; covariances and weights
/// are unchanged.
pub fn transform_sampler(g: &GmmSampler, theta: f64) -> GmmSampler {
    g.rotated(theta)
}

#[derive(Serialize, Deserialize)]
struct DbFile {
    format_version: u32,
    dof: usize,
    sigma: f64,
    distance_threshold: f64,
    entries: Vec<EntryFile>,
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    canonical_descriptor: Descriptor,
    means: Vec<Vec<f64>>,
    covariances: Vec<CovarianceSpec>,
    weights: Vec<f64>,
    provenance: Provenance,
}

/// Pretty JSON with every float written to 17 significant digits.
pub fn to_precise_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter::default());
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
}

#[derive(Default)]
struct PreciseFormatter {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl serde_json::ser::Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}
