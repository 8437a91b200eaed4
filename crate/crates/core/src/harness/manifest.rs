//! Dataset manifests: which files make up a dataset and how it is split.
//!
//! ```text
//! [dataset]
//! name = DRIVE
//! modality = fundus
//! polarity = dark-on-bright
//! train = 21
//! test = 01,02
//!
//! [entry 21]
//! image = training/21_training.png
//! gt = training/21_manual1.png
//! fov = training/21_mask.png
//! ```
//!
//! Paths are relative to the manifest's directory unless absolute. Lines
//! starting with `#` are comments.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::filters::Polarity;
use crate::raster::ChannelPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Modality {
    #[default]
    Fundus,
    Fa,
    Slo,
}

impl Modality {
    /// Vessels are dark in fundus and SLO images, bright in angiograms.
    pub fn default_polarity(self) -> Polarity {
        match self {
            Modality::Fa => Polarity::BrightOnDark,
            Modality::Fundus | Modality::Slo => Polarity::DarkOnBright,
        }
    }

    pub fn channel_policy(self) -> ChannelPolicy {
        match self {
            Modality::Fundus => ChannelPolicy::GreenOfRgb,
            Modality::Fa | Modality::Slo => ChannelPolicy::Luminance,
        }
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fundus" => Ok(Modality::Fundus),
            "fa" => Ok(Modality::Fa),
            "slo" => Ok(Modality::Slo),
            _ => Err(Error::MalformedManifest(format!("unknown modality '{s}'"))),
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Fundus => "fundus",
            Modality::Fa => "FA",
            Modality::Slo => "SLO",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub image: PathBuf,
    pub gt: PathBuf,
    pub fov: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub name: String,
    pub modality: Modality,
    pub polarity: Polarity,
    pub entries: Vec<ManifestEntry>,
    pub train: Vec<String>,
    pub test: Vec<String>,
    /// Directory relative entry paths are resolved against.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedManifest(m));
        if self.entries.is_empty() {
            return bad("no entries".into());
        }
        if self.test.is_empty() {
            return bad("empty test list".into());
        }
        let mut ids = HashSet::new();
        for e in &self.entries {
            if !ids.insert(e.id.as_str()) {
                return bad(format!("duplicate entry '{}'", e.id));
            }
        }
        for id in self.train.iter().chain(&self.test) {
            if !ids.contains(id.as_str()) {
                return bad(format!("id '{id}' has no entry"));
            }
        }
        if let Some(id) = self.train.iter().find(|id| self.test.contains(id)) {
            return bad(format!("id '{id}' is in both train and test"));
        }
        for list in [&self.train, &self.test] {
            let mut seen = HashSet::new();
            if let Some(id) = list.iter().find(|id| !seen.insert(id.as_str())) {
                return bad(format!("id '{id}' listed twice"));
            }
        }
        Ok(())
    }

    pub fn entry(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut name = None;
        let mut modality = None;
        let mut polarity = None;
        let mut train = None;
        let mut test = None;
        // id, image, gt, fov as read so far
        type RawEntry = (String, Option<PathBuf>, Option<PathBuf>, Option<PathBuf>);
        let mut entries: Vec<RawEntry> = Vec::new();
        enum Section {
            None,
            Dataset,
            Entry,
        }
        let mut section = Section::None;
        let err = |n: usize, m: String| Error::MalformedManifest(format!("line {}: {m}", n + 1));

        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let header = header.trim();
                section = if header == "dataset" {
                    Section::Dataset
                } else if let Some(id) = header.strip_prefix("entry ") {
                    let id = id.trim();
                    if id.is_empty() {
                        return Err(err(n, "entry without id".into()));
                    }
                    entries.push((id.to_string(), None, None, None));
                    Section::Entry
                } else {
                    return Err(err(n, format!("unknown section '{header}'")));
                };
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(n, format!("expected key = value, got '{line}'")))?;
            let ids = |v: &str| -> Vec<String> {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            };
            match section {
                Section::None => return Err(err(n, "key outside a section".into())),
                Section::Dataset => match key {
                    "name" => name = Some(value.to_string()),
                    "modality" => modality = Some(value.parse::<Modality>()?),
                    "polarity" => {
                        polarity = Some(value.parse::<Polarity>().map_err(|_| {
                            err(n, format!("unknown polarity '{value}'"))
                        })?)
                    }
                    "train" => train = Some(ids(value)),
                    "test" => test = Some(ids(value)),
                    _ => return Err(err(n, format!("unknown dataset key '{key}'"))),
                },
                Section::Entry => {
                    let e = entries.last_mut().expect("entry section has an entry");
                    let slot = match key {
                        "image" => &mut e.1,
                        "gt" => &mut e.2,
                        "fov" => &mut e.3,
                        _ => return Err(err(n, format!("unknown entry key '{key}'"))),
                    };
                    *slot = Some(PathBuf::from(value));
                }
            }
        }

        let missing = |what: &str| Error::MalformedManifest(format!("missing {what}"));
        let modality = modality.unwrap_or_default();
        let manifest = DatasetManifest {
            name: name.ok_or_else(|| missing("dataset name"))?,
            modality,
            polarity: polarity.unwrap_or(modality.default_polarity()),
            entries: entries
                .into_iter()
                .map(|(id, image, gt, fov)| {
                    Ok(ManifestEntry {
                        image: image.ok_or_else(|| missing(&format!("image for entry '{id}'")))?,
                        gt: gt.ok_or_else(|| missing(&format!("gt for entry '{id}'")))?,
                        fov,
                        id,
                    })
                })
                .collect::<Result<_>>()?,
            train: train.ok_or_else(|| missing("train list"))?,
            test: test.ok_or_else(|| missing("test list"))?,
            base_dir: base_dir.into(),
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "[dataset]\nname = {}\nmodality = {}\npolarity = {}\ntrain = {}\ntest = {}\n",
            self.name,
            self.modality,
            self.polarity,
            self.train.join(","),
            self.test.join(",")
        );
        for e in &self.entries {
            s += &format!(
                "\n[entry {}]\nimage = {}\ngt = {}\n",
                e.id,
                e.image.display(),
                e.gt.display()
            );
            if let Some(f) = &e.fov {
                s += &format!("fov = {}\n", f.display());
            }
        }
        s
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    DatasetManifest::parse(&text, base)
}

pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, manifest.to_text()).map_err(|e| Error::write(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[dataset]\nname = toy\ntrain = 1\ntest = 2\n\n[entry 1]\nimage = a.png\ngt = a_gt.png\n\n[entry 2]\nimage = b.png\ngt = b_gt.png\nfov = b_fov.png\n";

    #[test]
    fn minimal_manifest_parses() {
        let m = DatasetManifest::parse(MINIMAL, "/data").unwrap();
        assert_eq!(m.train, ["1"]);
        assert_eq!(m.test, ["2"]);
        assert_eq!(m.modality, Modality::Fundus);
        assert_eq!(m.polarity, Polarity::DarkOnBright);
        assert_eq!(m.resolve(&m.entry("2").unwrap().image), PathBuf::from("/data/b.png"));
        assert_eq!(m.entry("1").unwrap().fov, None);
    }

    #[test]
    fn invalid_manifests_are_rejected() {
        let cases = [
            MINIMAL.replace("test = 2", "test = 1"),
            MINIMAL.replace("test = 2", "test ="),
            MINIMAL.replace("test = 2", "test = 3"),
            MINIMAL.replace("name = toy", "colour = red"),
            MINIMAL.replace("gt = a_gt.png", "mask = a_gt.png"),
            MINIMAL.replace("gt = a_gt.png\n", ""),
            MINIMAL.replace("[entry 2]", "[entry 1]"),
            MINIMAL.replace("modality", "x").replace("name = toy", "name = toy\nmodality = xray"),
            "just text".to_string(),
        ];
        for text in cases {
            assert!(
                matches!(DatasetManifest::parse(&text, "."), Err(Error::MalformedManifest(_))),
                "accepted:\n{text}"
            );
        }
    }

    #[test]
    fn modality_sets_default_polarity() {
        let m = DatasetManifest::parse(&MINIMAL.replace("name = toy", "name = toy\nmodality = FA"), ".").unwrap();
        assert_eq!(m.polarity, Polarity::BrightOnDark);
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let m = DatasetManifest::parse(MINIMAL, dir.path()).unwrap();
        write_manifest(&m, &path).unwrap();
        assert_eq!(load_manifest(&path).unwrap(), m);
    }
}
