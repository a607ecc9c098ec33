//! Attack taxonomy: subtype names and their owning categories.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BinaryLabel, DatasetError, LabelTriple};

/// Traffic category, the middle level of the label hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Benign,
    Spoofing,
    Recon,
    Mqtt,
    Dos,
    Ddos,
}

impl Category {
    /// All categories in canonical order (benign first, then attack groups).
    pub const ALL: [Category; 6] = [
        Category::Benign,
        Category::Spoofing,
        Category::Recon,
        Category::Mqtt,
        Category::Dos,
        Category::Ddos,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Benign => "Benign",
            Category::Spoofing => "Spoofing",
            Category::Recon => "Recon",
            Category::Mqtt => "MQTT",
            Category::Dos => "DoS",
            Category::Ddos => "DDoS",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL.iter().copied().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Index of a subtype within its taxonomy's name list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubtypeId(pub u16);

/// Maps subtype names to categories and assigns each subtype a dense id.
///
/// Exactly one entry carries the [`Category::Benign`] category and it must be
/// named `"Benign"`, so the three label granularities can never disagree
/// about what counts as normal traffic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Taxonomy {
    names: Vec<String>,
    categories: Vec<Category>,
    #[serde(skip, default)]
    index: HashMap<String, u16>,
}

impl PartialEq for Taxonomy {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.categories == other.categories
    }
}

impl Taxonomy {
    /// Builds a taxonomy from ordered `(subtype name, category)` pairs.
    pub fn from_pairs<S: Into<String>>(
        pairs: impl IntoIterator<Item = (S, Category)>,
    ) -> Result<Taxonomy, DatasetError> {
        let mut names = Vec::new();
        let mut categories = Vec::new();
        let mut index = HashMap::new();
        let mut benign_seen = false;
        for (name, category) in pairs {
            let name = name.into();
            if category == Category::Benign {
                if name != "Benign" {
                    return Err(DatasetError::BadTaxonomy(format!(
                        "subtype {name:?} may not map to category Benign"
                    )));
                }
                benign_seen = true;
            } else if name == "Benign" {
                return Err(DatasetError::BadTaxonomy(
                    "subtype \"Benign\" must map to category Benign".into(),
                ));
            }
            let id = names.len() as u16;
            if index.insert(name.clone(), id).is_some() {
                return Err(DatasetError::BadTaxonomy(format!(
                    "duplicate subtype {name:?}"
                )));
            }
            names.push(name);
            categories.push(category);
        }
        if !benign_seen {
            return Err(DatasetError::BadTaxonomy(
                "taxonomy has no Benign entry".into(),
            ));
        }
        Ok(Taxonomy {
            names,
            categories,
            index,
        })
    }

    /// The default medical-IoT taxonomy: Benign plus 18 attack subtypes in
    /// five categories.
    pub fn default_iomt() -> Taxonomy {
        use Category::*;
        Taxonomy::from_pairs([
            ("Benign", Benign),
            ("ARP Spoofing", Spoofing),
            ("Ping Sweep", Recon),
            ("Recon VulScan", Recon),
            ("OS Scan", Recon),
            ("Port Scan", Recon),
            ("Malformed Data", Mqtt),
            ("DoS Connect Flood", Mqtt),
            ("DDoS Connect Flood", Mqtt),
            ("DDoS Publish Flood", Mqtt),
            ("DoS Publish Flood", Mqtt),
            ("DoS TCP", Dos),
            ("DoS ICMP", Dos),
            ("DoS SYN", Dos),
            ("DoS UDP", Dos),
            ("DDoS SYN", Ddos),
            ("DDoS TCP", Ddos),
            ("DDoS ICMP", Ddos),
            ("DDoS UDP", Ddos),
        ])
        .expect("built-in taxonomy is valid")
    }

    /// Reads a taxonomy from a `subtype = category` text file.
    ///
    /// Blank lines and `#` comments are skipped. A `Benign = Benign` line is
    /// implied if absent.
    pub fn from_file(path: &Path) -> Result<Taxonomy, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
        let mut pairs: Vec<(String, Category)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, category) = line.split_once('=').ok_or_else(|| {
                DatasetError::BadTaxonomy(format!(
                    "{} line {}: expected `subtype = category`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let category = Category::parse(category.trim()).ok_or_else(|| {
                DatasetError::BadTaxonomy(format!(
                    "{} line {}: unknown category {:?}",
                    path.display(),
                    lineno + 1,
                    category.trim()
                ))
            })?;
            pairs.push((name.trim().to_string(), category));
        }
        if !pairs.iter().any(|(n, _)| n == "Benign") {
            pairs.insert(0, ("Benign".into(), Category::Benign));
        }
        Taxonomy::from_pairs(pairs)
    }

    /// Writes the taxonomy in the same `subtype = category` format.
    pub fn write_file(&self, path: &Path) -> Result<(), DatasetError> {
        let mut out = String::new();
        for (name, category) in self.names.iter().zip(&self.categories) {
            out.push_str(name);
            out.push_str(" = ");
            out.push_str(category.as_str());
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| DatasetError::io(path, e))
    }

    /// Resolves a subtype name to its full label triple.
    pub fn lookup(&self, subtype: &str) -> Option<LabelTriple> {
        let id = *self.index.get(subtype)?;
        let category = self.categories[id as usize];
        let binary = if category == Category::Benign {
            BinaryLabel::Benign
        } else {
            BinaryLabel::Attack
        };
        Some(LabelTriple {
            binary,
            category,
            subtype: SubtypeId(id),
        })
    }

    pub fn subtype_name(&self, id: SubtypeId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn category_of(&self, id: SubtypeId) -> Category {
        self.categories[id.0 as usize]
    }

    pub fn n_subtypes(&self) -> usize {
        self.names.len()
    }

    pub fn subtype_names(&self) -> &[String] {
        &self.names
    }

    /// Subtype names belonging to one category, in taxonomy order.
    pub fn subtypes_of(&self, category: Category) -> Vec<String> {
        self.names
            .iter()
            .zip(&self.categories)
            .filter(|(_, c)| **c == category)
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Rebuilds the name index after deserialisation.
    pub(crate) fn reindex(&mut self) {
        self.index = self
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u16))
            .collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_taxonomy_has_nineteen_subtypes() {
        let t = Taxonomy::default_iomt();
        assert_eq!(t.n_subtypes(), 19);
        assert_eq!(t.subtypes_of(Category::Ddos).len(), 4);
        assert_eq!(t.subtypes_of(Category::Dos).len(), 4);
        assert_eq!(t.subtypes_of(Category::Recon).len(), 4);
        assert_eq!(t.subtypes_of(Category::Mqtt).len(), 5);
        assert_eq!(t.subtypes_of(Category::Spoofing).len(), 1);
        assert_eq!(t.subtypes_of(Category::Benign), vec!["Benign".to_string()]);
    }

    #[test]
    fn lookup_builds_consistent_triples() {
        let t = Taxonomy::default_iomt();
        let triple = t.lookup("DDoS SYN").unwrap();
        assert_eq!(triple.binary, BinaryLabel::Attack);
        assert_eq!(triple.category, Category::Ddos);
        assert_eq!(t.subtype_name(triple.subtype), "DDoS SYN");

        let benign = t.lookup("Benign").unwrap();
        assert_eq!(benign.binary, BinaryLabel::Benign);
        assert_eq!(benign.category, Category::Benign);
        assert!(t.lookup("Teardrop").is_none());
    }

    #[test]
    fn non_benign_name_cannot_claim_benign_category() {
        let err = Taxonomy::from_pairs([("Quiet", Category::Benign)]).unwrap_err();
        assert!(matches!(err, DatasetError::BadTaxonomy(_)));
    }

    #[test]
    fn duplicate_subtype_rejected() {
        let err = Taxonomy::from_pairs([
            ("Benign", Category::Benign),
            ("DoS TCP", Category::Dos),
            ("DoS TCP", Category::Ddos),
        ])
        .unwrap_err();
        assert!(matches!(err, DatasetError::BadTaxonomy(_)));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("taxonomy.txt");
        let t = Taxonomy::default_iomt();
        t.write_file(&path).unwrap();
        let back = Taxonomy::from_file(&path).unwrap();
        assert_eq!(t, back);
    }
}
