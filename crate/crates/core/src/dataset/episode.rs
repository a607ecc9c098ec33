//! Balanced attack-vs-benign episodes for meta-learning.

use rand::seq::index::sample;

use crate::rng::stream_rng;

use super::{BinaryLabel, DatasetError, FlowRecord, MinMaxScaler, Taxonomy};

/// Records drawn per class into every episode.
pub const EPISODE_CLASS_SIZE: usize = 128;

/// A balanced binary task: 128 records of one attack type vs 128 benign.
///
/// Indices point into the record slice the episode was sampled from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Episode {
    pub attack_type: String,
    pub attack_indices: Vec<usize>,
    pub benign_indices: Vec<usize>,
}

impl Episode {
    /// Scales the episode's records and pairs them with binary targets
    /// (0 = normal, 1 = attack), attacks first.
    pub fn materialize(
        &self,
        records: &[FlowRecord],
        scaler: &MinMaxScaler,
    ) -> Result<(Vec<Vec<f64>>, Vec<usize>), DatasetError> {
        let mut xs = Vec::with_capacity(self.attack_indices.len() + self.benign_indices.len());
        let mut ys = Vec::with_capacity(xs.capacity());
        for &i in &self.attack_indices {
            xs.push(scaler.transform(&records[i].features)?);
            ys.push(1);
        }
        for &i in &self.benign_indices {
            xs.push(scaler.transform(&records[i].features)?);
            ys.push(0);
        }
        Ok((xs, ys))
    }
}

/// Samples one episode for `attack_type` against benign traffic.
///
/// `attack_type` may name a category (all its subtypes pool together) or a
/// single subtype; category names win when both match. Sampling is uniform
/// without replacement, deterministic for a fixed seed.
pub fn sample_episode(
    records: &[FlowRecord],
    taxonomy: &Taxonomy,
    attack_type: &str,
    seed: u64,
) -> Result<Episode, DatasetError> {
    let category = super::Category::parse(attack_type).filter(|c| *c != super::Category::Benign);
    let subtype = taxonomy
        .lookup(attack_type)
        .filter(|t| t.binary == BinaryLabel::Attack)
        .map(|t| t.subtype);

    let mut attack_pool = Vec::new();
    let mut benign_pool = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if r.label.binary == BinaryLabel::Benign {
            benign_pool.push(i);
            continue;
        }
        let matches = match (category, subtype) {
            (Some(c), _) => r.label.category == c,
            (None, Some(s)) => r.label.subtype == s,
            (None, None) => false,
        };
        if matches {
            attack_pool.push(i);
        }
    }

    let need = EPISODE_CLASS_SIZE;
    if attack_pool.len() < need {
        return Err(DatasetError::InsufficientInstances {
            class: attack_type.to_string(),
            have: attack_pool.len(),
            need,
        });
    }
    if benign_pool.len() < need {
        return Err(DatasetError::InsufficientInstances {
            class: "Benign".to_string(),
            have: benign_pool.len(),
            need,
        });
    }

    let draw = |pool: &[usize], stream: u64| -> Vec<usize> {
        let mut rng = stream_rng(seed, stream);
        let mut picked: Vec<usize> = sample(&mut rng, pool.len(), need)
            .into_iter()
            .map(|k| pool[k])
            .collect();
        picked.sort_unstable();
        picked
    };
    Ok(Episode {
        attack_type: attack_type.to_string(),
        attack_indices: draw(&attack_pool, 0),
        benign_indices: draw(&benign_pool, 1),
    })
}

#[cfg(test)]
mod tests {
    use super::super::Taxonomy;
    use super::*;

    fn records_of(counts: &[(&str, usize)]) -> Vec<FlowRecord> {
        let taxonomy = Taxonomy::default_iomt();
        let mut records = Vec::new();
        for &(name, count) in counts {
            let label = taxonomy.lookup(name).unwrap();
            for k in 0..count {
                records.push(FlowRecord {
                    features: vec![k as f64],
                    label,
                });
            }
        }
        records
    }

    #[test]
    fn category_episode_pools_all_subtypes() {
        let records = records_of(&[
            ("Benign", 200),
            ("DDoS SYN", 70),
            ("DDoS UDP", 70),
            ("DoS TCP", 300),
        ]);
        let taxonomy = Taxonomy::default_iomt();
        let ep = sample_episode(&records, &taxonomy, "DDoS", 7).unwrap();
        assert_eq!(ep.attack_indices.len(), EPISODE_CLASS_SIZE);
        assert_eq!(ep.benign_indices.len(), EPISODE_CLASS_SIZE);
        for &i in &ep.attack_indices {
            assert_eq!(records[i].label.category, super::super::Category::Ddos);
        }
        for &i in &ep.benign_indices {
            assert_eq!(records[i].label.binary, BinaryLabel::Benign);
        }
    }

    #[test]
    fn exact_pool_is_drawn_exhaustively() {
        let records = records_of(&[("Benign", 128), ("Port Scan", 128)]);
        let taxonomy = Taxonomy::default_iomt();
        let ep = sample_episode(&records, &taxonomy, "Port Scan", 3).unwrap();
        let attacks: Vec<usize> = (128..256).collect();
        assert_eq!(ep.attack_indices, attacks);
        assert_eq!(ep.benign_indices, (0..128).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_same_episode() {
        let records = records_of(&[("Benign", 400), ("OS Scan", 400)]);
        let taxonomy = Taxonomy::default_iomt();
        let a = sample_episode(&records, &taxonomy, "OS Scan", 11).unwrap();
        let b = sample_episode(&records, &taxonomy, "OS Scan", 11).unwrap();
        let c = sample_episode(&records, &taxonomy, "OS Scan", 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn short_pool_reports_counts() {
        let records = records_of(&[("Benign", 200), ("Ping Sweep", 90)]);
        let taxonomy = Taxonomy::default_iomt();
        let err = sample_episode(&records, &taxonomy, "Ping Sweep", 0).unwrap_err();
        match err {
            DatasetError::InsufficientInstances { class, have, need } => {
                assert_eq!(class, "Ping Sweep");
                assert_eq!(have, 90);
                assert_eq!(need, 128);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_attack_type_reports_empty_pool() {
        let records = records_of(&[("Benign", 200), ("DoS TCP", 200)]);
        let taxonomy = Taxonomy::default_iomt();
        let err = sample_episode(&records, &taxonomy, "Smurf", 0).unwrap_err();
        assert!(matches!(
            err,
            DatasetError::InsufficientInstances { have: 0, .. }
        ));
    }
}
