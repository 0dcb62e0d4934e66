//! Id-list arguments and dataset/index loading shared by the commands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gsmi_core::geo::load_dataset;
use gsmi_core::ignvd::IgNvdIndex;
use gsmi_core::{GeoSocialDataset, PoiId};

/// Parses `1,2,3` or `@file` (ids separated by commas or whitespace).
pub fn parse_id_list(arg: &str) -> Result<Vec<u64>> {
    let text = match arg.strip_prefix('@') {
        Some(path) => {
            fs::read_to_string(path).with_context(|| format!("reading id list {path}"))?
        }
        None => arg.to_string(),
    };
    let ids = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u64>()
                .map_err(|_| anyhow::anyhow!("'{s}' is not an id"))
        })
        .collect::<Result<Vec<_>>>()?;
    if ids.is_empty() {
        bail!("id list is empty");
    }
    Ok(ids)
}

pub fn resolve_pois(ds: &GeoSocialDataset, arg: &str) -> Result<Vec<PoiId>> {
    Ok(ds.resolve_pois(&parse_id_list(arg)?)?)
}

pub fn external_pois(ds: &GeoSocialDataset, pois: &[PoiId]) -> Vec<u64> {
    pois.iter().map(|&p| ds.ids.pois[p as usize]).collect()
}

/// Loads the index and its dataset, taking the dataset path recorded in the
/// index when none is given.
pub fn load_pair(index: &Path, dataset: Option<&Path>) -> Result<(GeoSocialDataset, IgNvdIndex)> {
    let idx = IgNvdIndex::load(index)?;
    let dir: PathBuf = match (dataset, &idx.dataset_path) {
        (Some(d), _) => d.to_path_buf(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => bail!("the index does not record its dataset; pass --dataset"),
    };
    let ds = load_dataset(&dir)?;
    idx.check_dataset(&ds)?;
    Ok((ds, idx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_lists() {
        assert_eq!(parse_id_list("3, 1 2").unwrap(), vec![3, 1, 2]);
        assert!(parse_id_list("").is_err());
        assert!(parse_id_list("1,x").is_err());
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("ids.txt");
        fs::write(&f, "7\n8\n").unwrap();
        assert_eq!(
            parse_id_list(&format!("@{}", f.display())).unwrap(),
            vec![7, 8]
        );
    }
}
