use crate::distributions::LabeledDataset;
use crate::numkit::Rng;
use crate::{Error, Result};

/// `↓_m`: a uniformly random `⌊n/m⌋`-subset drawn without replacement.
pub fn downsample(data: &LabeledDataset, m: usize, rng: &mut Rng) -> Result<LabeledDataset> {
    if m == 0 {
        return Err(Error::contract("down-sampling factor must be >= 1"));
    }
    let keep = data.len() / m;
    if keep == 0 {
        return Err(Error::contract(format!("down-sampling {} rows by {m} leaves nothing", data.len())));
    }
    let order = rng.permutation(data.len());
    Ok(data.subset(&order[..keep]))
}

/// Splits off `fraction` of every class (rounded, at least one row for
/// classes with two or more rows) as a holdout. Returns `(train, holdout)`,
/// each in shuffled order.
pub fn stratified_split(
    data: &LabeledDataset,
    fraction: f64,
    rng: &mut Rng,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::contract(format!("holdout fraction {fraction} outside (0, 1)")));
    }
    let mut by_class = vec![Vec::new(); data.class_count()];
    for (i, &y) in data.labels().iter().enumerate() {
        by_class[y].push(i);
    }
    let mut train = Vec::with_capacity(data.len());
    let mut hold = Vec::new();
    for mut idx in by_class {
        rng.shuffle(&mut idx);
        let mut k = (idx.len() as f64 * fraction).round() as usize;
        if idx.len() >= 2 {
            k = k.clamp(1, idx.len() - 1);
        } else {
            k = 0;
        }
        hold.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    if hold.is_empty() || train.is_empty() {
        return Err(Error::contract("stratified split produced an empty side"));
    }
    rng.shuffle(&mut train);
    rng.shuffle(&mut hold);
    Ok((data.subset(&train), data.subset(&hold)))
}
