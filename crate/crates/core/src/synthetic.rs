//! Seeded synthetic trial data with the column layout of the ACTG 175
//! analysis file, for examples and tests when the real data is unavailable.
//!
//! Columns: `treat` (1 = two-drug), `cd420`, `cd820`, `gender` (1 = male),
//! `age`, `race`, `drugs`, `karnof_cat` (0, 1, 2), `cd40`, `cd80`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{ColumnMapping, Dataset};

pub const COLUMNS: [&str; 10] = [
    "treat", "cd420", "cd820", "gender", "age", "race", "drugs", "karnof_cat", "cd40", "cd80",
];

/// Generates `n` rows. With `confounded`, treatment assignment depends on
/// baseline CD4, age and drug use; otherwise it is randomized 2:1.
pub fn trial_columns(n: usize, seed: u64, confounded: bool) -> BTreeMap<String, Vec<f64>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut cols: BTreeMap<String, Vec<f64>> = COLUMNS.iter().map(|c| (c.to_string(), Vec::with_capacity(n))).collect();
    let noise4 = Normal::<f64>::new(0.0, 110.0).unwrap();
    let noise8 = Normal::<f64>::new(0.0, 330.0).unwrap();
    let cd4 = Normal::<f64>::new(350.0, 115.0).unwrap();
    let cd8 = Normal::<f64>::new(990.0, 460.0).unwrap();
    let age = Normal::<f64>::new(35.0, 8.7).unwrap();
    for _ in 0..n {
        let gender = f64::from(u8::from(rng.random::<f64>() < 0.83));
        let race = f64::from(u8::from(rng.random::<f64>() < 0.29));
        let drugs = f64::from(u8::from(rng.random::<f64>() < 0.13));
        let u: f64 = rng.random();
        let karnof = if u < 0.10 { 0.0 } else if u < 0.55 { 1.0 } else { 2.0 };
        let x4: f64 = cd4.sample(&mut rng).clamp(10.0, 1200.0);
        let x8: f64 = cd8.sample(&mut rng).clamp(40.0, 5000.0);
        let a_age: f64 = age.sample(&mut rng).clamp(12.0, 70.0);
        let p_treat = if confounded {
            let lin = 0.7 + 0.002 * (x4 - 350.0) - 0.02 * (a_age - 35.0) - 0.5 * drugs;
            1.0 / (1.0 + (-lin).exp())
        } else {
            2.0 / 3.0
        };
        let treat = f64::from(u8::from(rng.random::<f64>() < p_treat));
        let effect4 = 50.0 + 0.04 * (x4 - 350.0) + 10.0 * gender;
        let y4 = (90.0 + 0.75 * x4 + treat * effect4 - 30.0 * gender + 1.2 * (a_age - 35.0)
            + noise4.sample(&mut rng))
        .max(0.0);
        let y8 = (180.0 + 0.8 * x8 + 5.0 * treat + noise8.sample(&mut rng)).max(0.0);
        for (name, v) in [
            ("treat", treat),
            ("cd420", y4.round()),
            ("cd820", y8.round()),
            ("gender", gender),
            ("age", a_age.round()),
            ("race", race),
            ("drugs", drugs),
            ("karnof_cat", karnof),
            ("cd40", x4.round()),
            ("cd80", x8.round()),
        ] {
            cols.get_mut(name).unwrap().push(v);
        }
    }
    cols
}

/// Mapping used by the case-study analyses on this layout.
pub fn trial_mapping() -> ColumnMapping {
    ColumnMapping {
        action: "treat".into(),
        outcomes: vec!["cd420".into(), "cd820".into()],
        modifiers: vec!["gender".into(), "cd40".into()],
        confounders: vec![
            "age".into(),
            "race".into(),
            "drugs".into(),
            "karnof_cat".into(),
            "cd40".into(),
            "cd80".into(),
        ],
    }
}

pub fn trial_dataset(n: usize, seed: u64, confounded: bool) -> Dataset {
    Dataset::new(trial_columns(n, seed, confounded), trial_mapping()).expect("synthetic data is valid")
}
