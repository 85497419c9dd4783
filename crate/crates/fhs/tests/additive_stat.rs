//! Selection behavior of the additive sampler across shrinkage scales.

use fhs::additive::{backfit_chain, select_components, AdditiveDesign};
use fhs::harness::gen_additive_setting;
use fhs::sampler::{derive_seed, FhsConfig, ShrinkageScale};

/// Mean spurious-selection count over replicates at a given b, with its
/// standard error.
fn spurious_rate(b: ShrinkageScale, reps: u64) -> (f64, f64) {
    let mut counts = Vec::new();
    for rep in 0..reps {
        let data = gen_additive_setting(1, 150, Some(20), derive_seed(501, rep)).unwrap();
        let design = AdditiveDesign::from_columns(&data.x, &data.y, 8, 3).unwrap();
        let cfg = FhsConfig {
            b,
            n_iter: 2500,
            n_burnin: 800,
            seed: derive_seed(502, rep),
            ..FhsConfig::default()
        };
        let draws = backfit_chain(&design, &cfg).unwrap();
        let sel = select_components(&draws, &design, 0.95, 101).unwrap();
        let (_, _, fp, _) = sel.confusion(&data.active);
        counts.push(fp as f64);
    }
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>()
        / (counts.len() - 1).max(1) as f64;
    (mean, (var / counts.len() as f64).sqrt())
}

#[test]
fn stronger_shrinkage_never_selects_more_spurious_components() {
    let reps = 12;
    let (loose_mean, loose_se) = spurious_rate(ShrinkageScale::Fixed(1e-2), reps);
    let (auto_mean, auto_se) = spurious_rate(ShrinkageScale::Auto, reps);
    // auto b = n^{-k/2} is far smaller than 1e-2: the spurious count must
    // not increase, within 3 standard errors
    assert!(
        auto_mean <= loose_mean + 3.0 * (loose_se + auto_se),
        "auto-b spurious {auto_mean} (se {auto_se}) vs b=1e-2 {loose_mean} (se {loose_se})"
    );
    // and both regimes keep spurious selections rare on this problem
    assert!(auto_mean < 1.0 && loose_mean < 2.0);
}
