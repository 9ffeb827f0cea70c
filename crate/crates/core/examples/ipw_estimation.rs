//! Inverse-propensity estimation: exact identity first, then the estimator on
//! simulated data.

use discoscm::rational::int;
use discoscm::sampling::ipw::{ipw_ate_check, ipw_ate_estimate, propensity};
use discoscm::sampling::sample_dataset;
use discoscm::scenario::builtin;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = builtin("paper200-sprime")?.model()?.clone();
    let report = ipw_ate_check(&model, "T", "Y", int(1))?;
    for note in &report.notes {
        println!("{note}");
    }

    let prop = propensity(&model, "T")?;
    for n in [1_000, 10_000, 100_000] {
        let data = sample_dataset(&model, n, 3)?;
        let est = ipw_ate_estimate(&data, &prop, "T", "Y", int(1))?;
        println!("n={n:>6}: E[Y(T=1)] ~ {:.4} +- {:.4}", est.point, est.stderr);
    }

    // The full population has units that are never treated.
    let full = builtin("paper200")?.model()?.clone();
    if let Err(e) = ipw_ate_check(&full, "T", "Y", int(1)) {
        println!("paper200: {e}");
    }
    Ok(())
}
