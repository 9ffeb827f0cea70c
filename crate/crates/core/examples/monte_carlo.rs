//! Seeded Monte-Carlo estimates next to their exact values.

use num_traits::ToPrimitive;

use discoscm::sampling::{mc_valuation, sample_dataset};
use discoscm::scenario::builtin;
use discoscm::{exact, Query};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = builtin("paper200")?.model()?.clone();
    let seed = 2024;
    for text in ["P(Y[T=-1]=-1)", "P(Y[]=-1 | T=-1)", "P(Y[T=-1]=-1 | T=-1, Y=-1)", "E[Y[T=1] ; group=S]"] {
        let q = Query::parse(text)?;
        let truth = exact::evaluate(&model, &q)?.to_f64().unwrap_or(f64::NAN);
        let est = mc_valuation(&model, &q, 200_000, seed)?;
        let (lo, hi) = est.interval(1.96);
        println!("{text:<30} exact {truth:.4}  mc {:.4} [{lo:.4}, {hi:.4}] from {} draws", est.point, est.n);
    }

    let data = sample_dataset(&model, 10, seed)?;
    println!("\nfirst sampled records:");
    for r in &data.records {
        println!("  unit {:>3}: {:?}", r.unit.0, r.values.iter().map(discoscm::rational::fmt_value).collect::<Vec<_>>());
    }
    Ok(())
}
