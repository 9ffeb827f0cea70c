//! The four headline queries on the 200-unit population, under
//! distribution-consistency and under the classical coupling.

use discoscm::rational::{fmt_decimal, fmt_fraction};
use discoscm::scenario::builtin;
use discoscm::{Coupling, Engine, Query};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = builtin("paper200")?;
    let disco = scenario.model()?.clone();
    let scm = disco.with_coupling(Coupling::Scm);

    println!("{:<32} {:>14} {:>14}", "query", "disco", "scm");
    for text in ["P(Y=-1 | T=-1)", "P(Y[T=-1]=-1)", "P(Y[]=-1 | T=-1)", "P(Y[T=-1]=-1 | T=-1, Y=-1)"] {
        let q = Query::parse(text)?;
        let a = Engine::new(&disco).evaluate(&q)?;
        let b = Engine::new(&scm).evaluate(&q)?;
        println!("{text:<32} {:>6} {:>7} {:>6} {:>7}", fmt_fraction(&a), fmt_decimal(&a, 3), fmt_fraction(&b), fmt_decimal(&b, 3));
    }

    // The exact 200-row table behind the first column.
    let data = discoscm::scenario::exact_table_dataset("paper200")?;
    println!(
        "\nrows: {}, empirical P(Y=-1 | T=-1) = {:?}",
        data.len(),
        data.conditional_frequency(&[("Y", discoscm::rational::int(-1))], &[("T", discoscm::rational::int(-1))]).map(|r| fmt_fraction(&r))
    );
    Ok(())
}
