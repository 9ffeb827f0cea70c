//! The query language: parsing, canonical printing, validation against a
//! model, and positioned syntax errors.

use discoscm::query::validate_query;
use discoscm::scenario::builtin;
use discoscm::{Engine, Query};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = builtin("paper200")?.model()?.clone();
    let engine = Engine::new(&model);

    let texts =
        ["P(Y=-1 | T=-1)", "P(Y[T=1]=1, Y[T=-1]=-1 ; group=Sprime)", "E[Y[T=1] ; unit=150]", "P(Y[] in {-1, 0} | T=-1)", "P(Y=-1 | Y=-1, T=-1)"];
    for text in texts {
        let q = Query::parse(text)?;
        println!("{text}\n  canonical: {q}\n  worlds: {}", q.worlds().len());
        match engine.evaluate(&q) {
            Ok(v) => println!("  value: {v}"),
            Err(e) => println!("  refused: {e}"),
        }
    }

    let unknown = Query::parse("P(Z=1 | T=7)")?;
    let report = validate_query(&unknown, &model);
    println!("\nvalidation of `{unknown}`:");
    for v in &report.violations {
        println!("  {v:?}");
    }

    for broken in ["P(Y=-1 |", "P(Y[T=1]=1 | Y[T=-1]=0)", "E[Y"] {
        match Query::parse(broken) {
            Ok(q) => println!("unexpectedly parsed {q}"),
            Err(e) => println!("`{broken}` -> line {}, column {}: {}", e.line, e.column, e.message),
        }
    }
    Ok(())
}
