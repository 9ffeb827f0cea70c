//! Abduction: who is likely behind an observation, and what they would do
//! under another treatment.

use discoscm::exact::abduce;
use discoscm::query::Event;
use discoscm::rational::{fmt_fraction, int};
use discoscm::scenario::builtin;
use discoscm::{Engine, Query};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = builtin("paper200")?.model()?.clone();
    for (t, y) in [(-1, -1), (-1, -2), (1, 2)] {
        let post = abduce(&model, &[Event::factual("T", int(t)), Event::factual("Y", int(y))])?;
        println!(
            "T={t}, Y={y}: P(S)={}, P(Sprime)={}",
            fmt_fraction(&post.group_mass(&model, "S")),
            fmt_fraction(&post.group_mass(&model, "Sprime"))
        );
    }

    let engine = Engine::new(&model);
    let q = Query::parse("E[Y[T=1] | T=-1, Y=-1]")?;
    println!("{q} = {}", fmt_fraction(&engine.evaluate(&q)?));
    println!("same via abduction route: {}", fmt_fraction(&engine.evaluate_by_abduction(&q)?));
    Ok(())
}
