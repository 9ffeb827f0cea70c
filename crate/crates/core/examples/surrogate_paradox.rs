//! Surrogate paradox: T raises S and S raises Y, yet T does nothing for Y,
//! because the two effects live in different halves of the population.

use discoscm::rational::{fmt_fraction, int};
use discoscm::scenario::builtin;
use discoscm::Engine;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = builtin("surrogate")?.model()?.clone();
    let engine = Engine::new(&model);
    for (cause, effect) in [("T", "S"), ("S", "Y"), ("T", "Y")] {
        let ate = engine.cate(|_| true, cause, int(1), int(0), effect)?;
        println!("effect {cause} -> {effect}: {}", fmt_fraction(&ate));
        for group in ["A", "Aprime"] {
            let g = engine.cate(|u| model.group_name_of(u) == group, cause, int(1), int(0), effect)?;
            println!("    within {group:<6}: {}", fmt_fraction(&g));
        }
    }
    Ok(())
}
