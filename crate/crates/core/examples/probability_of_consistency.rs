//! Probability of consistency on the incentive population: how likely a
//! user who chose t under strategy s would choose t again if s were applied.

use discoscm::rational::{fmt_decimal, fmt_fraction, int};
use discoscm::scenario::builtin;
use discoscm::{Coupling, Engine, EngineError, Query};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = builtin("incentive")?.model()?.clone();
    let scm = model.with_coupling(Coupling::Scm);
    let noise = [("E_T".to_string(), int(1)), ("E_Y".to_string(), int(1))].into();

    println!("{:>4} {:<7} {:>5} {:>3} {:>10} {:>8} {:>4}", "unit", "group", "x", "t", "PC", "", "scm");
    for u in model.units().step_by(3) {
        let row = model.solve(u, &noise)?;
        let (s, x) = (row["S"], row["X"]);
        for t in [0, 1] {
            let q = Query::parse(&format!("P(T[S={s}]={t} | S={s}, T={t} ; unit={u})"))?;
            match Engine::new(&model).evaluate(&q) {
                Ok(pc) => {
                    let classic = Engine::new(&scm).evaluate(&q)?;
                    println!(
                        "{:>4} {:<7} {:>5} {t:>3} {:>10} {:>8} {:>4}",
                        u.0,
                        model.group_name_of(u),
                        discoscm::rational::fmt_value(&x),
                        fmt_fraction(&pc),
                        fmt_decimal(&pc, 3),
                        fmt_fraction(&classic)
                    );
                }
                Err(EngineError::NullEvidence(_)) => {
                    println!("{:>4} {:<7} {:>5} {t:>3} {:>10}", u.0, model.group_name_of(u), discoscm::rational::fmt_value(&x), "never")
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(())
}
