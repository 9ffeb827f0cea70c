//! Building a model in code, writing it as text, and reading it back.

use discoscm::model::{parse_model, print_model};
use discoscm::pmf::FinitePmf;
use discoscm::rational::int;
use discoscm::{Engine, ModelSpec, Query, StructuralEquation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ModelSpec::new(4)
        .group("early", 1, 2)
        .group("late", 3, 4)
        .noise("E", FinitePmf::uniform_range(1, 4))
        .noise("N", FinitePmf::uniform_range(0, 1))
        .variable("T", vec![int(0), int(1)])
        .variable("Y", (0..=3).map(int).collect())
        .equation(StructuralEquation::new("T").noises(["N"]).otherwise("N"))
        .equation(StructuralEquation::new("Y").parents(["T"]).noises(["E"]).when("early", "2 * T + (E <= 1)").when("late", "T + (E <= 3)"));

    let report = spec.validate();
    println!("valid: {}", report.is_valid());
    let text = print_model(&spec);
    println!("{text}");

    let model = parse_model(&text)?.build()?;
    let q = Query::parse("P(Y[T=1]=3 | T=0, Y=0)")?;
    println!("{q} = {}", Engine::new(&model).evaluate(&q)?);

    let dir = std::env::temp_dir().join("discoscm-model-files");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("two-groups.dscm");
    discoscm::scenario::save_model(&model, &path)?;
    let back = discoscm::scenario::load_model(&path)?;
    println!("round trip through {} keeps the text: {}", path.display(), print_model(back.spec()) == text);

    let broken = text.replace("uniform 0..1", "0:1/2 1:1/3");
    if let Err(e) = parse_model(&broken).map_err(|e| e.to_string()).and_then(|s| s.build().map_err(|e| e.to_string())) {
        println!("broken copy: {e}");
    }
    Ok(())
}
