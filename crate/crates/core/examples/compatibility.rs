//! Identity and CONCOR-1 matrices over the ABO groups, and a custom rule set.

use epialloc::domain::{CompatPreset, CompatibilityMatrix, ResourceSet};

fn print(name: &str, res: &ResourceSet, m: &CompatibilityMatrix) {
    println!("{name} (row = demand, column = supply)");
    let w = res.labels().iter().map(String::len).max().unwrap_or(1) + 1;
    println!("{:w$} {}", "", res.labels().iter().map(|l| format!("{l:>w$}")).collect::<String>());
    for d in 0..m.size() {
        let row: String = (0..m.size()).map(|s| format!("{:>w$}", if m.allows(d, s) { "x" } else { "." })).collect();
        println!("{:>w$} {row}", res.label(d));
    }
}

fn main() -> epialloc::Result<()> {
    let abo = ResourceSet::abo();
    for preset in [CompatPreset::Identity, CompatPreset::Concor1] {
        print(preset.name(), &abo, &preset.build(&abo)?);
    }

    let two = ResourceSet::new(&["fresh", "frozen"])?;
    let m = CompatibilityMatrix::from_rules(&two, &[("fresh", "frozen")])?;
    print("custom", &two, &m);
    println!("suppliers of fresh: {:?}", m.suppliers_of(0).map(|s| two.label(s)).collect::<Vec<_>>());
    Ok(())
}
