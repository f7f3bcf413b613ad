//! Generate a seeded Euclidean instance and round-trip it through JSON.

use cfl_rounding::instances::{gen_euclidean, load_instance, save_instance, validate, GenParams};

fn main() -> cfl_rounding::Result<()> {
    let inst = gen_euclidean(&GenParams::new(4, 7, 42))?;
    println!(
        "{} facilities, {} clients, total capacity {}",
        inst.n_facilities(),
        inst.n_clients,
        inst.total_capacity()
    );
    for (i, f) in inst.facilities.iter().enumerate() {
        println!("  facility {i}: open cost {:.3}, capacity {}", f.open_cost, f.capacity);
    }
    assert!(validate(&inst).is_empty());

    let path = std::env::temp_dir().join("cfl-generate-example.json");
    save_instance(&path, &inst)?;
    assert_eq!(load_instance(&path)?, inst);
    println!("round trip through {} ok", path.display());
    std::fs::remove_file(path)?;
    Ok(())
}
