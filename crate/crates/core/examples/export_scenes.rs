//! Writes the bundled scenes as JSON: `cargo run -p urbanemf --example export_scenes -- scenes`

use std::path::PathBuf;

use urbanemf::scene::bundled;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "scenes".into()));
    std::fs::create_dir_all(&dir)?;
    for name in bundled::NAMES {
        let file = bundled::by_name(name).expect("known scene").to_file();
        std::fs::write(dir.join(format!("{name}.json")), file.to_json() + "\n")?;
    }
    Ok(())
}
