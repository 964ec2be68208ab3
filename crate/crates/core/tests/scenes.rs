use std::path::PathBuf;

use urbanemf::scene::bundled;
use urbanemf::{load_scene, resolve_scene};

fn scenes_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes")
}

#[test]
fn shipped_json_matches_the_builders() {
    for name in bundled::NAMES {
        let path = scenes_dir().join(format!("{name}.json"));
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let builder = bundled::by_name(name).unwrap();
        assert_eq!(text.trim_end(), builder.to_file().to_json(), "{name}.json is stale");

        let from_file = load_scene(&path).unwrap();
        let built = resolve_scene(&format!("bundled:{name}")).unwrap();
        assert_eq!(from_file.triangle_count(), built.triangle_count(), "{name}");
        assert_eq!(from_file.edges.len(), built.edges.len(), "{name}");
        assert_eq!(from_file.interferers, built.interferers, "{name}");
    }
}

#[test]
fn unknown_bundled_name_is_a_config_error() {
    assert!(matches!(
        resolve_scene("bundled:atlantis"),
        Err(urbanemf::Error::Config { .. })
    ));
    assert!(matches!(resolve_scene("/no/such/scene.json"), Err(urbanemf::Error::Io { .. })));
}
