use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn fixture_checksums_match_manifest() {
    let dir = fixtures();
    let manifest = std::fs::read_to_string(dir.join("SHA256SUMS")).unwrap();
    let mut seen = 0;
    for line in manifest.lines().filter(|l| !l.trim().is_empty()) {
        let (digest, name) = line.split_once("  ").expect("`<digest>  <path>` lines");
        let data = std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(hex(&Sha256::digest(&data)), digest, "{name} changed");
        seen += 1;
    }
    assert_eq!(seen, 16);
}

#[test]
fn datasets_load_with_expected_sizes() {
    use concept_fock::datamodel::load_dataset;
    for t in 1..=4 {
        let name = format!("table{t}");
        let f = std::fs::File::open(fixtures().join(format!("{name}.csv"))).unwrap();
        let ds = load_dataset(f, &name).unwrap();
        assert_eq!(ds.len(), 24, "{name}");
    }
}
