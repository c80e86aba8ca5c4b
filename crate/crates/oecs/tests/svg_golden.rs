//! Rendered plot of the cellular-flow hyperbolic run against a stored copy.
//! Set `OECS_BLESS=1` to rewrite the stored file.

use std::path::{Path, PathBuf};

use oecs::config::{AdvectConfig, InputConfig, OutputConfig, RunConfig, ScanConfig, Stages, Thresholds};
use oecs::geostrophic::GeoConstants;
use oecs::pipeline;

#[test]
fn cellular_hyperbolic_plot_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        input: InputConfig::Analytic { flow: "cellular".into(), params: vec![], domain: [-3.7, 3.7, -3.7, 3.7] },
        time: 0.0,
        threads: Some(2),
        scan: ScanConfig { step: Some(0.1), domain: None },
        stages: Stages { hyperbolic: true, ..Stages::NONE },
        thresholds: Thresholds { step: Some(0.01), max_length: Some(10.0), ..Thresholds::default() },
        advect: AdvectConfig::default(),
        geo: GeoConstants::default(),
        output: OutputConfig { dir: dir.path().to_path_buf() },
    };
    pipeline::run_pipeline(&cfg).unwrap();
    let got = std::fs::read_to_string(dir.path().join("structures.svg")).unwrap();
    let golden: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/cellular_hyperbolic.svg");
    if std::env::var_os("OECS_BLESS").is_some() {
        std::fs::write(&golden, &got).unwrap();
    }
    let want = std::fs::read_to_string(&golden).expect("golden file missing; run with OECS_BLESS=1");
    assert!(got == want, "structures.svg differs from {}", golden.display());
}
