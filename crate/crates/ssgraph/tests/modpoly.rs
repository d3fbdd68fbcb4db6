use std::fs;

use ssgraph::modpoly_db::{file_name, read_modpoly, write_modpoly, ModPolySource};
use ssgraph::source::GraphSource;
use ssgraph_core::arith::modpoly::{builtin, generate, reduced_for};
use ssgraph_core::arith::FieldCtx;

#[test]
fn file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    for ell in [2, 3, 5] {
        let phi = builtin(ell).unwrap();
        let path = dir.path().join(file_name(ell));
        write_modpoly(&path, &phi).unwrap();
        assert_eq!(read_modpoly(&path, ell).unwrap(), phi);
    }
}

#[test]
fn phi2_text_matches_known_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(file_name(2));
    write_modpoly(&path, &builtin(2).unwrap()).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.lines().any(|l| l == "2 0 -162000"));
    assert!(text.lines().any(|l| l == "0 0 -157464000000000"));
    assert!(text.lines().any(|l| l == "1 1 40773375"));
    assert!(text.lines().any(|l| l == "3 0 1"));
}

#[test]
fn directory_file_is_preferred() {
    let dir = tempfile::tempdir().unwrap();
    let src = ModPolySource::new(Some(dir.path().to_path_buf()));
    assert!(src.load(17).unwrap().is_none());
    // generated Φ_17 written to disk, then read back through the source
    let phi = generate(17).unwrap();
    write_modpoly(&dir.path().join(file_name(17)), &phi).unwrap();
    assert_eq!(src.load(17).unwrap().unwrap(), phi);
    assert_eq!(src.reduced(17, 1009).unwrap(), reduced_for(17, 1009).unwrap());

    let ctx = FieldCtx::new(1009).unwrap();
    let with_files = GraphSource::new(src, None).graph(&ctx, 17).unwrap();
    let without = GraphSource::default().graph(&ctx, 17).unwrap();
    assert_eq!(with_files, without);
}

#[test]
fn malformed_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(file_name(2));
    fs::write(&path, "# header\n3 0 1\n1 1 x\n").unwrap();
    let err = read_modpoly(&path, 2).unwrap_err();
    assert_eq!(err.kind(), "ParseError");
    assert!(err.to_string().contains('3'), "{err}");
}
