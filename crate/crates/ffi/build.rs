use std::env;
use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("set by cargo"));
    println!("cargo:rerun-if-changed=src/lib.rs");
    let mut config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("NCFACTOR_H".into()),
        cpp_compat: true,
        documentation: true,
        ..Default::default()
    };
    // C enumerators share one namespace: emit NcfStatus_Ok, NcfStatus_Parse, ...
    config.enumeration.prefix_with_name = true;
    cbindgen::Builder::new()
        .with_crate(&dir)
        .with_config(config)
        .generate()
        .expect("header generation failed")
        .write_to_file(dir.join("include").join("ncfactor.h"));
}
