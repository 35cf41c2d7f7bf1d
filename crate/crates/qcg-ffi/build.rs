fn main() {
    // Header generation is opt-in so the default build carries no cbindgen
    // dependency; `cargo build -p qcg-ffi --features headers` refreshes the
    // committed include/qcg.h.
    #[cfg(feature = "headers")]
    generate_header();
}

#[cfg(feature = "headers")]
fn generate_header() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("manifest dir");
    let config = cbindgen::Config::from_file(format!("{crate_dir}/cbindgen.toml"))
        .expect("cbindgen.toml parses");
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("header generation succeeds")
        .write_to_file(format!("{crate_dir}/include/qcg.h"));
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
