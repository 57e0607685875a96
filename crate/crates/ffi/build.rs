fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR");
    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(format!("{crate_dir}/include/kdforest.h"));
        }
        // A stale committed header is better than a broken build when the
        // generator is unavailable.
        Err(e) => println!("cargo:warning=cbindgen header generation skipped: {e}"),
    }
}
