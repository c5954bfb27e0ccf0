fn main() {
    // CLI wiring lands with the pipeline module.
    eprintln!("tooluse: not yet wired");
    std::process::exit(2);
}
