fn main() {
    std::process::exit(lod2vec::cli::run(std::env::args_os()));
}
