fn main() {
    std::process::exit(frechet_coreset::cli::run(std::env::args_os()));
}
