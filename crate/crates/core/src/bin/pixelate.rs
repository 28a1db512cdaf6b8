fn main() {
    std::process::exit(pixelate::cli::run(std::env::args_os()));
}
