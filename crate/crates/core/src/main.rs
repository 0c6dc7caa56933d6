fn main() {
    std::process::exit(spikecloud::cli::run(std::env::args_os()));
}
