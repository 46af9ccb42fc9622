fn main() {
    std::process::exit(hypergrad::bench::cli_main(std::env::args().skip(1)));
}
