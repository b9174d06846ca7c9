fn main() {
    std::process::exit(crt_cfo::cli::main());
}
