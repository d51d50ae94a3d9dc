fn main() {
    std::process::exit(cvrp_bpc::cli::run(std::env::args_os()));
}
