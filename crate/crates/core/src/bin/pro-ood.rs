fn main() {
    std::process::exit(pro_ood::cli::main_with_args(std::env::args_os()));
}
