fn main() {
    std::process::exit(qsvm_lab::cli::run(std::env::args_os()));
}
