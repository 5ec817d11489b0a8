fn main() {
    std::process::exit(fmcmsn::cli::run(std::env::args_os()));
}
