fn main() {
    std::process::exit(css_linksim::cli::main_with_args(std::env::args_os()));
}
