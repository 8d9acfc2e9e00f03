fn main() {
    std::process::exit(coldstart::run_from_args(std::env::args_os().collect()));
}
