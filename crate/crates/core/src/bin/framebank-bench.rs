fn main() {
    std::process::exit(framebank::bench::main_with_args(std::env::args_os()));
}
