fn main() {
    std::process::exit(angsep_cli::dispatch(std::env::args_os()));
}
