fn main() { std::process::exit(hexbands::cli::run(std::env::args_os())); }
