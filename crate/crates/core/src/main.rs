fn main() { std::process::exit(sess::cli::run()) }
