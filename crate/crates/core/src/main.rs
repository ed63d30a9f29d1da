fn main() {
    std::process::exit(lossprior::cli::run(std::env::args_os()));
}
