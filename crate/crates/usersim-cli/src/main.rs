fn main() {
    std::process::exit(usersim_cli::run());
}
