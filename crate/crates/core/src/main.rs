fn main() {
    std::process::exit(kp2stab::cli::main_entry());
}
