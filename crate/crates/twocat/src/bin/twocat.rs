fn main() {
    std::process::exit(twocat::run());
}
