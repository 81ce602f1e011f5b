fn main() {
    eprintln!("gci: not yet wired up");
}
