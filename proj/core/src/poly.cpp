namespace solvq {
} // namespace solvq
