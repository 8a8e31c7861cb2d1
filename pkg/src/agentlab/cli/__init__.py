"""Command layer: one function per pipeline step plus their shared dependencies."""
