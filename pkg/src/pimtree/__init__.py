"""Simulated PIM-tree ordered index and tooling."""
