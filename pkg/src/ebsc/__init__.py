"""Choi-matrix calculus for channels, superchannels and entanglement-breaking tests."""
