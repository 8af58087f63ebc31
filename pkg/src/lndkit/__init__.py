"""Exact symbolic engine for locally nilpotent derivations and unipotent automorphisms."""
