"""Exact computation with totally disconnected locally compact groups.

Subpackages cover: computably locally compact trees and the decidable algebra
of compact open sets (`clc_tree`), exact p-adic digit streams and matrix
transducers (`padic_baire`), the abstract coset meet-groupoid interface with
axiom checking (`meet_groupoid`), concrete coset windows for the p-adic line
and its scaling extension (`qp_groupoids`), reconstruction of isomorphisms
onto disguised copies (`iso_builder`), automorphisms of regular trees with
scale and stabilizer-index computation (`tree_aut`), graph construction and
DOT export (`graph_export`), and a deterministic command line (`cli`).
"""

__version__ = "0.1.0"
