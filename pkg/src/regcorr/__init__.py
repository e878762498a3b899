"""Correspondence engine for regular modal logics on Kripke frames with
impossible worlds: classification, variable elimination, first-order
translation, and brute-force verification on finite frames."""

from .classify import (Certificate, NodeClass, find_certificate, is_eps_uniform,
                       is_inductive, is_sahlqvist)
from .engine import (BranchSet, Exhaustive, Guided, RunResult, System,
                     ackermann, apply_rule, first_approximation, preprocess,
                     run)
from .fol import (FOFormula, correspondent, eval_fo, fo_equivalent, parse_fo,
                  simplify, standard_translation)
from .semantics import (DistFrame, Frame, FrameFamily, Model, Poset,
                        enumerate_frames, eval_quasi, frame_valid, satisfies)
from .syntax import (ConnectiveDecl, Formula, Inequality, Polarity,
                     QuasiInequality, Signature, critical_branches, parse,
                     polarity, signed_tree, substitute, to_json, to_text)
from .algebra import (FiniteAlgebra, Iso, algebra_valid, atom_structure,
                      complex_algebra, duality_roundtrip)

__version__ = "0.1.0"

__all__ = [
    "Certificate", "NodeClass", "find_certificate", "is_eps_uniform",
    "is_inductive", "is_sahlqvist",
    "BranchSet", "Exhaustive", "Guided", "RunResult", "System", "ackermann",
    "apply_rule", "first_approximation", "preprocess", "run",
    "FOFormula", "correspondent", "eval_fo", "fo_equivalent", "parse_fo",
    "simplify", "standard_translation",
    "DistFrame", "Frame", "FrameFamily", "Model", "Poset", "enumerate_frames",
    "eval_quasi", "frame_valid", "satisfies",
    "ConnectiveDecl", "Formula", "Inequality", "Polarity", "QuasiInequality",
    "Signature", "critical_branches", "parse", "polarity", "signed_tree",
    "substitute", "to_json", "to_text",
    "FiniteAlgebra", "Iso", "algebra_valid", "atom_structure",
    "complex_algebra", "duality_roundtrip",
    "__version__",
]
