"""Terminating agreement subroutines and the expander they use."""
from .expander import ExpanderGraph, build_expander
from .graded import GradedAgreement, WeakGradedAgreement
from .king import BasicKing, EfficientKing, GradedKing
from .weak_king import WeakKing

__all__ = ["ExpanderGraph", "build_expander", "GradedAgreement", "WeakGradedAgreement",
           "BasicKing", "EfficientKing", "GradedKing", "WeakKing",
           "graded_agreement", "weak_graded_agreement", "king_consensus_basic",
           "graded_king_consensus", "king_consensus_efficient", "weak_king_consensus"]


def graded_agreement(n: int, domain: int) -> GradedAgreement:
    return GradedAgreement(n, domain)


def weak_graded_agreement(n: int, domain: int) -> WeakGradedAgreement:
    return WeakGradedAgreement(n, domain)


def king_consensus_basic(n: int, domain: int) -> BasicKing:
    return BasicKing(n, domain)


def graded_king_consensus(n: int, domain: int) -> GradedKing:
    return GradedKing(n, domain)


def king_consensus_efficient(n: int, domain: int) -> EfficientKing:
    return EfficientKing(n, domain)


def weak_king_consensus(n: int, domain: int, expander: ExpanderGraph | None = None) -> WeakKing:
    return WeakKing(n, domain, expander)
