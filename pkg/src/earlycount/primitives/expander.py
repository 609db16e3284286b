"""Degree-8 circulant multigraphs with a certified edge-expansion bound."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

DEGREE = 8
EXACT_LIMIT = 20


def circulant_offsets(n: int) -> tuple[int, ...]:
    """Four offsets 1, a, a^2, a^3 (mod n) with a = round(n^(1/4)), zeros lifted to 1."""
    a = max(2, round(n ** 0.25))
    out = []
    for i in range(4):
        s = pow(a, i, n) if n > 1 else 0
        if s == 0:
            s = 1 % n
        out.append(s)
    return tuple(out)


@dataclass(frozen=True)
class ExpanderGraph:
    n: int
    offsets: tuple[int, ...]
    ports: tuple[tuple[int, ...], ...]       # DEGREE neighbor entries per node, with multiplicity
    epsilon: float
    epsilon_exact: Fraction | None = None
    method: str = "exact"
    lambda2: float | None = None
    residual: float | None = None
    iterations: int = 0

    @property
    def degree(self) -> int:
        return DEGREE

    @property
    def neighbors(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(p) for p in self.ports)

    def node_fraction(self) -> Fraction | float:
        """Expansion per node: a set S has at least this fraction of its members on the boundary."""
        if self.epsilon_exact is not None:
            return self.epsilon_exact / DEGREE
        return self.epsilon / DEGREE

    def query_span(self, k: int) -> int:
        """ceil(2k / eps_node); queries go to offsets 0..span."""
        if k <= 0:
            return 0
        frac = self.node_fraction()
        if isinstance(frac, Fraction):
            q = Fraction(2 * k) / frac
            return -((-q.numerator) // q.denominator)
        return math.ceil(2 * k / frac)


def circulant_ports(n: int, offsets) -> tuple[tuple[int, ...], ...]:
    ports = []
    for v in range(n):
        row = []
        for s in offsets:
            row.append((v + s) % n)
            row.append((v - s) % n)
        ports.append(tuple(row))
    return tuple(ports)


def exact_edge_expansion(ports) -> Fraction:
    """min over 0 < |S| <= n/2 of boundary(S)/|S|, by vectorized enumeration of all subsets."""
    n = len(ports)
    if n < 2:
        raise ValueError("need n >= 2")
    if n > 24:
        raise ValueError("exact enumeration limited to n <= 24")
    masks = np.arange(1, 1 << n, dtype=np.int64)
    size = np.zeros(masks.shape, dtype=np.int64)
    for v in range(n):
        size += (masks >> v) & 1
    keep = size <= n // 2
    masks, size = masks[keep], size[keep]
    boundary = np.zeros(masks.shape, dtype=np.int64)
    for v in range(n):
        inside = (masks >> v) & 1
        for w in ports[v]:
            boundary += inside & (1 - ((masks >> w) & 1))
    best = None
    for s in np.unique(size):
        sel = size == s
        b = int(boundary[sel].min())
        cand = Fraction(b, int(s))
        if best is None or cand < best:
            best = cand
    return best


def _apply(ports_arr: np.ndarray, x: np.ndarray) -> np.ndarray:
    return x[ports_arr].sum(axis=1)


def second_eigenvalue(ports, tol: float = 1e-10, max_iter: int = 200000, seed: int = 0):
    """Power iteration on A + dI restricted to the complement of the all-ones vector.

    Returns (lambda2 estimate, residual norm, iterations).
    """
    arr = np.asarray(ports, dtype=np.int64)
    n = arr.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x -= x.mean()
    x /= np.linalg.norm(x)
    mu = 0.0
    res = float("inf")
    it = 0
    for it in range(1, max_iter + 1):
        y = _apply(arr, x) + DEGREE * x
        y -= y.mean()
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return -float(DEGREE), 0.0, it
        x = y / norm
        if it % 20 == 0 or it == max_iter:
            ax = _apply(arr, x)
            mu = float(x @ ax)
            res = float(np.linalg.norm(ax - mu * x))
            if res < tol:
                break
    ax = _apply(arr, x)
    mu = float(x @ ax)
    res = float(np.linalg.norm(ax - mu * x))
    return mu, res, it


def spectral_certificate(ports, seed: int = 0) -> tuple[float, float, float, int]:
    """(eps, lambda2, residual, iterations); eps = (d - lambda2 - residual)/2 is
    the Cheeger lower bound on h(G), shrunk by the residual so it stays a bound."""
    lam, res, it = second_eigenvalue(ports, seed=seed)
    return (DEGREE - (lam + res)) / 2.0, lam, res, it


def build_expander(n: int) -> ExpanderGraph:
    if n < 2:
        raise ValueError("expander needs n >= 2")
    offsets = circulant_offsets(n)
    ports = circulant_ports(n, offsets)
    if n <= EXACT_LIMIT:
        h = exact_edge_expansion(ports)
        return ExpanderGraph(n, offsets, ports, float(h), h, "exact")
    eps, lam, res, it = spectral_certificate(ports)
    if eps <= 0:
        raise ValueError(f"no positive expansion certificate for n={n}")
    return ExpanderGraph(n, offsets, ports, eps, None, "spectral", lam, res, it)


def closed_form_lambda2(n: int, offsets) -> float:
    """Second largest adjacency eigenvalue of the circulant (independent check)."""
    j = np.arange(1, n)
    vals = np.zeros(n - 1)
    for s in offsets:
        vals += 2 * np.cos(2 * np.pi * j * s / n)
    return float(vals.max())
