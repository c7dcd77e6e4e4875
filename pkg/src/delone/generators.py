"""Reference Delone windows with known structure.

All constructions are deterministic: lattices (periodic), the Fibonacci
chain (linearly repetitive, non-periodic), Sturmian chains with chosen
continued-fraction quotients, Cartesian products of 1-D chains, and
lattices displaced by a finite alphabet.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ValidationError
from .pointset import BoxRegion, PointSample

PHI = (1.0 + math.sqrt(5.0)) / 2.0
MAX_PERTURBATION = 0.25

KINDS = ("lattice", "fibonacci_chain", "sturmian_chain", "product_chain_2d", "perturbed_lattice")


@dataclass(frozen=True)
class GeneratorSpec:
    """Declarative description of a generated sample.

    ``params`` holds the kind-specific keyword arguments of the matching
    ``gen_*`` function. ``seed`` is carried for reproducible parameter
    choices made by callers; no generator draws random points.
    """

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown generator kind {self.kind!r}")

    def build(self):
        return generate(self)


def generate(spec):
    p = dict(spec.params)
    if spec.kind == "lattice":
        return gen_lattice(p["basis"], _window(p["window"]))
    if spec.kind == "fibonacci_chain":
        return gen_fibonacci_chain(p["depth"], p.get("origin", 0.0))
    if spec.kind == "sturmian_chain":
        return gen_sturmian_chain(p["partial_quotients"], p["length"], p.get("origin", 0.0))
    if spec.kind == "product_chain_2d":
        return gen_product_chain_2d(_as_spec(p["spec_x"]), _as_spec(p["spec_y"]))
    if spec.kind == "perturbed_lattice":
        return gen_perturbed_lattice(p["displacement_alphabet"], p["rule"], _window(p["window"]))
    raise ValidationError(f"unknown generator kind {spec.kind!r}")


def _as_spec(obj):
    if isinstance(obj, GeneratorSpec):
        return obj
    return GeneratorSpec(obj["kind"], obj.get("params", {}), obj.get("seed", 0))


def _window(w):
    if isinstance(w, BoxRegion):
        return w
    lo, hi = w
    return BoxRegion(tuple(np.atleast_1d(lo)), tuple(np.atleast_1d(hi)))


def gen_lattice(basis, window, label=None):
    """All points ``k @ basis`` (``k`` integer) inside ``window``.

    Rows of ``basis`` are the generating vectors.
    """
    B = np.atleast_2d(np.asarray(basis, dtype=float))
    dim = window.dim
    if B.shape != (dim, dim):
        raise ValidationError(f"basis must be {dim}x{dim}")
    if abs(np.linalg.det(B)) < 1e-12:
        raise ValidationError("singular basis")
    corners = np.array(list(itertools.product(*zip(window.lo, window.hi))))
    coef = corners @ np.linalg.inv(B)
    kmin = np.floor(coef.min(axis=0)).astype(int) - 1
    kmax = np.ceil(coef.max(axis=0)).astype(int) + 1
    ks = np.stack(np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(kmin, kmax)], indexing="ij"),
                  axis=-1).reshape(-1, dim)
    pts = ks @ B
    pts = pts[window.contains_points(pts, 1e-9)]
    return PointSample(pts, window, label or "lattice")


def integer_lattice(dim, side, origin=0.0):
    """``Z^dim`` restricted to ``[origin, origin + side]^dim``."""
    window = BoxRegion((origin,) * dim, (origin + side,) * dim)
    return gen_lattice(np.eye(dim), window, label=f"Z{dim}")


def fibonacci_word(depth):
    """Substitution word ``a -> ab, b -> a`` after ``depth - 1`` steps from ``a``.

    Its length is the Fibonacci number ``F(depth + 1)``.
    """
    if depth < 1:
        raise ValidationError("depth must be >= 1")
    word = "a"
    for _ in range(depth - 1):
        word = "".join("ab" if c == "a" else "a" for c in word)
    return word


def chain_from_word(word, lengths, origin=0.0):
    """Tile endpoints of a 1-D word; each position is computed from letter counts."""
    letters = sorted(lengths)
    counts = np.zeros((len(word) + 1, len(letters)))
    for j, letter in enumerate(letters):
        counts[1:, j] = np.cumsum([c == letter for c in word])
    lens = np.array([lengths[c] for c in letters], dtype=float)
    return origin + counts @ lens


def gen_fibonacci_chain(depth, origin=0.0):
    """Fibonacci chain: long tile ``a`` of length phi, short tile ``b`` of length 1."""
    word = fibonacci_word(depth)
    x = chain_from_word(word, {"a": PHI, "b": 1.0}, origin)
    window = BoxRegion((x[0],), (x[-1],))
    s = PointSample(x[:, None], window, f"fibonacci-d{depth}")
    s.word = word
    return s


def continued_fraction_value(quotients, length):
    """Rational approximation of ``[0; a1, a2, ...]`` (quotients repeated cyclically).

    Precise enough that ``floor(n * alpha)`` is exact for ``n <= length``.
    """
    if not quotients:
        raise ValidationError("empty quotient list")
    if any(int(a) < 1 for a in quotients):
        raise ValidationError("partial quotients must be >= 1")
    # convergents p/q; stop once q_k exceeds length**2 so rounding cannot bite
    p_prev, q_prev, p, q = 1, 0, 0, 1
    for a in itertools.cycle(int(a) for a in quotients):
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
        if q > 16 * (length + 2) ** 2:
            return Fraction(p, q)


def sturmian_word(quotients, n_letters):
    """Characteristic Sturmian coding ``floor((n+1) alpha) - floor(n alpha)``, n >= 1."""
    alpha = continued_fraction_value(quotients, n_letters + 1)
    p, q = alpha.numerator, alpha.denominator
    n = np.arange(1, n_letters + 2, dtype=object)
    fl = (n * p) // q
    return np.array(fl[1:] - fl[:-1], dtype=np.int64)


def gen_sturmian_chain(partial_quotients, length, origin=0.0):
    """Chain of ``length`` points with gaps 2 (letter 1) and 1 (letter 0)."""
    if length < 2:
        raise ValidationError("length must be >= 2")
    bits = sturmian_word(list(partial_quotients), length - 1)
    word = "".join("a" if b else "b" for b in bits)
    x = chain_from_word(word, {"a": 2.0, "b": 1.0}, origin)
    window = BoxRegion((x[0],), (x[-1],))
    tag = ",".join(str(int(a)) for a in partial_quotients)
    s = PointSample(x[:, None], window, f"sturmian-[{tag}]-n{length}")
    s.word = word
    return s


def gen_product_chain_2d(spec_x, spec_y):
    """Cartesian product of two 1-D samples; window is the product window."""
    sx, sy = generate(spec_x), generate(spec_y)
    if sx.dim != 1 or sy.dim != 1:
        raise ValidationError("product factors must be one-dimensional")
    xx, yy = np.meshgrid(sx.points[:, 0], sy.points[:, 0], indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    window = BoxRegion((sx.window.lo[0], sy.window.lo[0]), (sx.window.hi[0], sy.window.hi[0]))
    return PointSample(pts, window, f"{sx.label}x{sy.label}")


# named rules cycle through an alphabet of size k
RULES = {
    "constant": lambda z, k: np.zeros(len(z), dtype=np.int64),
    "checkerboard": lambda z, k: np.mod(z.sum(axis=1), k).astype(np.int64),
    "stripes": lambda z, k: np.mod(z[:, 0], k).astype(np.int64),
}


def gen_perturbed_lattice(displacement_alphabet, rule, window):
    """``z -> z + alphabet[rule(z)]`` over integer points ``z`` of ``window``.

    ``rule`` is a name from ``RULES`` or a callable mapping an ``(m, N)``
    integer array to alphabet indices. Displaced points leaving the window
    are dropped.
    """
    alphabet = np.atleast_2d(np.asarray(displacement_alphabet, dtype=float))
    dim = window.dim
    if alphabet.shape[1] == 1 and dim > 1 and np.all(alphabet == 0):
        alphabet = np.zeros((len(alphabet), dim))
    if alphabet.shape[1] != dim:
        raise ValidationError("displacements must match the window dimension")
    if np.max(np.linalg.norm(alphabet, axis=1)) >= MAX_PERTURBATION:
        raise ValidationError(f"displacement norms must stay below {MAX_PERTURBATION}")
    if isinstance(rule, str):
        if rule not in RULES:
            raise ValidationError(f"unknown rule {rule!r}; expected one of {sorted(RULES)}")
        rule_fn = functools.partial(RULES[rule], k=len(alphabet))
    else:
        rule_fn = rule
    axes = [np.arange(math.ceil(a) - 1, math.floor(b) + 2) for a, b in zip(window.lo, window.hi)]
    z = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    idx = np.asarray(rule_fn(z), dtype=np.int64)
    if np.any(idx < 0) or np.any(idx >= len(alphabet)):
        raise ValidationError("rule produced an index outside the alphabet")
    pts = z + alphabet[idx]
    pts = pts[window.contains_points(pts, 1e-9)]
    name = rule if isinstance(rule, str) else getattr(rule, "__name__", "rule")
    return PointSample(pts, window, f"perturbed-{name}")
