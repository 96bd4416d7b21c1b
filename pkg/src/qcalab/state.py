"""Finitely-supported lattice configurations and their Hilbert space.

A configuration assigns a symbol from a finite alphabet to every point of
Z^n, with all but finitely many cells holding the distinguished empty
symbol 0. States are finite superpositions of configurations, stored as a
sparse amplitude map. A small dense companion (`RingSpace`) fixes the
basis-index convention used whenever a state is flattened to a coordinate
vector for matrix-level checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Amplitudes with modulus below this are dropped; far below every test
# tolerance, keeps the sparse maps finite under repeated unitaries.
PRUNE_THRESHOLD = 1e-14

# Dense verification is capped at this Hilbert-space dimension.
MAX_DENSE_DIM = 4096


@dataclass(frozen=True)
class Alphabet:
    """Finite cell alphabet; symbol 0 is the distinguished empty state."""

    size: int

    def __post_init__(self):
        if self.size < 2:
            raise ValueError(f"alphabet size must be >= 2, got {self.size}")

    def doubled(self) -> "Alphabet":
        """Alphabet of subcell pairs, (left, right) encoded as left*size + right."""
        return Alphabet(self.size * self.size)


class Configuration:
    """Immutable finite-support assignment of nonzero symbols to lattice points."""

    __slots__ = ("dimension", "cells", "_hash")

    def __init__(self, dimension: int, support: dict | tuple = ()):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        items = support.items() if isinstance(support, dict) else support
        cells = []
        for point, symbol in items:
            point = tuple(int(i) for i in point)
            if len(point) != dimension:
                raise ValueError(f"point {point} does not have dimension {dimension}")
            if symbol == 0:
                raise ValueError(f"empty symbol stored explicitly at {point}")
            if symbol < 0:
                raise ValueError(f"negative symbol {symbol} at {point}")
            cells.append((point, int(symbol)))
        cells.sort()
        object.__setattr__(self, "dimension", dimension)
        object.__setattr__(self, "cells", tuple(cells))
        object.__setattr__(self, "_hash", hash((dimension, self.cells)))

    @classmethod
    def _from_sorted(cls, dimension: int, cells: tuple) -> "Configuration":
        # internal fast path: cells already validated, sorted and canonical
        obj = object.__new__(cls)
        object.__setattr__(obj, "dimension", dimension)
        object.__setattr__(obj, "cells", cells)
        object.__setattr__(obj, "_hash", hash((dimension, cells)))
        return obj

    def __setattr__(self, *_):
        raise AttributeError("Configuration is immutable")

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.dimension == other.dimension
            and self.cells == other.cells
        )

    def __lt__(self, other):
        return self.cells < other.cells

    def __repr__(self):
        body = ";".join(f"{p}:{s}" for p, s in self.cells)
        return f"Configuration({self.dimension}, {body!r})"

    def symbol_at(self, point) -> int:
        point = tuple(point)
        for p, s in self.cells:
            if p == point:
                return s
        return 0

    @property
    def support(self) -> tuple:
        return tuple(p for p, _ in self.cells)

    def is_empty(self) -> bool:
        return not self.cells

    def translated(self, axis: int, amount: int) -> "Configuration":
        """Support moved by `amount` along `axis` (content relabelled)."""
        if not (0 <= axis < self.dimension):
            raise ValueError(f"axis {axis} out of range for dimension {self.dimension}")
        moved = tuple(
            (p[:axis] + (p[axis] + amount,) + p[axis + 1 :], s) for p, s in self.cells
        )
        return Configuration(self.dimension, moved)


def empty_configuration(dimension: int = 1) -> Configuration:
    return Configuration(dimension, ())


class SparseState:
    """Finite superposition of configurations, keyed by configuration.

    Construction prunes amplitudes below `PRUNE_THRESHOLD`. Normalization is
    explicit (`normalized()`); intermediate unnormalized states are legal.
    """

    __slots__ = ("alphabet", "dimension", "terms")

    def __init__(self, alphabet: Alphabet, dimension: int, terms: dict):
        self.alphabet = alphabet
        self.dimension = dimension
        pruned = {}
        for config, amp in terms.items():
            if config.dimension != dimension:
                raise ValueError("configuration dimension mismatch")
            for _, s in config.cells:
                if s >= alphabet.size:
                    raise ValueError(f"symbol {s} outside alphabet of size {alphabet.size}")
            amp = complex(amp)
            if abs(amp) > PRUNE_THRESHOLD:
                pruned[config] = amp
        self.terms = pruned

    @classmethod
    def basis(cls, alphabet: Alphabet, dimension: int, support: dict | tuple = ()) -> "SparseState":
        config = Configuration(dimension, support)
        return cls(alphabet, dimension, {config: 1.0})

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(a) ** 2 for a in self.terms.values())))

    def normalized(self) -> "SparseState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero state")
        return SparseState(
            self.alphabet, self.dimension, {c: a / n for c, a in self.terms.items()}
        )

    def scaled(self, factor: complex) -> "SparseState":
        return SparseState(
            self.alphabet, self.dimension, {c: a * factor for c, a in self.terms.items()}
        )

    def add(self, other: "SparseState") -> "SparseState":
        _check_compatible(self, other)
        merged = dict(self.terms)
        for c, a in other.terms.items():
            merged[c] = merged.get(c, 0.0) + a
        return SparseState(self.alphabet, self.dimension, merged)

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"SparseState({len(self.terms)} terms, d={self.alphabet.size}, n={self.dimension})"


def _check_compatible(a: SparseState, b: SparseState):
    if a.alphabet != b.alphabet:
        raise ValueError(
            f"alphabet mismatch: size {a.alphabet.size} vs {b.alphabet.size}"
        )
    if a.dimension != b.dimension:
        raise ValueError(f"dimension mismatch: {a.dimension} vs {b.dimension}")


def shift(state: SparseState, axis: int, amount: int) -> SparseState:
    """Lattice translation: content at i+amount moves to i along `axis`.

    Applying the one-step translation to a basis state occupying point 0
    yields the basis state occupying point -1; amplitudes are unchanged.
    """
    return SparseState(
        state.alphabet,
        state.dimension,
        {c.translated(axis, -amount): a for c, a in state.terms.items()},
    )


def inner_product(a: SparseState, b: SparseState) -> complex:
    """<a|b> over the orthonormal configuration basis."""
    _check_compatible(a, b)
    if len(b.terms) < len(a.terms):
        return complex(np.conj(inner_product(b, a)))
    acc = 0.0 + 0.0j
    for c, amp in a.terms.items():
        other = b.terms.get(c)
        if other is not None:
            acc += np.conj(amp) * other
    return complex(acc)


def embed_double(state: SparseState) -> SparseState:
    """Isometry into the doubled alphabet: each symbol s becomes the pair (0, s).

    Pairs (l, r) are encoded as l*d + r, so occupied cells keep their numeric
    symbol while the alphabet grows from d to d^2. Inner products are
    preserved exactly.
    """
    doubled = state.alphabet.doubled()
    # pair (0, s) encodes to 0*d + s = s: the support maps are reused as-is
    terms = {
        Configuration(state.dimension, c.cells): a for c, a in state.terms.items()
    }
    return SparseState(doubled, state.dimension, terms)


def extract_right_subcells(state: SparseState, base: Alphabet) -> SparseState:
    """Inverse of `embed_double` on its image: drop the (all-empty) left subcells.

    Raises if any term holds a nonzero left subcell.
    """
    d = base.size
    if state.alphabet.size != d * d:
        raise ValueError("state is not over the doubled alphabet")
    terms = {}
    for config, amp in state.terms.items():
        cells = []
        for point, pair in config.cells:
            left, right = divmod(pair, d)
            if left != 0:
                raise ValueError(f"nonzero left subcell {left} at {point}")
            cells.append((point, right))
        reduced = Configuration(config.dimension, tuple(cells))
        terms[reduced] = terms.get(reduced, 0.0) + amp
    return SparseState(base, state.dimension, terms)


@dataclass(frozen=True)
class RingSpace:
    """N cells of local dimension d on a 1D ring, with a fixed index convention.

    Basis index is mixed-radix over cell symbols with cell 0 the most
    significant digit. Also used as a plain quiescent-padded window where
    periodicity is irrelevant (partial traces, support scans).
    """

    cell_count: int
    local_dim: int

    def __post_init__(self):
        if self.cell_count < 1:
            raise ValueError("cell_count must be positive")
        if self.local_dim < 2:
            raise ValueError("local_dim must be >= 2")
        if self.dim > MAX_DENSE_DIM:
            raise ValueError(
                f"dense dimension {self.local_dim}^{self.cell_count} exceeds cap {MAX_DENSE_DIM}"
            )

    @property
    def dim(self) -> int:
        return self.local_dim**self.cell_count

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.local_dim)

    def index_of(self, symbols) -> int:
        """Basis index of a full symbol assignment (cell 0 most significant)."""
        if len(symbols) != self.cell_count:
            raise ValueError("wrong number of symbols")
        idx = 0
        for s in symbols:
            if not (0 <= s < self.local_dim):
                raise ValueError(f"symbol {s} outside alphabet")
            idx = idx * self.local_dim + int(s)
        return idx

    def symbols_of(self, index: int) -> tuple:
        if not (0 <= index < self.dim):
            raise ValueError("basis index out of range")
        out = []
        for _ in range(self.cell_count):
            index, s = divmod(index, self.local_dim)
            out.append(s)
        return tuple(reversed(out))


def densify(state: SparseState, ring: RingSpace) -> np.ndarray:
    """Coordinate vector of a state whose support fits the window [0, N).

    Mixed-radix basis, cell 0 most significant. Raises on any occupied cell
    outside the window, naming the offending cell.
    """
    if state.dimension != 1:
        raise ValueError("densify requires 1D states")
    if state.alphabet.size != ring.local_dim:
        raise ValueError("alphabet size does not match ring local dimension")
    vec = np.zeros(ring.dim, dtype=np.complex128)
    for config, amp in state.terms.items():
        symbols = [0] * ring.cell_count
        for (i,), s in config.cells:
            if not (0 <= i < ring.cell_count):
                raise ValueError(f"support outside window [0, {ring.cell_count}): cell {i}")
            symbols[i] = s
        vec[ring.index_of(symbols)] += amp
    return vec


def sparsify(vec: np.ndarray, ring: RingSpace) -> SparseState:
    """Inverse of `densify`: read a coordinate vector back into a sparse state."""
    if vec.shape != (ring.dim,):
        raise ValueError(f"vector length {vec.shape} does not match ring dimension {ring.dim}")
    terms = {}
    for idx in np.nonzero(np.abs(vec) > PRUNE_THRESHOLD)[0]:
        symbols = ring.symbols_of(int(idx))
        cells = tuple(((i,), s) for i, s in enumerate(symbols) if s != 0)
        terms[Configuration(1, cells)] = complex(vec[idx])
    return SparseState(ring.alphabet, 1, terms)


def dump_state(state: SparseState, digits: int = 17) -> str:
    """Textual dump: one line per term, sorted lexicographically by configuration.

    Line format: `(i1,...,in):symbol;... <TAB> re <TAB> im`.
    """
    lines = []
    for config in sorted(state.terms):
        amp = state.terms[config]
        body = ";".join(
            "(" + ",".join(str(i) for i in point) + f"):{symbol}"
            for point, symbol in config.cells
        )
        lines.append(f"{body}\t{amp.real:.{digits}g}\t{amp.imag:.{digits}g}")
    return "\n".join(lines) + ("\n" if lines else "")
