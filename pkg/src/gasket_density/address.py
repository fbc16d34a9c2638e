"""Words, symbol streams, edge addresses and dyadic edge coordinates.

Symbols are the integers ``1..N+1`` labelling the vertices ``p_1..p_{N+1}``
of the base simplex.  A word ``w = w_1...w_m`` addresses the cell
``K_w = psi_{w_1} o ... o psi_{w_m}(K)`` where ``psi_k(z) = (z + p_k)/2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

from . import exact


class AddressError(ValueError):
    """Invalid symbol, word or edge specification."""


class DimensionMismatch(AddressError):
    """Two objects built for different gasket dimensions were combined."""


def _check_symbols(symbols: Sequence[int], dim: int) -> None:
    if dim < 1:
        raise AddressError(f"dimension must be positive, got {dim}")
    for s in symbols:
        if not isinstance(s, int) or not 1 <= s <= dim + 1:
            raise AddressError(f"symbol {s!r} outside 1..{dim + 1}")


@dataclass(frozen=True)
class Word:
    """Finite address over ``S = {1, ..., dim+1}``."""

    symbols: tuple
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        _check_symbols(self.symbols, self.dim)

    @classmethod
    def empty(cls, dim: int) -> "Word":
        return cls((), dim)

    @classmethod
    def power(cls, symbol: int, n: int, dim: int) -> "Word":
        return cls((symbol,) * n, dim)

    @classmethod
    def parse(cls, text: str, dim: int) -> "Word":
        text = text.strip()
        if not text or text == "-":
            return cls((), dim)
        if "," in text:
            parts = [p for p in text.split(",") if p.strip()]
        elif dim + 1 <= 9:
            parts = list(text)
        else:
            raise AddressError("words for N > 8 must be comma separated")
        try:
            return cls(tuple(int(p) for p in parts), dim)
        except ValueError as exc:
            raise AddressError(f"cannot parse word {text!r}") from exc

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[int]:
        return iter(self.symbols)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return Word(self.symbols[key], self.dim)
        return self.symbols[key]

    def __add__(self, other) -> "Word":
        if isinstance(other, Word):
            if other.dim != self.dim:
                raise DimensionMismatch(f"dim {self.dim} vs {other.dim}")
            return Word(self.symbols + other.symbols, self.dim)
        return Word(self.symbols + tuple(other), self.dim)

    def __lt__(self, other: "Word") -> bool:
        return self.symbols < other.symbols

    def __str__(self) -> str:
        if self.dim + 1 <= 9:
            return "".join(str(s) for s in self.symbols)
        return ",".join(str(s) for s in self.symbols)


WordLike = Union[Word, Sequence[int], str]


def as_word(w: WordLike, dim: int) -> Word:
    """Coerce a Word, symbol sequence or text encoding to a Word of ``dim``."""
    if isinstance(w, Word):
        if w.dim != dim:
            raise DimensionMismatch(f"word built for dim {w.dim}, expected {dim}")
        return w
    if isinstance(w, str):
        return Word.parse(w, dim)
    return Word(tuple(w), dim)


def concat(w: WordLike, w2: WordLike, dim: Optional[int] = None) -> Word:
    if dim is None:
        dim = w.dim if isinstance(w, Word) else w2.dim if isinstance(w2, Word) else None
    if dim is None:
        raise AddressError("concat of bare sequences needs dim")
    return as_word(w, dim) + as_word(w2, dim)


@dataclass(frozen=True)
class SymbolStream:
    """Infinite symbol sequence ``omega`` exposed through finite prefixes.

    Either eventually constant (``head`` followed by ``tail_symbol`` forever)
    or driven by ``generator(k)`` giving the symbol at 0-based position
    ``k >= len(head)``.
    """

    head: Word
    tail_symbol: Optional[int] = None
    generator: Optional[Callable[[int], int]] = field(default=None, compare=False)

    def __post_init__(self):
        if (self.tail_symbol is None) == (self.generator is None):
            raise AddressError("give exactly one of tail_symbol or generator")
        if self.tail_symbol is not None:
            _check_symbols((self.tail_symbol,), self.head.dim)

    @classmethod
    def eventually(cls, head: WordLike, symbol: int, dim: int) -> "SymbolStream":
        return cls(as_word(head, dim), tail_symbol=symbol)

    @property
    def dim(self) -> int:
        return self.head.dim

    @property
    def eventually_constant(self) -> bool:
        return self.tail_symbol is not None

    def symbol(self, k: int) -> int:
        if k < len(self.head):
            return self.head[k]
        if self.tail_symbol is not None:
            return self.tail_symbol
        s = self.generator(k)
        _check_symbols((s,), self.dim)
        return s

    def prefix(self, n: int) -> Word:
        """``[omega]_n``."""
        return Word(tuple(self.symbol(k) for k in range(n)), self.dim)

    def __str__(self) -> str:
        if self.tail_symbol is not None:
            return f"{self.head}({self.tail_symbol})^inf"
        return f"{self.head}..."


@dataclass(frozen=True)
class EdgeAddress:
    """The segment ``psi_w(p_i p_j)``, oriented from ``psi_w(p_i)`` to ``psi_w(p_j)``."""

    prefix: Word
    i: int
    j: int

    def __post_init__(self):
        _check_symbols((self.i, self.j), self.prefix.dim)
        if self.i == self.j:
            raise AddressError("edge endpoints must be distinct")

    @property
    def dim(self) -> int:
        return self.prefix.dim

    @classmethod
    def parse(cls, text: str, dim: int) -> "EdgeAddress":
        parts = text.split(":")
        if len(parts) != 3:
            raise AddressError(f"edge must look like 'w:i:j', got {text!r}")
        try:
            i, j = int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise AddressError(f"bad edge endpoints in {text!r}") from exc
        return cls(Word.parse(parts[0], dim), i, j)

    def __str__(self) -> str:
        return f"{self.prefix}:{self.i}:{self.j}"

    def binary_word(self, index: int, length: int) -> Word:
        """Subsegment ``index`` of the ``2**length`` equal pieces, as a word over {i, j}.

        Bit 0 selects the half nearer ``p_i``; the most significant bit comes first.
        """
        syms = tuple(self.j if (index >> (length - 1 - b)) & 1 else self.i for b in range(length))
        return Word(syms, self.dim)


@dataclass(frozen=True)
class DyadicPoint:
    """Edge point ``t = m / 2**n`` in lowest terms."""

    m: int
    n: int
    edge: EdgeAddress

    def __post_init__(self):
        if self.n < 0 or not 0 <= self.m <= (1 << self.n):
            raise AddressError(f"{self.m}/2^{self.n} is not in [0, 1]")
        m, n = self.m, self.n
        if m == 0:
            n = 0
        else:
            while n > 0 and m % 2 == 0:
                m //= 2
                n -= 1
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)

    @property
    def t(self) -> Fraction:
        return Fraction(self.m, 1 << self.n)


def dyadic_to_path(p: DyadicPoint) -> tuple[Word, int]:
    """Word ``x`` over {i, j} and a corner ``c`` with ``Phi(t) = psi_{w x}(p_c)``.

    Endpoints give the empty word.  An interior point ``m/2^n`` (m odd) is the
    midpoint of subsegment ``(m-1)/2`` at level ``n-1``; with ``v`` that
    subsegment's word, the result is ``(v + i, j)``, so ``len(x) == n``.
    """
    e = p.edge
    dim = e.dim
    if p.m == 0:
        return Word.empty(dim), e.i
    if p.m == 1 << p.n:
        return Word.empty(dim), e.j
    v = e.binary_word((p.m - 1) // 2, p.n - 1)
    return v + (e.i,), e.j


def vertex_representations(w: WordLike, i: int, j: int, dim: Optional[int] = None) -> frozenset:
    """All encodings ``(word, corner)`` of the point ``psi_{w i}(p_j)``."""
    if dim is None:
        if not isinstance(w, Word):
            raise AddressError("dim required for bare sequences")
        dim = w.dim
    w = as_word(w, dim)
    _check_symbols((i, j), dim)
    if i == j:
        return frozenset({(w + (i,), j)})
    return frozenset({(w + (i,), j), (w + (j,), i)})


def canonical_vertex(w: WordLike, i: int, j: int, dim: Optional[int] = None) -> tuple[Word, int]:
    reps = vertex_representations(w, i, j, dim)
    return min(reps, key=lambda r: (r[0].symbols, r[1]))


def standard_simplex(dim: int) -> tuple:
    """``p_1 = 0`` and ``p_{k+1} = e_k`` in ``R^dim``."""
    pts = [exact.zeros(dim)] + [exact.basis_vector(dim, k) for k in range(dim)]
    return tuple(pts)


def barycentric_simplex(dim: int) -> tuple:
    """Vertices as the standard basis of ``R^{dim+1}``; gives canonical point keys."""
    return tuple(exact.basis_vector(dim + 1, k) for k in range(dim + 1))


def _check_simplex(simplex: Sequence[Sequence], dim: int) -> tuple:
    pts = tuple(exact.vec(p) for p in simplex)
    if len(pts) != dim + 1:
        raise AddressError(f"need {dim + 1} vertices, got {len(pts)}")
    edges = tuple(exact.sub(p, pts[0]) for p in pts[1:])
    gram = tuple(tuple(exact.inner(a, b) for b in edges) for a in edges)
    if exact.det(gram) == 0:
        raise AddressError("degenerate simplex")
    return pts


def embed_point(w: WordLike, corner: int, simplex: Optional[Sequence[Sequence]] = None,
                dim: Optional[int] = None) -> tuple:
    """Exact coordinates of ``psi_w(p_corner)``."""
    if dim is None:
        if isinstance(w, Word):
            dim = w.dim
        elif simplex is not None:
            dim = len(simplex) - 1
        else:
            raise AddressError("dim required")
    w = as_word(w, dim)
    pts = _check_simplex(simplex if simplex is not None else standard_simplex(dim), dim)
    _check_symbols((corner,), dim)
    z = pts[corner - 1]
    half = Fraction(1, 2)
    for s in reversed(w.symbols):
        z = tuple(half * (a + b) for a, b in zip(z, pts[s - 1]))
    return z


def edge_point(p: DyadicPoint, simplex: Optional[Sequence[Sequence]] = None) -> tuple:
    """``(1 - t) psi_w(p_i) + t psi_w(p_j)`` computed directly."""
    e = p.edge
    a = embed_point(e.prefix, e.i, simplex)
    b = embed_point(e.prefix, e.j, simplex)
    t = p.t
    return tuple((1 - t) * x + t * y for x, y in zip(a, b))


def iter_words(dim: int, length: int, alphabet: Optional[Iterable[int]] = None) -> Iterator[Word]:
    """All words of a given length, lexicographic order."""
    from itertools import product

    alphabet = tuple(alphabet) if alphabet is not None else tuple(range(1, dim + 2))
    for syms in product(alphabet, repeat=length):
        yield Word(syms, dim)
