"""Finite-dimensional real associative *-algebras given by structure constants.

An algebra is a dense ``d x d x d`` table ``c`` with ``v_i v_j = sum_k c[i,j,k] v_k``
and a diagonal conjugation ``x^c = signs * x``. Quaternions and the Clifford
algebras R_{0,n} are registered out of the box.

All array-level routines accept coefficient arrays of shape ``(..., d)`` and
broadcast over the leading axes; the :class:`Element` wrapper and the module
level functions are the checked single-element API.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

DEFAULT_TOL = 1e-9


class AlgebraMismatchError(ValueError):
    pass


class NotInConeError(ValueError):
    pass


class NotInvertibleError(ValueError):
    pass


class ElementParseError(ValueError):
    """Raised for malformed element strings; ``column`` is 1-based."""

    def __init__(self, message, column=None):
        self.column = column
        if column is not None:
            message = f"column {column}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class AlgebraSpec:
    name: str
    table: np.ndarray
    conj_signs: np.ndarray
    blade_names: tuple[str, ...]
    _gather: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        signs = np.asarray(self.conj_signs, dtype=float)
        d = table.shape[0]
        if table.shape != (d, d, d) or signs.shape != (d,) or len(self.blade_names) != d:
            raise ValueError("inconsistent algebra dimensions")
        table.setflags(write=False)
        signs.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "conj_signs", signs)
        object.__setattr__(self, "_gather", _signed_permutation(table))

    @property
    def dim(self) -> int:
        return self.table.shape[0]

    # -- array level -------------------------------------------------------

    def mul_arrays(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self._gather is None:
            return np.einsum("...i,...j,ijk->...k", a, b, self.table)
        cols, signs = self._gather
        # c_k = sum_i sign[k,i] a_i b_{cols[k,i]}, accumulated in fixed order
        shape = np.broadcast_shapes(a.shape, b.shape)
        d = shape[-1]
        out = np.empty(shape)
        tmp = np.empty(shape[:-1])
        for k in range(d):
            acc = out[..., k]
            np.multiply(a[..., 0], b[..., cols[k, 0]], out=acc)
            if signs[k, 0] < 0:
                np.negative(acc, out=acc)
            for i in range(1, d):
                np.multiply(a[..., i], b[..., cols[k, i]], out=tmp)
                if signs[k, i] > 0:
                    acc += tmp
                else:
                    acc -= tmp
        return out

    def conj_arrays(self, x):
        return np.asarray(x, dtype=float) * self.conj_signs

    def trace_arrays(self, x):
        x = np.asarray(x, dtype=float)
        return x + self.conj_arrays(x)

    def norm_arrays(self, x):
        return self.mul_arrays(x, self.conj_arrays(x))

    # -- construction helpers ----------------------------------------------

    def element(self, coeffs) -> "Element":
        return Element(self, coeffs)

    def scalar(self, value: float) -> "Element":
        c = np.zeros(self.dim)
        c[0] = value
        return Element(self, c)

    def one(self) -> "Element":
        return self.scalar(1.0)

    def basis(self, index) -> "Element":
        if isinstance(index, str):
            index = self.blade_names.index(index)
        c = np.zeros(self.dim)
        c[index] = 1.0
        return Element(self, c)

    def parse(self, text: str) -> "Element":
        return parse_element(self, text)

    # -- axioms --------------------------------------------------------------

    def axiom_residuals(self) -> dict[str, float]:
        """Max absolute residual of each *-algebra axiom over all basis tuples."""
        d = self.dim
        t = self.table
        eye = np.eye(d)
        unit = max(np.abs(t[0] - eye).max(), np.abs(t[:, 0, :] - eye).max())
        # (v_i v_j) v_k  vs  v_i (v_j v_k)
        left = np.einsum("ijl,lkm->ijkm", t, t)
        right = np.einsum("jkl,ilm->ijkm", t, t)
        assoc = np.abs(left - right).max()
        # (v_i v_j)^c = v_j^c v_i^c
        s = self.conj_signs
        lhs = t * s[None, None, :]
        rhs = np.transpose(t, (1, 0, 2)) * (s[:, None, None] * s[None, :, None])
        anti = np.abs(lhs - rhs).max()
        invol = float(np.abs(s * s - 1).max() + abs(s[0] - 1))
        return {"unit": float(unit), "associativity": float(assoc),
                "anti_involution": float(anti), "involution": invol}

    def validate(self) -> None:
        bad = {k: v for k, v in self.axiom_residuals().items() if v != 0.0}
        if bad:
            raise ValueError(f"{self.name} violates *-algebra axioms: {bad}")

    def __repr__(self):
        return f"AlgebraSpec({self.name!r}, dim={self.dim})"


def _signed_permutation(table):
    """Gather indices for tables where every basis product is +-1 times a basis blade."""
    d = table.shape[0]
    nz = table != 0
    if not (np.all(nz.sum(axis=2) == 1) and np.all(np.abs(table[nz]) == 1)):
        return None
    k_of = np.argmax(nz, axis=2)  # k_of[i, j]
    cols = np.empty((d, d), dtype=np.intp)
    signs = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            k = k_of[i, j]
            cols[k, i] = j
            signs[k, i] = table[i, j, k]
    # each (k, i) must be hit exactly once
    hits = np.zeros((d, d), dtype=int)
    for i in range(d):
        for j in range(d):
            hits[k_of[i, j], i] += 1
    if not np.all(hits == 1):
        return None
    return cols, signs


class Element:
    """A single algebra element stored as its coefficient vector."""

    __slots__ = ("algebra", "coeffs")

    def __init__(self, algebra: AlgebraSpec, coeffs):
        coeffs = np.array(coeffs, dtype=float)
        if coeffs.shape != (algebra.dim,):
            raise ValueError(f"expected {algebra.dim} coefficients, got shape {coeffs.shape}")
        self.algebra = algebra
        self.coeffs = coeffs

    def _coerce(self, other):
        if isinstance(other, Element):
            if other.algebra is not self.algebra:
                raise AlgebraMismatchError(f"{self.algebra.name} vs {other.algebra.name}")
            return other.coeffs
        if np.isscalar(other):
            c = np.zeros(self.algebra.dim)
            c[0] = float(other)
            return c
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Element(self.algebra, self.coeffs + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Element(self.algebra, self.coeffs - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Element(self.algebra, o - self.coeffs)

    def __neg__(self):
        return Element(self.algebra, -self.coeffs)

    def __mul__(self, other):
        if np.isscalar(other):
            return Element(self.algebra, self.coeffs * float(other))
        if isinstance(other, Element):
            return mul(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return Element(self.algebra, self.coeffs * float(other))
        return NotImplemented

    def __truediv__(self, other):
        if np.isscalar(other):
            return Element(self.algebra, self.coeffs / float(other))
        return NotImplemented

    @property
    def real(self) -> float:
        return float(self.coeffs[0])

    def conj(self) -> "Element":
        return conj(self)

    def euclidean_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def allclose(self, other, atol=1e-12) -> bool:
        return bool(np.allclose(self.coeffs, self._coerce(other), rtol=0.0, atol=atol))

    def __repr__(self):
        return f"Element({format_element(self, '{:.6g}')})"


# -- checked single-element API ----------------------------------------------

def _same(a: Element, b: Element):
    if a.algebra is not b.algebra:
        raise AlgebraMismatchError(f"{a.algebra.name} vs {b.algebra.name}")


def mul(a: Element, b: Element) -> Element:
    _same(a, b)
    return Element(a.algebra, a.algebra.mul_arrays(a.coeffs, b.coeffs))


def conj(x: Element) -> Element:
    return Element(x.algebra, x.algebra.conj_arrays(x.coeffs))


def trace(x: Element) -> Element:
    return Element(x.algebra, x.algebra.trace_arrays(x.coeffs))


def norm(x: Element) -> Element:
    return Element(x.algebra, x.algebra.norm_arrays(x.coeffs))


def _nonreal(c):
    return float(np.abs(np.asarray(c)[..., 1:]).max(initial=0.0))


def in_quadratic_cone(x: Element, tol: float = DEFAULT_TOL) -> bool:
    if _nonreal(x.coeffs) <= tol:
        return True
    t = x.algebra.trace_arrays(x.coeffs)
    n = x.algebra.norm_arrays(x.coeffs)
    if _nonreal(t) > tol or _nonreal(n) > tol:
        return False
    return bool(4.0 * n[0] > t[0] ** 2)


def is_imaginary_unit(J: Element, tol: float = DEFAULT_TOL) -> bool:
    t = J.algebra.trace_arrays(J.coeffs)
    n = J.algebra.norm_arrays(J.coeffs)
    n[0] -= 1.0
    return bool(np.abs(t).max() <= tol and np.abs(n).max() <= tol)


@dataclass(frozen=True)
class ConeDecomposition:
    alpha: float
    beta: float
    J: Element | None

    def reconstruct(self, algebra: AlgebraSpec) -> Element:
        out = algebra.scalar(self.alpha)
        if self.J is not None:
            out = out + self.beta * self.J
        return out


def decompose(x: Element, tol: float = DEFAULT_TOL) -> ConeDecomposition:
    """Split a cone element as ``alpha + beta J`` with ``beta >= 0``.

    ``J`` is ``None`` when ``beta <= tol`` (real point).
    """
    if not in_quadratic_cone(x, tol):
        raise NotInConeError(f"{format_element(x)} is not in the quadratic cone")
    alpha = float(x.algebra.trace_arrays(x.coeffs)[0] / 2.0)
    # n(x - alpha) avoids the cancellation in n(x) - alpha^2
    beta2 = float(x.algebra.norm_arrays((x - alpha).coeffs)[0])
    beta = float(np.sqrt(max(beta2, 0.0)))
    if beta <= tol:
        return ConeDecomposition(alpha, beta, None)
    J = (x - alpha) / beta
    return ConeDecomposition(alpha, beta, J)


def invert_in_plane(x: Element, tol: float = DEFAULT_TOL) -> Element:
    if not in_quadratic_cone(x, tol):
        raise NotInConeError(f"{format_element(x)} is not in the quadratic cone")
    n = float(x.algebra.norm_arrays(x.coeffs)[0])
    if abs(n) <= tol:
        raise NotInvertibleError(f"n(x) = {n:g} is numerically zero")
    return conj(x) / n


# -- vectorized helpers used by the quadrature code --------------------------

def decompose_arrays(algebra: AlgebraSpec, x, tol: float = 0.0):
    """Vectorized ``decompose`` without cone checks.

    Returns ``alpha, beta, J`` where ``J`` is zero on rows with ``beta <= tol``.
    """
    x = np.asarray(x, dtype=float)
    alpha = x[..., 0]
    imag = x.copy()
    imag[..., 0] = 0.0
    n = algebra.norm_arrays(imag)[..., 0]
    beta = np.sqrt(np.maximum(n, 0.0))
    safe = np.where(beta > tol, beta, 1.0)
    J = np.where((beta > tol)[..., None], imag / safe[..., None], 0.0)
    return alpha, beta, J


def invert_arrays(algebra: AlgebraSpec, x):
    """Inverse of plane elements: ``x^c / n(x)`` with ``n(x)`` taken as real."""
    n = algebra.norm_arrays(x)[..., 0]
    return algebra.conj_arrays(x) / n[..., None]


# -- registered algebras -----------------------------------------------------

@lru_cache(maxsize=None)
def quaternions() -> AlgebraSpec:
    names = ("1", "i", "j", "k")
    # (i, j) -> (sign, k) for the imaginary units
    rules = {(1, 1): (-1, 0), (2, 2): (-1, 0), (3, 3): (-1, 0),
             (1, 2): (1, 3), (2, 1): (-1, 3),
             (2, 3): (1, 1), (3, 2): (-1, 1),
             (3, 1): (1, 2), (1, 3): (-1, 2)}
    table = np.zeros((4, 4, 4))
    for a in range(4):
        table[0, a, a] = 1
        table[a, 0, a] = 1
    for (a, b), (s, k) in rules.items():
        table[a, b, k] = s
    alg = AlgebraSpec("quaternion", table, np.array([1, -1, -1, -1]), names)
    alg.validate()
    return alg


def _blade_product(A, B):
    """Product of generator blades in R_{0,n}: returns (sign, sorted blade)."""
    seq = list(A) + list(B)
    sign = 1
    # bubble sort, counting transpositions of distinct generators
    for i in range(len(seq)):
        for j in range(len(seq) - 1 - i):
            if seq[j] > seq[j + 1]:
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
                sign = -sign
    out = []
    for g in seq:
        if out and out[-1] == g:
            out.pop()
            sign = -sign  # e_g e_g = -1
        else:
            out.append(g)
    return sign, tuple(out)


def clifford_blades(n: int) -> list[tuple[int, ...]]:
    """Blades of R_{0,n} in graded-lexicographic order."""
    return [b for k in range(n + 1) for b in itertools.combinations(range(1, n + 1), k)]


@lru_cache(maxsize=None)
def clifford(n: int) -> AlgebraSpec:
    if not 1 <= n <= 6:
        raise ValueError("supported Clifford algebras are R_{0,n} with 1 <= n <= 6")
    blades = clifford_blades(n)
    index = {b: i for i, b in enumerate(blades)}
    d = len(blades)
    table = np.zeros((d, d, d))
    for i, A in enumerate(blades):
        for j, B in enumerate(blades):
            s, C = _blade_product(A, B)
            table[i, j, index[C]] = s
    # Clifford conjugation: (-1)^{k(k+1)/2} on grade-k blades
    signs = np.array([(-1) ** (len(b) * (len(b) + 1) // 2) for b in blades])
    names = tuple("1" if not b else "e" + "".join(str(g) for g in b) for b in blades)
    alg = AlgebraSpec(f"clifford:{n}", table, signs, names)
    alg.validate()
    return alg


def get_algebra(spec: str) -> AlgebraSpec:
    """Look up ``quaternion`` or ``clifford:n``."""
    spec = spec.strip().lower()
    if spec in ("quaternion", "quaternions", "h"):
        return quaternions()
    m = re.fullmatch(r"clifford:(\d+)", spec)
    if m:
        return clifford(int(m.group(1)))
    raise ValueError(f"unknown algebra {spec!r}; expected 'quaternion' or 'clifford:n'")


# -- text I/O -------------------------------------------------------------------

_TERM = re.compile(
    r"\s*([+-])?\s*(\d+\.?\d*|\.\d+)?\s*(\*)?\s*((?:e\d+)+|[ijk])?\s*")


def _blade_index(algebra: AlgebraSpec, token: str, column: int) -> tuple[int, int]:
    if token in ("i", "j", "k"):
        if algebra.name != "quaternion":
            raise ElementParseError(f"unit {token!r} only exists in quaternions", column)
        return 1, algebra.blade_names.index(token)
    gens = [int(g) for g in re.findall(r"\d", token.replace("e", ""))]
    if algebra.name == "quaternion":
        raise ElementParseError(f"blade {token!r} not valid for quaternions", column)
    n = int(algebra.name.split(":")[1])
    if any(g < 1 or g > n for g in gens):
        raise ElementParseError(f"blade {token!r} uses a generator outside 1..{n}", column)
    # reduce the written generator word left to right
    sign, blade = 1, ()
    for g in gens:
        s, blade = _blade_product(blade, (g,))
        sign *= s
    name = "1" if not blade else "e" + "".join(str(g) for g in blade)
    return sign, algebra.blade_names.index(name)


def parse_element(algebra: AlgebraSpec, text: str) -> Element:
    """Parse ``0.3+0.2i``, ``1-2e12``, ``0.5*e1e2`` or a coefficient list ``[c0, c1, ...]``.

    Exponent notation is not accepted inside sums (``2e1`` is the blade ``2 e1``).
    """
    s = text.strip()
    if s.startswith("["):
        if not s.endswith("]"):
            raise ElementParseError("unterminated coefficient list", len(text))
        try:
            vals = [float(v) for v in s[1:-1].replace(";", ",").split(",") if v.strip()]
        except ValueError as exc:
            raise ElementParseError(str(exc), 1) from None
        if len(vals) != algebra.dim:
            raise ElementParseError(f"expected {algebra.dim} coefficients, got {len(vals)}", 1)
        return Element(algebra, vals)
    if not s:
        raise ElementParseError("empty element", 1)
    offset = len(text) - len(text.lstrip())
    coeffs = np.zeros(algebra.dim)
    pos = 0
    first = True
    while pos < len(s):
        m = _TERM.match(s, pos)
        sign_tok, num, star, blade = m.groups()
        if m.end() == pos or (num is None and blade is None):
            bad = m.end() if m.end() < len(s) else pos
            raise ElementParseError(f"unexpected character {s[bad]!r}", offset + bad + 1)
        if not first and sign_tok is None:
            raise ElementParseError("missing '+' or '-' between terms", offset + pos + 1)
        if star and (num is None or blade is None):
            raise ElementParseError("'*' must join a number and a unit", offset + pos + 1)
        value = float(num) if num is not None else 1.0
        if sign_tok == "-":
            value = -value
        if blade is None:
            coeffs[0] += value
        else:
            bsign, idx = _blade_index(algebra, blade, offset + pos + 1)
            coeffs[idx] += bsign * value
        pos = m.end()
        first = False
    return Element(algebra, coeffs)


def format_element(x: Element, fmt: str = "{:.17g}") -> str:
    """Human-readable ``c0 + c1 i + ...`` form, dropping zero terms."""
    terms = []
    for c, name in zip(x.coeffs, x.algebra.blade_names):
        if c == 0.0:
            continue
        mag = fmt.format(abs(c))
        body = mag if name == "1" else f"{mag}*{name}"
        terms.append(("-" if c < 0 else "+", body))
    if not terms:
        return "0"
    head_sign, head = terms[0]
    out = ("-" if head_sign == "-" else "") + head
    for sgn, body in terms[1:]:
        out += f" {sgn} {body}"
    return out
