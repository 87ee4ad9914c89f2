"""Sparse multivariate polynomials and rational functions.

A polynomial in ``nvars`` variables is stored as a mapping from exponent
tuples to float coefficients: ``z0**2*z1 + 3`` over two variables becomes
``{(2, 1): 1.0, (0, 0): 3.0}``.  Zero-coefficient terms are never stored, so
the representation is canonical and degree queries are exact integer
arithmetic on exponents.  Coefficients are plain doubles; every consumer in
this package needs exact degrees, never exact coefficients.

Rational functions are numerator/denominator pairs and are *never* reduced:
``(z0*z1) / z1`` keeps degree 2.  This is deliberate.  All complexity
accounting downstream treats degrees as formal upper bounds, and the
arithmetic here (common-denominator addition, cross multiplication) mirrors
exactly the degree bookkeeping that the program analyzer performs, so the
two can be cross-checked term by term.

Structures that mix several variable families fix one ordering throughout
the package: hyperparameters first, then model parameters, then auxiliary
variables.
"""

from __future__ import annotations

from types import MappingProxyType
from typing import Mapping, Sequence

from .errors import SingularityError

#: Below this magnitude a denominator counts as a pole.
DEFAULT_SINGULARITY_TOL = 1e-12

Exponents = tuple[int, ...]


class Polynomial:
    """Immutable sparse polynomial in a fixed number of variables."""

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], float] | None = None):
        if nvars < 1:
            raise ValueError(f"need at least one variable, got nvars={nvars}")
        clean: dict[Exponents, float] = {}
        if terms:
            for exps, coef in terms.items():
                key = tuple(int(e) for e in exps)
                if len(key) != nvars:
                    raise ValueError(
                        f"exponent vector {key} has length {len(key)}, expected {nvars}"
                    )
                if any(e < 0 for e in key):
                    raise ValueError(f"negative exponent in {key}")
                c = float(coef)
                if c != 0.0:
                    clean[key] = c
        self.nvars = nvars
        self._terms = clean

    @classmethod
    def _raw(cls, nvars: int, terms: dict[Exponents, float]) -> "Polynomial":
        # Internal fast path: `terms` must already be canonical.
        poly = cls.__new__(cls)
        poly.nvars = nvars
        poly._terms = terms
        return poly

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, value: float) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Polynomial":
        """The monomial ``z_index``."""
        if not 0 <= index < nvars:
            raise ValueError(f"variable index {index} out of range for nvars={nvars}")
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, {tuple(exps): 1.0})

    # ------------------------------------------------------------------
    # queries
    # ------------------------------------------------------------------

    @property
    def terms(self) -> Mapping[Exponents, float]:
        return MappingProxyType(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Total degree; the zero polynomial has degree 0 by convention."""
        return max((sum(e) for e in self._terms), default=0)

    def evaluate(self, z: Sequence[float]) -> float:
        if len(z) != self.nvars:
            raise ValueError(f"point has dimension {len(z)}, expected {self.nvars}")
        total = 0.0
        for exps, coef in self._terms.items():
            term = coef
            for zi, e in zip(z, exps):
                if e:
                    term *= float(zi) ** e
            total += term
        return total

    # ------------------------------------------------------------------
    # arithmetic
    # ------------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, (int, float)):
            return Polynomial.constant(self.nvars, other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out = dict(self._terms)
        for exps, coef in other._terms.items():
            c = out.get(exps, 0.0) + coef
            if c == 0.0:
                out.pop(exps, None)
            else:
                out[exps] = c
        return Polynomial._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            if other == 0:
                return Polynomial.zero(self.nvars)
            return Polynomial._raw(
                self.nvars, {e: c * float(other) for e, c in self._terms.items()}
            )
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out: dict[Exponents, float] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                out[key] = out.get(key, 0.0) + c1 * c2
        return Polynomial._raw(self.nvars, {e: c for e, c in out.items() if c != 0.0})

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers")
        result = Polynomial.constant(self.nvars, 1.0)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __repr__(self):
        if not self._terms:
            return "Polynomial(0)"
        bits = []
        for exps, coef in sorted(self._terms.items()):
            mons = [f"z{i}" if e == 1 else f"z{i}^{e}" for i, e in enumerate(exps) if e]
            if not mons:
                bits.append(f"{coef:g}")
            elif coef == 1.0:
                bits.append("*".join(mons))
            else:
                bits.append(f"{coef:g}*" + "*".join(mons))
        return "Polynomial(" + " + ".join(bits) + ")"

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------

    def to_json(self) -> dict:
        """JSON object with terms ordered lexicographically by exponents."""
        return {
            "nvars": self.nvars,
            "terms": [
                {"exps": list(e), "coef": c} for e, c in sorted(self._terms.items())
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "Polynomial":
        return cls(obj["nvars"], {tuple(t["exps"]): t["coef"] for t in obj["terms"]})


class RationalFunction:
    """A formal quotient of two polynomials; no cancellation is performed."""

    __slots__ = ("numerator", "denominator")

    def __init__(self, numerator: Polynomial, denominator: Polynomial | None = None):
        if denominator is None:
            denominator = Polynomial.constant(numerator.nvars, 1.0)
        if numerator.nvars != denominator.nvars:
            raise ValueError(
                f"nvars mismatch: {numerator.nvars} vs {denominator.nvars}"
            )
        if denominator.is_zero():
            raise ZeroDivisionError("denominator is the zero polynomial")
        self.numerator = numerator
        self.denominator = denominator

    @property
    def nvars(self) -> int:
        return self.numerator.nvars

    @property
    def degree(self) -> int:
        """max(deg numerator, deg denominator) of the uncancelled pair."""
        return max(self.numerator.degree, self.denominator.degree)

    def evaluate(
        self, z: Sequence[float], *, singularity_tol: float = DEFAULT_SINGULARITY_TOL
    ) -> float:
        den = self.denominator.evaluate(z)
        if abs(den) <= singularity_tol:
            raise SingularityError(
                f"denominator magnitude {abs(den):.3e} within {singularity_tol:.1e} "
                "of zero at the evaluation point"
            )
        return self.numerator.evaluate(z) / den

    def _coerce(self, other):
        if isinstance(other, RationalFunction):
            if other.nvars != self.nvars:
                raise ValueError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, Polynomial):
            return RationalFunction(other)
        if isinstance(other, (int, float)):
            return RationalFunction(Polynomial.constant(self.nvars, other))
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        num = self.numerator * other.denominator + other.numerator * self.denominator
        return RationalFunction(num, self.denominator * other.denominator)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.numerator, self.denominator)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return RationalFunction(
            self.numerator * other.numerator, self.denominator * other.denominator
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if other.numerator.is_zero():
            raise ZeroDivisionError("division by a rational function with zero numerator")
        return RationalFunction(
            self.numerator * other.denominator, self.denominator * other.numerator
        )

    def __eq__(self, other):
        if not isinstance(other, RationalFunction):
            return NotImplemented
        # Structural comparison of the formal pair, not equality of values.
        return (
            self.numerator == other.numerator and self.denominator == other.denominator
        )

    def __repr__(self):
        return f"RationalFunction({self.numerator!r} / {self.denominator!r})"

    def to_json(self) -> dict:
        return {
            "numerator": self.numerator.to_json(),
            "denominator": self.denominator.to_json(),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "RationalFunction":
        return cls(
            Polynomial.from_json(obj["numerator"]),
            Polynomial.from_json(obj["denominator"]),
        )
