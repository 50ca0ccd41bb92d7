"""Compile the small expression vocabulary used in fixture and bundle files."""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

from .errors import PreconditionError


@lru_cache(maxsize=512)
def _compile(source: str, variables: tuple[str, ...]) -> Callable:
    import sympy

    symbols = sympy.symbols(variables, real=True)
    if not isinstance(symbols, tuple):
        symbols = (symbols,)
    try:
        expr = sympy.sympify(source, locals={v: s for v, s in zip(variables, symbols)})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise PreconditionError(f"cannot parse expression {source!r}: {exc}") from exc
    unknown = {str(s) for s in expr.free_symbols} - set(variables)
    if unknown:
        raise PreconditionError(f"expression {source!r} uses unknown names {sorted(unknown)}")
    return sympy.lambdify(symbols, expr, modules="math")


def compile_scalar(source: str, variables: Sequence[str]) -> Callable[..., float]:
    """Return a float-valued callable of the named variables."""
    fn = _compile(source, tuple(variables))

    def call(*args: float) -> float:
        return float(fn(*args))

    call.__name__ = "expr"
    call.source = source  # type: ignore[attr-defined]
    return call
