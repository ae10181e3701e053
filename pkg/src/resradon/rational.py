"""Small rational-expression grammar for scenario files.

Accepted: numbers, the listed identifiers, ``+ - * / ^`` (``**`` too),
parentheses, integer exponents only.  Expressions are parsed with sympy
after a token-level whitelist, so nothing else can be evaluated.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from .errors import InputError

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")
_SAFE_GLOBALS = {"Integer": sp.Integer, "Float": sp.Float, "Rational": sp.Rational, "Symbol": sp.Symbol}


def _tokens(text: str):
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise InputError(f"unexpected character {text[pos:].lstrip()[:1]!r} in {text!r}")
        yield m
        pos = m.end()


def _check_tree(expr, allowed):
    for node in sp.preorder_traversal(expr):
        if isinstance(node, sp.Symbol):
            if node.name not in allowed:
                raise InputError(f"unknown identifier {node.name!r}")
        elif isinstance(node, sp.Pow):
            if not node.exp.is_Integer:
                raise InputError(f"non-integer exponent in {node}")
        elif not isinstance(node, (sp.Add, sp.Mul, sp.Number)):
            raise InputError(f"unsupported construct {type(node).__name__}")


@dataclass(frozen=True, eq=False)
class RationalExpr:
    """A parsed rational function with a numpy evaluator."""

    text: str
    variables: tuple
    expr: sp.Expr

    @classmethod
    def parse(cls, text: str, variables) -> "RationalExpr":
        variables = tuple(variables)
        if not isinstance(text, str) or not text.strip():
            raise InputError("empty expression")
        for m in _tokens(text):
            name = m.group(2)
            if name is not None and name not in variables:
                raise InputError(f"unknown identifier {name!r} in {text!r}; allowed: {', '.join(variables)}")
        syms = {v: sp.Symbol(v) for v in variables}
        try:
            expr = parse_expr(text, local_dict=syms, global_dict=dict(_SAFE_GLOBALS),
                              transformations=standard_transformations + (convert_xor,), evaluate=True)
        except (SyntaxError, TypeError, ValueError, sp.SympifyError) as exc:
            raise InputError(f"cannot parse {text!r}: {exc}") from None
        expr = sp.sympify(expr)
        _check_tree(expr, variables)
        return cls(text, variables, expr)

    @property
    def symbols(self):
        return [sp.Symbol(v) for v in self.variables]

    def _fn(self):
        fn = self.__dict__.get("_cached")
        if fn is None:
            fn = sp.lambdify(self.symbols, self.expr, modules="numpy")
            object.__setattr__(self, "_cached", fn)
        return fn

    def __call__(self, *args):
        args = [np.asarray(a, dtype=complex) for a in args]
        if len(args) != len(self.variables):
            raise InputError(f"expected {len(self.variables)} arguments, got {len(args)}")
        shape = np.broadcast_shapes(*(a.shape for a in args)) if args else ()
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(self._fn()(*args), dtype=complex)
        return np.broadcast_to(out, shape).copy() if out.shape != shape else out

    def on_last_axis(self, x):
        """Evaluate with the variables stacked along the last axis of ``x``."""
        x = np.asarray(x, dtype=complex)
        return self(*(x[..., k] for k in range(x.shape[-1])))

    def diff(self, var: str, k: int = 1) -> "RationalExpr":
        d = sp.diff(self.expr, sp.Symbol(var), k)
        return RationalExpr(f"d^{k}/d{var}^{k}({self.text})", self.variables, d)

    def __repr__(self):
        return f"RationalExpr({self.text!r})"


def affine_names(n: int) -> tuple:
    return tuple(f"u{k}" for k in range(1, n + 1))


def dual_names(n: int) -> tuple:
    return tuple(f"xi{k}" for k in range(n + 1))
