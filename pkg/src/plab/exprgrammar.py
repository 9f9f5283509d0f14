"""Tiny arithmetic expression grammar for metric coefficients.

Accepted: numeric constants, coordinate names x1..xn, +, -, *, ** and unary
sign.  Anything else (calls, comparisons, attribute access, division) is
rejected, so config files can never execute arbitrary code.
"""

from __future__ import annotations

import ast
from typing import Callable

import numpy as np

__all__ = ["compile_expr"]

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Pow: np.power,
}

_UNOPS = {
    ast.UAdd: np.positive,
    ast.USub: np.negative,
}


def compile_expr(src: str, n: int) -> Callable[[np.ndarray], np.ndarray]:
    """Compile ``src`` into a vectorized map from point rows (m, n) to (m,)."""
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ValueError("bad expression %r: %s" % (src, exc)) from None
    names = {"x%d" % (i + 1): i for i in range(n)}

    def check(node: ast.AST):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            check(node.operand)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            pass
        elif isinstance(node, ast.Name) and node.id in names:
            pass
        else:
            raise ValueError(
                "expression %r uses a construct outside the grammar "
                "(constants, x1..x%d, +, -, *, **)" % (src, n)
            )

    check(tree)

    def evaluate(node: ast.AST, X: np.ndarray):
        if isinstance(node, ast.Expression):
            return evaluate(node.body, X)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](evaluate(node.left, X), evaluate(node.right, X))
        if isinstance(node, ast.UnaryOp):
            return _UNOPS[type(node.op)](evaluate(node.operand, X))
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return X[:, names[node.id]]
        raise AssertionError("unreachable")

    def fn(X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = evaluate(tree, X)
        return np.broadcast_to(np.asarray(out, dtype=float), (X.shape[0],)).copy()

    fn.source = src  # type: ignore[attr-defined]
    return fn
