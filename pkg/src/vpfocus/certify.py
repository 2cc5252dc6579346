"""Interval-safe evaluation of inequality expressions.

An inequality is written once as Python-syntax text, e.g.
``"a0 >= 20*d_k*eta**(-1/3)*C0**(1/3)"``. The same text is recorded in
reports and evaluated with :mod:`mpmath.iv` interval arithmetic: numeric
literals become exact intervals, variables are exact point intervals of the
supplied values, and the check passes only if the relation holds for the
whole enclosure.
"""
from __future__ import annotations

import ast
from contextlib import contextmanager
from dataclasses import asdict, dataclass

import mpmath
from mpmath import iv

@contextmanager
def _ivdps(dps):
    old = iv.dps
    iv.dps = dps
    try:
        with mpmath.workdps(dps):
            yield
    finally:
        iv.dps = old


_FUNCS = {"sqrt": iv.sqrt, "exp": iv.exp, "log": iv.log, "abs": abs}


@dataclass(frozen=True)
class Check:
    name: str
    expression: str
    lhs: float
    rhs: float
    margin: float  # (rhs - lhs) / |rhs| oriented so that positive means satisfied
    passed: bool

    def as_dict(self):
        return asdict(self)


class _Literals(ast.NodeTransformer):
    def visit_Constant(self, node):
        if isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return ast.copy_location(
                ast.Call(func=ast.Name("_lit", ast.Load()), args=[ast.Constant(repr(node.value))], keywords=[]),
                node)
        return node


def _compile(text):
    tree = ast.parse(text, mode="eval")
    tree = ast.fix_missing_locations(_Literals().visit(tree))
    return tree


def _interval(x):
    if isinstance(x, type(iv.mpf(0))):
        return x
    if isinstance(x, mpmath.mpf):
        return iv.mpf(x)
    return iv.mpf(float(x)) if not isinstance(x, int) else iv.mpf(x)


def _bounds(x):
    """Endpoints of an interval as plain mpf numbers."""
    lo, hi = x._mpi_
    return mpmath.mpf(lo), mpmath.mpf(hi)


def evaluate(text: str, env: dict, dps: int = 60):
    """Enclosure (lo, hi) of an arithmetic expression over the variables in ``env``."""
    with _ivdps(dps):
        return _bounds(_eval_tree(_compile(text).body, env))


def _eval_tree(node, env):
    scope = {"_lit": lambda s: iv.mpf(s), "pi": iv.pi, **_FUNCS}
    scope.update({k: _interval(v) for k, v in env.items() if v is not None})
    code = compile(ast.Expression(node), "<check>", "eval")
    return eval(code, {"__builtins__": {}}, scope)


def check(name: str, text: str, env: dict, dps: int = 60) -> Check:
    """Evaluate a single comparison ``lhs OP rhs`` with OP in <, <=, >, >=."""
    tree = _compile(text)
    cmp = tree.body
    if not isinstance(cmp, ast.Compare) or len(cmp.ops) != 1:
        raise ValueError(f"expected a single comparison: {text!r}")
    op = cmp.ops[0]
    with _ivdps(dps):
        lhs = _eval_tree(cmp.left, env)
        rhs = _eval_tree(cmp.comparators[0], env)
        if isinstance(op, (ast.Lt, ast.LtE)):
            small, big = lhs, rhs
        elif isinstance(op, (ast.Gt, ast.GtE)):
            small, big = rhs, lhs
        else:
            raise ValueError(f"unsupported comparison in {text!r}")
        strict = isinstance(op, (ast.Lt, ast.Gt))
        s_lo, s_hi = _bounds(small)
        b_lo, b_hi = _bounds(big)
        passed = bool(s_hi < b_lo) if strict else bool(s_hi <= b_lo)
        s_mid, b_mid = (s_lo + s_hi) / 2, (b_lo + b_hi) / 2
        denom = abs(b_mid) if b_mid != 0 else (abs(s_mid) if s_mid != 0 else 1)
        margin = float((b_mid - s_mid) / denom)
        lhs_mid = sum(_bounds(lhs)) / 2
        rhs_mid = sum(_bounds(rhs)) / 2
        return Check(name, text, float(lhs_mid), float(rhs_mid), margin, passed)


def failed(checks):
    return [c for c in checks if not c.passed]
