"""Small arithmetic expression grammar for profile and metric functions.

Accepted: numbers, the variables a model declares, ``+ - * / ^`` (``**``
also accepted), unary minus, ``sin cos exp sqrt`` and the constants ``pi``
and ``e``.  Expressions are parsed with :mod:`ast`, checked against that
whitelist, and converted to sympy so derivatives are exact.
"""

import ast

import numpy as np
import sympy as sp

_FUNCS = {"sin": sp.sin, "cos": sp.cos, "exp": sp.exp, "sqrt": sp.sqrt}
_CONSTS = {"pi": sp.pi, "e": sp.E}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}


class ExpressionError(ValueError):
    pass


def parse(text, variables=("z",)):
    """Parse `text` into a sympy expression over the named variables."""
    symbols = {name: sp.Symbol(name, real=True) for name in variables}
    try:
        tree = ast.parse(str(text).replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return sp.nsimplify(node.value) if isinstance(node.value, int) else sp.Float(node.value)
        if isinstance(node, ast.Name):
            if node.id in symbols:
                return symbols[node.id]
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](build(node.left), build(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            val = build(node.operand)
            return -val if isinstance(node.op, ast.USub) else val
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            return _FUNCS[node.func.id](build(node.args[0]))
        raise ExpressionError(f"unsupported construct {ast.dump(node)[:40]!r} in {text!r}")

    return build(tree)


def compile_scalar(expr, variables=("z",)):
    """Numpy-broadcasting callable for a sympy expression."""
    syms = [sp.Symbol(name, real=True) for name in variables]
    fn = sp.lambdify(syms, expr, modules="numpy")

    def wrapped(*args):
        out = fn(*args)
        shape = np.broadcast_shapes(*(np.shape(a) for a in args)) if args else ()
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    return wrapped


def profile_functions(text, order=2):
    """Return ``[r, r', ..., r^(order)]`` as vectorised callables of ``z``."""
    expr = parse(text, ("z",))
    z = sp.Symbol("z", real=True)
    out = []
    for _ in range(order + 1):
        out.append(compile_scalar(expr, ("z",)))
        expr = sp.diff(expr, z)
    return out


def profile_jet(text, order=2):
    """One callable returning the stacked array ``[r, r', ..., r^(order)]`` at z."""
    z = sp.Symbol("z", real=True)
    expr = parse(text, ("z",))
    derivs = [expr]
    for _ in range(order):
        derivs.append(sp.diff(derivs[-1], z))
    fn = sp.lambdify([z], derivs, modules="numpy")

    def jet(zs):
        zs = np.asarray(zs, float)
        # constant derivatives come back as scalars; they broadcast downstream
        return [v if isinstance(v, np.ndarray) else float(v) for v in fn(zs)]

    return jet
