"""A small expression language for radial metric/norm profiles.

Grammar (LL(1), precedence ^  >  unary -  >  * /  >  + -, ^ right-assoc):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | 'r' | 'w' | FUNC '(' expr ')' | '(' expr ')'

Variables: r (radius in (0,1)) and w = ln|ln r|.  Functions: exp, ln,
abs, and the shared cutoffs psi, chi, phi_step (see ``steps``).
Numeric differentiation uses central differences with one Richardson
step, falling back to one-sided stencils at band/domain edges.
"""

import math
from dataclasses import dataclass

from .steps import smooth_step

_FUNCS = {
    "exp": math.exp,
    "ln": None,  # handled specially for the domain diagnostic
    "abs": abs,
    "psi": lambda v: smooth_step("psi", v),
    "chi": lambda v: smooth_step("chi", v),
    "phi_step": lambda v: smooth_step("phi", v),
}

_VARS = ("r", "w")


class ProfileSyntaxError(ValueError):
    def __init__(self, message, pos):
        super().__init__(f"{message} at column {pos + 1}")
        self.pos = pos


class ProfileDomainError(ValueError):
    def __init__(self, message, pos):
        super().__init__(f"{message} (subexpression at column {pos + 1})")
        self.pos = pos


@dataclass(frozen=True)
class ProfileExpr:
    """Parsed profile expression; evaluate with eval_profile/deriv_profile."""
    ast: tuple
    source: str

    def __call__(self, r):
        return eval_profile(self, r)


def _tokenize(src):
    tokens = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c in "+-*/^()":
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            while j < n and (src[j].isdigit() or src[j] == "."):
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                while k < n and src[k].isdigit():
                    k += 1
                j = k
            try:
                value = float(src[i:j])
            except ValueError:
                raise ProfileSyntaxError(f"bad number {src[i:j]!r}", i) from None
            tokens.append(("num", value, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("name", src[i:j], i))
            i = j
            continue
        raise ProfileSyntaxError(f"unexpected character {c!r}", i)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise ProfileSyntaxError(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        return tok

    def expr(self):
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op, _, pos = self.next()
            node = ("bin", pos, op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op, _, pos = self.next()
            node = ("bin", pos, op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "-":
            _, _, pos = self.next()
            return ("neg", pos, self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            _, _, pos = self.next()
            return ("bin", pos, "^", base, self.unary())
        return base

    def atom(self):
        kind, value, pos = self.next()
        if kind == "num":
            return ("num", pos, value)
        if kind == "name":
            if value in _VARS:
                return ("var", pos, value)
            if value in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return ("call", pos, value, arg)
            raise ProfileSyntaxError(f"unknown identifier {value!r}", pos)
        if kind == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ProfileSyntaxError(f"unexpected token {value!r}", pos)


def parse(src):
    """Parse a profile expression, raising ProfileSyntaxError with position."""
    parser = _Parser(_tokenize(src))
    ast = parser.expr()
    parser.expect("end")
    return ProfileExpr(ast=ast, source=src)


def _eval_node(node, r, w):
    kind = node[0]
    if kind == "num":
        return node[2]
    if kind == "var":
        return r if node[2] == "r" else w
    if kind == "neg":
        return -_eval_node(node[2], r, w)
    if kind == "call":
        _, pos, name, arg = node
        v = _eval_node(arg, r, w)
        if name == "ln":
            if v <= 0.0:
                raise ProfileDomainError(f"ln of nonpositive value {v!r}", pos)
            return math.log(v)
        return _FUNCS[name](v)
    _, pos, op, left, right = node
    a = _eval_node(left, r, w)
    b = _eval_node(right, r, w)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0.0:
            raise ProfileDomainError("division by zero", pos)
        return a / b
    # '^'
    try:
        return math.pow(a, b)
    except (ValueError, OverflowError):
        raise ProfileDomainError(f"invalid power {a!r} ^ {b!r}", pos) from None


def eval_profile(expr, r):
    """Evaluate at radius r in (0, 1); w = ln|ln r| is provided alongside."""
    if not 0.0 < r < 1.0:
        raise ProfileDomainError(f"radius {r!r} outside (0, 1)", 0)
    w = math.log(-math.log(r))
    return _eval_node(expr.ast, r, w)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _print_node(node, parent_prec=0):
    kind = node[0]
    if kind == "num":
        return repr(node[2])
    if kind == "var":
        return node[2]
    if kind == "neg":
        inner = _print_node(node[2], 3)
        return f"(-{inner})" if parent_prec > 3 else f"-{inner}"
    if kind == "call":
        return f"{node[2]}({_print_node(node[3], 0)})"
    _, _, op, left, right = node
    prec = _PREC[op]
    ls = _print_node(left, prec)
    rs = _print_node(right, prec + (0 if op == "^" else 1))
    s = f"{ls} {op} {rs}"
    return f"({s})" if prec < parent_prec else s


def to_source(expr):
    """Normalized source form; parse(to_source(e)) has the same AST shape."""
    return _print_node(expr.ast)


def deriv_profile(expr, r, order=1, h=None):
    """Numeric derivative in r of given order (1 or 2).

    Central differences with one Richardson step; if a stencil point
    leaves the domain (band edge), falls back to a one-sided stencil.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if h is None:
        h = 1e-3 * max(abs(r), 0.05) if order == 1 else 2.5e-3 * max(abs(r), 0.05)
    h = min(h, 0.45 * r, 0.45 * (1.0 - r))

    def f(x):
        return eval_profile(expr, x)

    def central(step):
        if order == 1:
            return (f(r + step) - f(r - step)) / (2.0 * step)
        return (f(r + step) - 2.0 * f(r) + f(r - step)) / step**2

    try:
        d_h = central(h)
        d_h2 = central(h / 2.0)
        return (4.0 * d_h2 - d_h) / 3.0
    except ProfileDomainError:
        pass
    # one-sided fallback; second-order accurate
    side = 1.0 if r < 0.5 else -1.0
    s = side * h
    if order == 1:
        return (-3.0 * f(r) + 4.0 * f(r + s) - f(r + 2.0 * s)) / (2.0 * s)
    return (2.0 * f(r) - 5.0 * f(r + s) + 4.0 * f(r + 2.0 * s) - f(r + 3.0 * s)) / s**2
