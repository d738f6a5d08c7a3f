"""Small expression language over the double-null variables z, w, zt, wt.

Expressions are immutable, hash-consed trees.  Differentiation follows the
Wirtinger convention: the four variables are independent symbols and the
real slice zt = conj(z), wt = conj(w) is imposed only when evaluating.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("-" | "+") unary | power ;
    power   = atom [ ("^" | "**") ["-"] integer ] ;
    atom    = number | "i" | ident | func "(" expr ")" | "(" expr ")" ;
    func    = "exp" | "log" | "sqrt" | "conj" ;
    number  = digits [ "." digits ] [ ("e" | "E") ["+" | "-"] digits ] ;
    ident   = letter { letter | digit | "_" } ;

Identifiers are the variables z, w, zt, wt, the imaginary unit i, or a
parameter name declared to the parser.
"""

from __future__ import annotations

import threading
from collections import OrderedDict

import numpy as np

VARIABLES = ("z", "w", "zt", "wt")
FUNCTIONS = ("exp", "log", "sqrt", "conj")
MIRROR = {"z": "zt", "zt": "z", "w": "wt", "wt": "w"}


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.message = message
        self.offset = offset


class UnboundParameterError(ExprError):
    pass


class SingularEvaluationError(ExprError):
    def __init__(self, message, location=None):
        text = message if location is None else f"{message} at {location}"
        super().__init__(text)
        self.location = location


_intern = {}
_intern_lock = threading.Lock()


class Expr:
    """Base node.  Construct through the helper functions, never directly."""

    __slots__ = ("op", "args", "_hash", "__weakref__")

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise ExprError("only integer powers are supported")
        return power(self, n)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        # nodes are interned, so structural equality is identity
        return self is other

    def __repr__(self):
        return f"Expr({to_string(self)!r})"

    def __str__(self):
        return to_string(self)


def _node(op, args):
    key = (op, args)
    node = _intern.get(key)
    if node is not None:
        return node
    with _intern_lock:
        node = _intern.get(key)
        if node is None:
            node = Expr()
            node.op = op
            node.args = args
            node._hash = hash(key)
            _intern[key] = node
    return node


def const(value):
    v = complex(value)
    if v == 0:
        v = 0j  # drop the sign of negative zero
    return _node("const", (v.real + 0.0, v.imag + 0.0))


def var(name):
    if name not in VARIABLES:
        raise ExprError(f"unknown variable {name!r}")
    return _node("var", (name,))


def param(name):
    return _node("param", (name,))


def as_expr(x):
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, complex, np.number)):
        return const(x)
    if isinstance(x, str):
        return parse(x)
    raise ExprError(f"cannot convert {type(x).__name__} to an expression")


def const_value(e):
    return complex(e.args[0], e.args[1])


def is_const(e, value=None):
    if e.op != "const":
        return False
    return value is None or const_value(e) == value


ZERO = const(0)
ONE = const(1)


def add(a, b):
    if is_const(a) and is_const(b):
        return const(const_value(a) + const_value(b))
    if is_const(a, 0):
        return b
    if is_const(b, 0):
        return a
    return _node("add", (a, b))


def sub(a, b):
    if is_const(a) and is_const(b):
        return const(const_value(a) - const_value(b))
    if is_const(b, 0):
        return a
    if is_const(a, 0):
        return neg(b)
    if a is b:
        return ZERO
    return _node("sub", (a, b))


def neg(a):
    if is_const(a):
        return const(-const_value(a))
    if a.op == "neg":
        return a.args[0]
    return _node("neg", (a,))


def mul(a, b):
    if is_const(a) and is_const(b):
        return const(const_value(a) * const_value(b))
    if is_const(a, 0) or is_const(b, 0):
        return ZERO
    if is_const(a, 1):
        return b
    if is_const(b, 1):
        return a
    if is_const(a, -1):
        return neg(b)
    if is_const(b, -1):
        return neg(a)
    return _node("mul", (a, b))


def div(a, b):
    if is_const(b, 0):
        raise SingularEvaluationError("division by literal zero")
    if is_const(a) and is_const(b):
        return const(const_value(a) / const_value(b))
    if is_const(a, 0):
        return ZERO
    if is_const(b, 1):
        return a
    return _node("div", (a, b))


def power(a, n):
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return a
    if is_const(a):
        v = const_value(a)
        if v == 0 and n < 0:
            raise SingularEvaluationError("zero raised to a negative power")
        return const(v ** n)
    return _node("pow", (a, n))


def func(name, a):
    if name not in FUNCTIONS:
        raise ExprError(f"unknown function {name!r}")
    if is_const(a):
        v = const_value(a)
        if name == "conj":
            return const(v.conjugate())
        if name == "exp":
            return const(np.exp(v))
    return _node(name, (a,))


def exp(a):
    return func("exp", as_expr(a))


def log(a):
    return func("log", as_expr(a))


def sqrt(a):
    return func("sqrt", as_expr(a))


def conj(a):
    return func("conj", as_expr(a))


# ---------------------------------------------------------------- parsing

class _Lexer:
    def __init__(self, text):
        self.text = text
        self.tokens = []
        self._scan()
        self.pos = 0

    def _scan(self):
        t = self.text
        i = 0
        n = len(t)
        while i < n:
            c = t[i]
            if c.isspace():
                i += 1
                continue
            if c.isdigit() or (c == "." and i + 1 < n and t[i + 1].isdigit()):
                j = i
                while j < n and t[j].isdigit():
                    j += 1
                if j < n and t[j] == ".":
                    j += 1
                    while j < n and t[j].isdigit():
                        j += 1
                if j < n and t[j] in "eE":
                    k = j + 1
                    if k < n and t[k] in "+-":
                        k += 1
                    if k < n and t[k].isdigit():
                        while k < n and t[k].isdigit():
                            k += 1
                        j = k
                self.tokens.append(("num", t[i:j], i))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < n and (t[j].isalnum() or t[j] == "_"):
                    j += 1
                self.tokens.append(("id", t[i:j], i))
                i = j
                continue
            if t.startswith("**", i):
                self.tokens.append(("op", "^", i))
                i += 2
                continue
            if c in "+-*/^()":
                self.tokens.append(("op", c, i))
                i += 1
                continue
            raise ParseError(f"unexpected character {c!r}", i)
        self.tokens.append(("end", "", n))

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok


class _Parser:
    def __init__(self, text, params):
        self.lex = _Lexer(text)
        self.params = params

    def parse(self):
        e = self.expr()
        kind, value, offset = self.lex.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {value!r}", offset)
        return e

    def expr(self):
        e = self.term()
        while True:
            kind, value, _ = self.lex.peek()
            if kind == "op" and value in "+-":
                self.lex.take()
                rhs = self.term()
                e = add(e, rhs) if value == "+" else sub(e, rhs)
            else:
                return e

    def term(self):
        e = self.unary()
        while True:
            kind, value, _ = self.lex.peek()
            if kind == "op" and value in "*/":
                self.lex.take()
                rhs = self.unary()
                e = mul(e, rhs) if value == "*" else div(e, rhs)
            else:
                return e

    def unary(self):
        kind, value, _ = self.lex.peek()
        if kind == "op" and value in "+-":
            self.lex.take()
            inner = self.unary()
            return neg(inner) if value == "-" else inner
        return self.power()

    def power(self):
        base = self.atom()
        kind, value, _ = self.lex.peek()
        if kind == "op" and value == "^":
            self.lex.take()
            sign = 1
            kind, value, offset = self.lex.peek()
            if kind == "op" and value == "-":
                self.lex.take()
                sign = -1
                kind, value, offset = self.lex.peek()
            if kind != "num" or not value.isdigit():
                raise ParseError("expected integer exponent", offset)
            self.lex.take()
            return power(base, sign * int(value))
        return base

    def atom(self):
        kind, value, offset = self.lex.take()
        if kind == "num":
            return const(float(value) if any(c in value for c in ".eE") else int(value))
        if kind == "id":
            if value in FUNCTIONS:
                k2, v2, o2 = self.lex.take()
                if v2 != "(":
                    raise ParseError("expected '(' after function name", o2)
                inner = self.expr()
                k3, v3, o3 = self.lex.take()
                if v3 != ")":
                    raise ParseError("expected ')'", o3)
                return func(value, inner)
            if value in VARIABLES:
                return var(value)
            if value == "i":
                return const(1j)
            if self.params is None or value in self.params:
                return param(value)
            raise ParseError(f"unknown identifier {value!r}", offset)
        if kind == "op" and value == "(":
            inner = self.expr()
            k2, v2, o2 = self.lex.take()
            if v2 != ")":
                raise ParseError("expected ')'", o2)
            return inner
        if kind == "end":
            raise ParseError("unexpected end of input", offset)
        raise ParseError(f"unexpected token {value!r}", offset)


def parse(text, params=()):
    """Parse ``text`` into an Expr.

    ``params`` lists the admissible parameter names; passing None accepts
    any identifier as a parameter.
    """
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression", 0)
    allowed = None if params is None else set(params)
    try:
        return _Parser(text, allowed).parse()
    except ParseError as exc:
        # report byte offsets into the UTF-8 encoding
        raise ParseError(exc.message, len(text[:exc.offset].encode("utf-8"))) from None


# ---------------------------------------------------------------- printing

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _fmt_real(x):
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _fmt_const(v):
    re, im = v.real, v.imag
    if im == 0:
        return _fmt_real(re)
    if re == 0:
        if im == 1:
            return "i"
        return f"{_fmt_real(im)}*i"
    sign = "+" if im > 0 else "-"
    ims = "i" if abs(im) == 1 else f"{_fmt_real(abs(im))}*i"
    return f"({_fmt_real(re)} {sign} {ims})"


def _prec(e):
    if e.op == "const":
        v = const_value(e)
        if v.imag != 0 and v.real == 0 and v.imag != 1:
            return 2  # printed as a product
        if v.imag == 0 and v.real < 0:
            return 3  # printed with a leading minus
        return 5
    return _PREC.get(e.op, 5)


def to_string(e):
    op = e.op
    if op == "const":
        return _fmt_const(const_value(e))
    if op in ("var", "param"):
        return e.args[0]
    if op in FUNCTIONS:
        return f"{op}({to_string(e.args[0])})"
    if op == "neg":
        inner = e.args[0]
        s = to_string(inner)
        return f"-({s})" if _prec(inner) <= 3 else f"-{s}"
    if op == "pow":
        base, n = e.args
        s = to_string(base)
        if _prec(base) <= 4:
            s = f"({s})"
        return f"{s}^{n}"
    a, b = e.args
    p = _PREC[op]
    sa, sb = to_string(a), to_string(b)
    if _prec(a) < p:
        sa = f"({sa})"
    # right operand of a non-commutative or same-level op needs parens
    if _prec(b) < p or (_prec(b) == p and op in ("sub", "div", "add", "mul")):
        sb = f"({sb})"
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[op]
    return f"{sa} {sym} {sb}"


# ---------------------------------------------------------------- analysis

def free_symbols(e, kind="param"):
    out = set()
    stack = [e]
    seen = set()
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        if n.op == kind:
            out.add(n.args[0])
        elif n.op not in ("const", "var", "param"):
            stack.extend(a for a in n.args if isinstance(a, Expr))
    return out


def substitute(e, mapping):
    """Replace parameters (or variables) by expressions."""
    mapping = {k: as_expr(v) for k, v in mapping.items()}
    memo = {}

    def rec(n):
        r = memo.get(id(n))
        if r is not None:
            return r
        if n.op in ("var", "param"):
            r = mapping.get(n.args[0], n)
        elif n.op == "const":
            r = n
        else:
            r = _rebuild(n, [rec(a) if isinstance(a, Expr) else a for a in n.args])
        memo[id(n)] = r
        return r

    return rec(e)


def _rebuild(n, args):
    op = n.op
    if op == "add":
        return add(*args)
    if op == "sub":
        return sub(*args)
    if op == "mul":
        return mul(*args)
    if op == "div":
        return div(*args)
    if op == "neg":
        return neg(args[0])
    if op == "pow":
        return power(args[0], args[1])
    return func(op, args[0])


def expand_conj(e):
    """Push conj through the tree: swap z<->zt, w<->wt, conjugate literals."""
    memo = {}

    def rec(n, flip):
        key = (id(n), flip)
        r = memo.get(key)
        if r is not None:
            return r
        op = n.op
        if op == "const":
            r = const(const_value(n).conjugate()) if flip else n
        elif op == "var":
            r = var(MIRROR[n.args[0]]) if flip else n
        elif op == "param":
            # parameters are treated as real under conjugation
            r = n
        elif op == "conj":
            r = rec(n.args[0], not flip)
        else:
            r = _rebuild(n, [rec(a, flip) if isinstance(a, Expr) else a for a in n.args])
        memo[key] = r
        return r

    return rec(e, False)


_diff_cache = {}


def wirtinger_diff(e, v):
    """Exact partial derivative of ``e`` with respect to variable ``v``."""
    if v not in VARIABLES:
        raise ExprError(f"unknown variable {v!r}")
    key = (e, v)
    r = _diff_cache.get(key)
    if r is not None:
        return r
    op = e.op
    if op == "const" or op == "param":
        r = ZERO
    elif op == "var":
        r = ONE if e.args[0] == v else ZERO
    elif op == "add":
        r = add(wirtinger_diff(e.args[0], v), wirtinger_diff(e.args[1], v))
    elif op == "sub":
        r = sub(wirtinger_diff(e.args[0], v), wirtinger_diff(e.args[1], v))
    elif op == "neg":
        r = neg(wirtinger_diff(e.args[0], v))
    elif op == "mul":
        a, b = e.args
        r = add(mul(wirtinger_diff(a, v), b), mul(a, wirtinger_diff(b, v)))
    elif op == "div":
        a, b = e.args
        da, db = wirtinger_diff(a, v), wirtinger_diff(b, v)
        r = sub(div(da, b), div(mul(a, db), power(b, 2)))
    elif op == "pow":
        a, n = e.args
        r = mul(mul(const(n), power(a, n - 1)), wirtinger_diff(a, v))
    elif op == "exp":
        r = mul(e, wirtinger_diff(e.args[0], v))
    elif op == "log":
        r = div(wirtinger_diff(e.args[0], v), e.args[0])
    elif op == "sqrt":
        r = div(wirtinger_diff(e.args[0], v), mul(const(2), e))
    elif op == "conj":
        # d/dv conj(u) = conj(d u / d mirror(v))
        r = func("conj", wirtinger_diff(e.args[0], MIRROR[v]))
    else:
        raise ExprError(f"cannot differentiate node {op!r}")
    _diff_cache[key] = r
    return r


def diff_multi(e, counts):
    """Derivative for a multi-index of counts over (z, w, zt, wt)."""
    for v, c in zip(VARIABLES, counts):
        for _ in range(c):
            e = wirtinger_diff(e, v)
    return e


# ---------------------------------------------------------------- evaluation

class Evaluator:
    """Vectorized evaluation of many expressions on one point set.

    Intermediate node values are shared between expressions, which matters
    when a whole derivative jet is evaluated at once.  The memo is an LRU
    cache bounded by ``budget`` bytes so that large grids stay in memory.
    """

    def __init__(self, x, params=None, budget=256 * 2 ** 20):
        x = [np.asarray(c, dtype=float) for c in x]
        self.x = x
        z = x[0] + 1j * x[1]
        w = x[2] + 1j * x[3]
        self.env = {"z": z, "w": w, "zt": np.conj(z), "wt": np.conj(w)}
        self.params = {k: complex(v) for k, v in (params or {}).items()}
        self.shape = z.shape
        self.memo = OrderedDict()
        self.budget = budget
        self._bytes = 0

    def _where(self, mask):
        mask = np.broadcast_to(mask, self.shape)
        if mask.ndim == 0:
            first = ()
        else:
            idx = np.argwhere(mask)
            if len(idx) == 0:
                return None
            first = tuple(idx[0])
        return "x=(" + ", ".join(f"{float(np.broadcast_to(c, self.shape)[first]):.6g}" for c in self.x) + ")"

    def __call__(self, e):
        r = self.memo.get(e)
        if r is not None:
            self.memo.move_to_end(e)
            return r
        op = e.op
        if op == "const":
            r = np.broadcast_to(np.complex128(const_value(e)), self.shape)
        elif op == "var":
            r = self.env[e.args[0]]
        elif op == "param":
            name = e.args[0]
            if name not in self.params:
                raise UnboundParameterError(f"unbound parameter {name!r}")
            r = np.broadcast_to(np.complex128(self.params[name]), self.shape)
        elif op == "add":
            r = self(e.args[0]) + self(e.args[1])
        elif op == "sub":
            r = self(e.args[0]) - self(e.args[1])
        elif op == "neg":
            r = -self(e.args[0])
        elif op == "mul":
            r = self(e.args[0]) * self(e.args[1])
        elif op == "div":
            b = self(e.args[1])
            bad = b == 0
            if np.any(bad):
                raise SingularEvaluationError("division by zero", self._where(bad))
            r = self(e.args[0]) / b
        elif op == "pow":
            a = self(e.args[0])
            n = e.args[1]
            if n < 0:
                bad = a == 0
                if np.any(bad):
                    raise SingularEvaluationError("zero raised to a negative power", self._where(bad))
                r = 1.0 / a ** (-n)
            else:
                r = a ** n
        elif op == "exp":
            r = np.exp(self(e.args[0]))
        elif op in ("log", "sqrt"):
            a = self(e.args[0])
            # principal branch; the cut along the nonpositive reals is singular
            bad = (a.real <= 0) & (np.abs(a.imag) <= 1e-300)
            if np.any(bad):
                raise SingularEvaluationError(f"{op} of a nonpositive real", self._where(bad))
            r = np.log(a) if op == "log" else np.sqrt(a)
        elif op == "conj":
            r = np.conj(self(e.args[0]))
        else:
            raise ExprError(f"cannot evaluate node {op!r}")
        self._store(e, r)
        return r

    def _store(self, e, r):
        # broadcast constants and the coordinate arrays cost nothing extra
        size = r.nbytes if r.base is None and r.flags.owndata else 0
        self.memo[e] = r
        self._bytes += size
        while self._bytes > self.budget and len(self.memo) > 1:
            _, old = self.memo.popitem(last=False)
            if old.base is None and old.flags.owndata:
                self._bytes -= old.nbytes


def evaluate(e, x, params=None):
    """Evaluate on real coordinates ``x`` = (x1, x2, x3, x4) (arrays or floats)."""
    return Evaluator(x, params)(as_expr(e))


def eval_at(e, point, params=None):
    """Scalar evaluation at a Point (anything with x1..x4 attributes or a 4-tuple)."""
    coords = point.coords if hasattr(point, "coords") else tuple(point)
    val = Evaluator([np.array(c, dtype=float) for c in coords], params)(as_expr(e))
    return complex(val)


def point_from_complex(z, w):
    z, w = complex(z), complex(w)
    return (z.real, z.imag, w.real, w.imag)


def count_nodes(e):
    seen = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        stack.extend(a for a in n.args if isinstance(a, Expr))
    return len(seen)


__all__ = [
    "Expr", "ExprError", "ParseError", "UnboundParameterError", "SingularEvaluationError",
    "VARIABLES", "parse", "to_string", "wirtinger_diff", "diff_multi", "evaluate", "eval_at",
    "Evaluator", "const", "var", "param", "as_expr", "exp", "log", "sqrt", "conj",
    "expand_conj", "substitute", "free_symbols", "point_from_complex",
]
