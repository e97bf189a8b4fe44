"""Hamiltonian expressions over descriptor components.

Interaction Hamiltonians in this model are polynomials in the *current*
descriptor components of the participating qubits, so they must be
re-evaluated continuously as the descriptors evolve.  Expressions are kept
symbolic (small immutable trees) and are either

* evaluated directly against a dict of descriptor triples, or
* compiled to a flat postfix program executed by the integrator kernel
  (see _kernels.py), which is what makes re-evaluation inside the inner
  loop cheap.

A small string DSL covers everything needed in practice::

    pi/2 * q1.x
    0.25 * acomm(acomm(q1.z, q2.z), q1.x)
    pi/4 * acomm(q1.x, pbar(q3.z, q4.z))

Numbers, ``pi``, the identity ``I``, descriptor references ``<qubit>.<axis>``,
``acomm(a, b)`` = ab + ba, ``icomm(a, b)`` = i(ab - ba), and the mismatch
projector sugar ``pbar(a, b)`` = (2 I - acomm(a, b)) / 4.  Scalars and
operators are distinct types: ``1 + q1.z`` is an error, write ``I + q1.z``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qnum import AXES, DescriptorTriple


class HamiltonianExpr:
    """Base class for expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class DescriptorRef(HamiltonianExpr):
    qubit: str
    axis: int  # 0, 1, 2 for x, y, z

    def __post_init__(self):
        if isinstance(self.axis, str):
            object.__setattr__(self, "axis", AXES.index(self.axis))
        if self.axis not in (0, 1, 2):
            raise ValueError(f"bad axis {self.axis}")


@dataclass(frozen=True)
class Identity(HamiltonianExpr):
    pass


@dataclass(frozen=True)
class Scale(HamiltonianExpr):
    factor: float
    child: HamiltonianExpr


@dataclass(frozen=True)
class Sum(HamiltonianExpr):
    terms: tuple


@dataclass(frozen=True)
class Product(HamiltonianExpr):
    left: HamiltonianExpr
    right: HamiltonianExpr


@dataclass(frozen=True)
class AntiCommutator(HamiltonianExpr):
    left: HamiltonianExpr
    right: HamiltonianExpr


@dataclass(frozen=True)
class CommutatorTimesI(HamiltonianExpr):
    """i (ab - ba); Hermitian whenever a and b are."""

    left: HamiltonianExpr
    right: HamiltonianExpr


def pbar(left: HamiltonianExpr, right: HamiltonianExpr) -> HamiltonianExpr:
    """Mismatch projector (2 I - {left, right}) / 4.

    For two z-components of qubits on one 2-dim carrier this evaluates to 0
    when they are aligned, to the identity when anti-aligned, and to
    (1 - nu)/2 * I in between, nu being the alignment scalar.
    """
    return Scale(0.25, Sum((Scale(2.0, Identity()), Scale(-1.0, AntiCommutator(left, right)))))


def evaluate(expr: HamiltonianExpr, triples: dict[str, DescriptorTriple]) -> np.ndarray:
    """Evaluate against current descriptors; returns an (N, N) complex array."""
    dim = next(iter(triples.values())).dim
    return _eval(expr, triples, dim)


def _eval(expr, triples, dim):
    if isinstance(expr, DescriptorRef):
        try:
            t = triples[expr.qubit]
        except KeyError:
            raise KeyError(f"expression references unknown qubit {expr.qubit!r}") from None
        return t.components[expr.axis]
    if isinstance(expr, Identity):
        return np.eye(dim, dtype=complex)
    if isinstance(expr, Scale):
        return expr.factor * _eval(expr.child, triples, dim)
    if isinstance(expr, Sum):
        out = np.zeros((dim, dim), dtype=complex)
        for t in expr.terms:
            out = out + _eval(t, triples, dim)
        return out
    if isinstance(expr, Product):
        return _eval(expr.left, triples, dim) @ _eval(expr.right, triples, dim)
    if isinstance(expr, AntiCommutator):
        a = _eval(expr.left, triples, dim)
        b = _eval(expr.right, triples, dim)
        return a @ b + b @ a
    if isinstance(expr, CommutatorTimesI):
        a = _eval(expr.left, triples, dim)
        b = _eval(expr.right, triples, dim)
        return 1j * (a @ b - b @ a)
    raise TypeError(f"not a Hamiltonian expression: {expr!r}")


def free_descriptors(expr: HamiltonianExpr) -> set:
    """All (qubit, axis) pairs the expression reads."""
    out = set()
    _collect(expr, out)
    return out


def _collect(expr, out):
    if isinstance(expr, DescriptorRef):
        out.add((expr.qubit, expr.axis))
    elif isinstance(expr, Scale):
        _collect(expr.child, out)
    elif isinstance(expr, Sum):
        for t in expr.terms:
            _collect(t, out)
    elif isinstance(expr, (Product, AntiCommutator, CommutatorTimesI)):
        _collect(expr.left, out)
        _collect(expr.right, out)


def referenced_qubits(expr: HamiltonianExpr) -> set:
    return {q for q, _ in free_descriptors(expr)}


# --------------------------------------------------------------------------
# string DSL
# --------------------------------------------------------------------------

_FUNCTIONS = ("acomm", "icomm", "pbar")
_RESERVED = _FUNCTIONS + ("pi", "I")


class ExprSyntaxError(ValueError):
    pass


def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "+-*/(),.":
            tokens.append((c, c))
            i += 1
        elif c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                j += 1
                if j < n and text[j] in "+-":
                    j += 1
                while j < n and text[j].isdigit():
                    j += 1
            tokens.append(("num", float(text[i:j])))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j]))
            i = j
        else:
            raise ExprSyntaxError(f"unexpected character {c!r} at position {i}")
    tokens.append(("end", None))
    return tokens


class _Parser:
    """Recursive-descent parser producing ('s', float) or ('o', expr) values."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise ExprSyntaxError(
                f"expected {kind!r}, found {tok[0]!r} in {self.text!r}"
            )
        self.pos += 1
        return tok

    def parse(self) -> HamiltonianExpr:
        kind, value = self.expr()
        self.take("end")
        if kind == "s":
            raise ExprSyntaxError(
                "expression is a bare scalar; multiply by I for a multiple of "
                "the identity"
            )
        return value

    def expr(self):
        left = self.term()
        while self.peek()[0] in "+-":
            op = self.take()[0]
            right = self.term()
            left = self._add(left, right, negate=(op == "-"))
        return left

    def term(self):
        left = self.factor()
        while self.peek()[0] in "*/":
            op = self.take()[0]
            right = self.factor()
            if op == "/":
                if right[0] != "s":
                    raise ExprSyntaxError("can only divide by a scalar")
                right = ("s", 1.0 / right[1])
            left = self._mul(left, right)
        return left

    def factor(self):
        if self.peek()[0] == "-":
            self.take()
            kind, value = self.factor()
            if kind == "s":
                return ("s", -value)
            return ("o", _scale(-1.0, value))
        if self.peek()[0] == "+":
            self.take()
            return self.factor()
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok[0] == "num":
            self.take()
            return ("s", tok[1])
        if tok[0] == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        if tok[0] == "name":
            name = self.take()[1]
            if name == "pi":
                return ("s", float(np.pi))
            if name == "I":
                return ("o", Identity())
            if name in _FUNCTIONS:
                self.take("(")
                a = self.expr()
                self.take(",")
                b = self.expr()
                self.take(")")
                if a[0] != "o" or b[0] != "o":
                    raise ExprSyntaxError(f"{name}() takes operator arguments")
                ctor = {
                    "acomm": AntiCommutator,
                    "icomm": CommutatorTimesI,
                    "pbar": pbar,
                }[name]
                return ("o", ctor(a[1], b[1]))
            # descriptor reference: name '.' axis
            self.take(".")
            axis_tok = self.take("name")
            if axis_tok[1] not in AXES:
                raise ExprSyntaxError(f"bad axis {axis_tok[1]!r}; use x, y or z")
            return ("o", DescriptorRef(name, AXES.index(axis_tok[1])))
        raise ExprSyntaxError(f"unexpected token {tok[0]!r} in {self.text!r}")

    @staticmethod
    def _add(a, b, negate=False):
        if a[0] == "s" and b[0] == "s":
            return ("s", a[1] - b[1] if negate else a[1] + b[1])
        if a[0] != b[0]:
            raise ExprSyntaxError(
                "cannot add a scalar to an operator; multiply the scalar by I"
            )
        rhs = _scale(-1.0, b[1]) if negate else b[1]
        return ("o", Sum((a[1], rhs)))

    @staticmethod
    def _mul(a, b):
        if a[0] == "s" and b[0] == "s":
            return ("s", a[1] * b[1])
        if a[0] == "s":
            return ("o", _scale(a[1], b[1]))
        if b[0] == "s":
            return ("o", _scale(b[1], a[1]))
        return ("o", Product(a[1], b[1]))


def _scale(factor: float, expr: HamiltonianExpr) -> HamiltonianExpr:
    if isinstance(expr, Scale):
        return Scale(factor * expr.factor, expr.child)
    return Scale(factor, expr)


def parse_expr(text: str) -> HamiltonianExpr:
    """Parse the DSL into an expression tree."""
    return _Parser(text).parse()


def parse_scalar(text: str) -> float:
    """Parse a scalar-valued DSL expression, e.g. ``pi/2`` or ``-0.25``."""
    parser = _Parser(text)
    kind, value = parser.expr()
    parser.take("end")
    if kind != "s":
        raise ExprSyntaxError(f"{text!r} is not a scalar")
    return value


def format_expr(expr: HamiltonianExpr) -> str:
    """Render a tree back to DSL text (round-trips through parse_expr)."""
    if isinstance(expr, DescriptorRef):
        return f"{expr.qubit}.{AXES[expr.axis]}"
    if isinstance(expr, Identity):
        return "I"
    if isinstance(expr, Scale):
        return f"{expr.factor!r} * ({format_expr(expr.child)})"
    if isinstance(expr, Sum):
        return " + ".join(f"({format_expr(t)})" for t in expr.terms)
    if isinstance(expr, Product):
        return f"({format_expr(expr.left)}) * ({format_expr(expr.right)})"
    if isinstance(expr, AntiCommutator):
        return f"acomm({format_expr(expr.left)}, {format_expr(expr.right)})"
    if isinstance(expr, CommutatorTimesI):
        return f"icomm({format_expr(expr.left)}, {format_expr(expr.right)})"
    raise TypeError(f"not a Hamiltonian expression: {expr!r}")


# --------------------------------------------------------------------------
# compilation to flat postfix programs for the integrator kernel
# --------------------------------------------------------------------------

OP_DESC = 0         # push descriptor component (arg1=qubit index, arg2=axis)
OP_IDENT = 1        # push identity
OP_CONST_SCALE = 2  # scale top of stack by consts[arg1]
OP_ADD = 3          # pop b, a; push a + b
OP_MUL = 4          # pop b, a; push a @ b
OP_ACOMM = 5        # pop b, a; push a b + b a
OP_ICOMM = 6        # pop b, a; push i (a b - b a)


@dataclass(frozen=True)
class CompiledProgram:
    """Postfix program: code rows are (opcode, arg1, arg2)."""

    code: np.ndarray    # (n_ops, 3) int64
    consts: np.ndarray  # (n_consts,) float64
    stack_need: int

    def __post_init__(self):
        object.__setattr__(self, "code", np.ascontiguousarray(self.code, dtype=np.int64))
        object.__setattr__(self, "consts", np.ascontiguousarray(self.consts, dtype=np.float64))


def compile_expr(expr: HamiltonianExpr, qubit_order) -> CompiledProgram:
    """Flatten a tree to postfix code against a fixed qubit ordering."""
    index = {q: i for i, q in enumerate(qubit_order)}
    code: list = []
    consts: list = []

    def emit(node) -> int:
        # returns the stack height consumed by evaluating node on an empty stack
        if isinstance(node, DescriptorRef):
            if node.qubit not in index:
                raise KeyError(f"expression references unknown qubit {node.qubit!r}")
            code.append((OP_DESC, index[node.qubit], node.axis))
            return 1
        if isinstance(node, Identity):
            code.append((OP_IDENT, 0, 0))
            return 1
        if isinstance(node, Scale):
            h = emit(node.child)
            consts.append(float(node.factor))
            code.append((OP_CONST_SCALE, len(consts) - 1, 0))
            return h
        if isinstance(node, Sum):
            if not node.terms:
                raise ValueError("empty Sum")
            h = emit(node.terms[0])
            for t in node.terms[1:]:
                h = max(h, 1 + emit(t))
                code.append((OP_ADD, 0, 0))
            return h
        if isinstance(node, (Product, AntiCommutator, CommutatorTimesI)):
            op = {
                Product: OP_MUL,
                AntiCommutator: OP_ACOMM,
                CommutatorTimesI: OP_ICOMM,
            }[type(node)]
            h = emit(node.left)
            h = max(h, 1 + emit(node.right))
            code.append((op, 0, 0))
            return h
        raise TypeError(f"not a Hamiltonian expression: {node!r}")

    need = emit(expr)
    return CompiledProgram(
        code=np.array(code, dtype=np.int64).reshape(-1, 3),
        consts=np.array(consts, dtype=np.float64),
        stack_need=need,
    )


def run_program(program: CompiledProgram, descriptors: np.ndarray) -> np.ndarray:
    """Reference interpreter: descriptors has shape (n_qubits, 3, N, N)."""
    n = descriptors.shape[-1]
    stack = []
    for opcode, a1, a2 in program.code:
        if opcode == OP_DESC:
            stack.append(descriptors[a1, a2].copy())
        elif opcode == OP_IDENT:
            stack.append(np.eye(n, dtype=complex))
        elif opcode == OP_CONST_SCALE:
            stack[-1] = stack[-1] * program.consts[a1]
        elif opcode == OP_ADD:
            b = stack.pop()
            stack[-1] = stack[-1] + b
        elif opcode == OP_MUL:
            b = stack.pop()
            stack[-1] = stack[-1] @ b
        elif opcode == OP_ACOMM:
            b = stack.pop()
            a = stack[-1]
            stack[-1] = a @ b + b @ a
        elif opcode == OP_ICOMM:
            b = stack.pop()
            a = stack[-1]
            stack[-1] = 1j * (a @ b - b @ a)
        else:
            raise ValueError(f"bad opcode {opcode}")
    if len(stack) != 1:
        raise ValueError("malformed program")
    return stack[0]
