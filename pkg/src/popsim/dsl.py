"""Pulse-sequence language: parser, printer, compiler, canned library.

Grammar (whitespace insignificant, '#' starts a line comment):

    sequence  := item (";" item)*
    item      := pulse | delay | grad | lock
    pulse     := "[" expr "]" "^" spinlist "_" phase
    spinlist  := "{" IDENT ("," IDENT)* "}" | IDENT
    phase     := "-"? ("x" | "y") | NUMBER "deg"
    delay     := "(" expr ")"
    grad      := "grad" "(" "z" ")" ("*" NUMBER)?
    lock      := "lock" "(" IDENT "," ("x"|"y") ")"
    expr      := rational arithmetic over NUMBER, "pi", "J" and free symbols;
                 "2pi" juxtaposition reads as 2*pi

Angles are in radians once evaluated; free symbols (e.g. phi) stay symbolic
until compile time, when they must be bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from . import channels
from .channels import Channel, Unitary, compose_unitaries
from .system import SpinSystem

import numpy as np


class ParseError(Exception):
    """Syntax error with a 1-based source position."""

    def __init__(self, message: str, line: int, column: int, token: str = ""):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column
        self.token = token


class CompileError(ValueError):
    """Sequence cannot be compiled against the given system/bindings."""


# ---------------------------------------------------------------- expressions

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Sym, Neg, BinOp]


def eval_expr(expr: Expr, bindings: dict[str, float]) -> float:
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Sym):
        if expr.name not in bindings:
            raise CompileError(f"unbound parameter {expr.name!r}")
        return float(bindings[expr.name])
    if isinstance(expr, Neg):
        return -eval_expr(expr.arg, bindings)
    if isinstance(expr, BinOp):
        a = eval_expr(expr.left, bindings)
        b = eval_expr(expr.right, bindings)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        if expr.op == "/":
            return a / b
    raise TypeError(f"not an expression: {expr!r}")


def expr_symbols(expr: Expr) -> set[str]:
    if isinstance(expr, Sym):
        return {expr.name}
    if isinstance(expr, Neg):
        return expr_symbols(expr.arg)
    if isinstance(expr, BinOp):
        return expr_symbols(expr.left) | expr_symbols(expr.right)
    return set()


def _format_num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def format_expr(expr: Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, Num):
        return _format_num(expr.value)
    if isinstance(expr, Sym):
        return expr.name
    if isinstance(expr, Neg):
        return "-" + format_expr(expr.arg, 3)
    if isinstance(expr, BinOp):
        prec = _PRECEDENCE[expr.op]
        s = (format_expr(expr.left, prec)
             + expr.op
             + format_expr(expr.right, prec + 1))
        return f"({s})" if prec < parent_prec else s
    raise TypeError(f"not an expression: {expr!r}")


# ---------------------------------------------------------------- items

@dataclass(frozen=True)
class Pulse:
    targets: tuple[str, ...]
    angle: Expr
    phase_deg: float


@dataclass(frozen=True)
class Delay:
    duration: Expr  # seconds once evaluated; typically rational in 1/J


@dataclass(frozen=True)
class Gradient:
    strength: float = 1.0


@dataclass(frozen=True)
class SpinLock:
    target: str
    axis: str


SequenceItem = Union[Pulse, Delay, Gradient, SpinLock]


@dataclass(frozen=True)
class PulseSequence:
    items: tuple[SequenceItem, ...]

    @property
    def parameters(self) -> set[str]:
        """Free symbols that must be bound at compile time (pi and J excluded)."""
        syms: set[str] = set()
        for item in self.items:
            if isinstance(item, Pulse):
                syms |= expr_symbols(item.angle)
            elif isinstance(item, Delay):
                syms |= expr_symbols(item.duration)
        return syms - {"pi", "J"}


# ---------------------------------------------------------------- tokenizer

_PUNCT = set("[]^_{}();,*/+-")


@dataclass(frozen=True)
class _Token:
    kind: str  # NUMBER | IDENT | PUNCT | EOF
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    toks = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            toks.append(_Token("NUMBER", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha():
            # '_' is a pulse separator, so identifiers never contain it.
            j = i
            while j < n and text[j].isalnum():
                j += 1
            toks.append(_Token("IDENT", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c in _PUNCT:
            toks.append(_Token("PUNCT", c, start_line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {c!r}", start_line, start_col, c)
    toks.append(_Token("EOF", "", line, col))
    return toks


# ---------------------------------------------------------------- parser

class _Parser:
    def __init__(self, text: str, known_spins: tuple[str, ...] | None = None):
        self.toks = _tokenize(text)
        self.pos = 0
        self.known_spins = known_spins

    def check_spin(self, tok: _Token) -> None:
        if self.known_spins is not None and tok.text not in self.known_spins:
            self.error(f"unknown spin {tok.text}", tok)

    def peek(self) -> _Token:
        return self.toks[self.pos]

    def next(self) -> _Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: _Token | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.column, tok.text)

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok.text != text:
            self.error(f"expected {text!r}", tok)
        return self.next()

    def parse_sequence(self) -> PulseSequence:
        if self.peek().kind == "EOF":
            return PulseSequence(items=())
        items = [self.parse_item()]
        while self.peek().text == ";":
            self.next()
            items.append(self.parse_item())
        if self.peek().kind != "EOF":
            self.error("expected ';' or end of sequence")
        return PulseSequence(items=tuple(items))

    def parse_item(self) -> SequenceItem:
        tok = self.peek()
        if tok.text == "[":
            return self.parse_pulse()
        if tok.text == "(":
            self.next()
            dur = self.parse_expr()
            self.expect(")")
            return Delay(duration=dur)
        if tok.kind == "IDENT" and tok.text == "grad":
            return self.parse_grad()
        if tok.kind == "IDENT" and tok.text == "lock":
            return self.parse_lock()
        self.error("expected a pulse, delay, gradient, or spin lock")

    def parse_pulse(self) -> Pulse:
        self.expect("[")
        angle = self.parse_expr()
        self.expect("]")
        self.expect("^")
        targets = self.parse_spinlist()
        self.expect("_")
        phase = self.parse_phase()
        return Pulse(targets=targets, angle=angle, phase_deg=phase)

    def parse_spinlist(self) -> tuple[str, ...]:
        names = []
        if self.peek().text == "{":
            self.next()
            while True:
                tok = self.peek()
                if tok.kind != "IDENT":
                    self.error("expected a spin name")
                self.check_spin(tok)
                names.append(self.next().text)
                if self.peek().text == ",":
                    self.next()
                    continue
                break
            self.expect("}")
        else:
            tok = self.peek()
            if tok.kind != "IDENT":
                self.error("expected a spin name")
            self.check_spin(tok)
            names.append(self.next().text)
        seen = set()
        for name in names:
            if name in seen:
                self.error(f"duplicate spin {name!r} in pulse target list")
            seen.add(name)
        return tuple(names)

    def parse_phase(self) -> float:
        tok = self.peek()
        neg = False
        if tok.text == "-":
            self.next()
            neg = True
            tok = self.peek()
        if tok.kind == "IDENT" and tok.text in ("x", "y"):
            self.next()
            base = 0.0 if tok.text == "x" else 90.0
            return base + (180.0 if neg else 0.0)
        if neg:
            self.error("expected x or y after '-' in pulse phase")
        if tok.kind == "NUMBER":
            value = float(self.next().text)
            unit = self.peek()
            if unit.kind != "IDENT" or unit.text != "deg":
                self.error("expected 'deg' after numeric pulse phase")
            self.next()
            return value
        self.error("expected pulse phase (x, y, -x, -y, or NUMBER deg)")

    def parse_grad(self) -> Gradient:
        self.next()  # grad
        self.expect("(")
        axis = self.peek()
        if axis.kind != "IDENT" or axis.text != "z":
            self.error("only z gradients are supported")
        self.next()
        self.expect(")")
        strength = 1.0
        if self.peek().text == "*":
            self.next()
            tok = self.peek()
            if tok.kind != "NUMBER":
                self.error("expected a number after '*' in gradient strength")
            strength = float(self.next().text)
        return Gradient(strength=strength)

    def parse_lock(self) -> SpinLock:
        self.next()  # lock
        self.expect("(")
        tok = self.peek()
        if tok.kind != "IDENT":
            self.error("expected a spin name in lock(...)")
        self.check_spin(tok)
        target = self.next().text
        self.expect(",")
        axis = self.peek()
        if axis.kind != "IDENT" or axis.text not in ("x", "y"):
            self.error("spin lock axis must be x or y")
        self.next()
        self.expect(")")
        return SpinLock(target=target, axis=axis.text)

    # expr := term (("+"|"-") term)*
    def parse_expr(self) -> Expr:
        left = self.parse_term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            left = BinOp(op=op, left=left, right=self.parse_term())
        return left

    # term := factor (("*"|"/") factor)*
    def parse_term(self) -> Expr:
        left = self.parse_factor()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            left = BinOp(op=op, left=left, right=self.parse_factor())
        return left

    def parse_factor(self) -> Expr:
        tok = self.peek()
        if tok.text == "-":
            self.next()
            return Neg(arg=self.parse_factor())
        if tok.text == "(":
            self.next()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if tok.kind == "NUMBER":
            self.next()
            num = Num(value=float(tok.text))
            nxt = self.peek()
            if nxt.kind == "IDENT" and nxt.text == "pi":  # juxtaposed "2pi"
                self.next()
                return BinOp(op="*", left=num, right=Sym(name="pi"))
            return num
        if tok.kind == "IDENT":
            self.next()
            return Sym(name=tok.text)
        self.error("expected a number, symbol, or parenthesized expression")


def parse(text: str,
          known_spins: tuple[str, ...] | None = None) -> PulseSequence:
    """Parse sequence source text; raises ParseError with a 1-based position.

    When known_spins is given, spin names outside it are rejected at parse
    time with the offending token's position.
    """
    return _Parser(text, known_spins=known_spins).parse_sequence()


def parse_expression(text: str) -> Expr:
    """Parse a standalone arithmetic expression (used for CLI --bind values)."""
    p = _Parser(text)
    expr = p.parse_expr()
    if p.peek().kind != "EOF":
        p.error("trailing input after expression")
    return expr


# ---------------------------------------------------------------- printer

_PHASE_NAMES = {0.0: "x", 90.0: "y", 180.0: "-x", 270.0: "-y"}


def format_item(item: SequenceItem) -> str:
    if isinstance(item, Pulse):
        spins = (item.targets[0] if len(item.targets) == 1
                 else "{" + ",".join(item.targets) + "}")
        phase = _PHASE_NAMES.get(item.phase_deg, f"{_format_num(item.phase_deg)}deg")
        return f"[{format_expr(item.angle)}]^{spins}_{phase}"
    if isinstance(item, Delay):
        return f"({format_expr(item.duration)})"
    if isinstance(item, Gradient):
        if item.strength == 1.0:
            return "grad(z)"
        return f"grad(z)*{_format_num(item.strength)}"
    if isinstance(item, SpinLock):
        return f"lock({item.target},{item.axis})"
    raise TypeError(f"not a sequence item: {item!r}")


def format_sequence(seq: PulseSequence) -> str:
    return " ; ".join(format_item(item) for item in seq.items)


# ---------------------------------------------------------------- compiler

def _bindings_for(sys: SpinSystem, bindings: dict[str, float] | None) -> dict[str, float]:
    env = {"pi": math.pi}
    if sys.n >= 2:
        env["J"] = sys.coupling_hz(0, 1)
    if bindings:
        env.update({k: float(v) for k, v in bindings.items()})
    return env


def compile(seq: PulseSequence, sys: SpinSystem,
            bindings: dict[str, float] | None = None) -> list[Channel]:
    """Map each item through the evolution constructors, in source order."""
    env = _bindings_for(sys, bindings)
    out: list[Channel] = []
    for item in seq.items:
        if isinstance(item, Pulse):
            for name in item.targets:
                try:
                    sys.spin_index(name)
                except ValueError:
                    raise CompileError(f"unknown spin {name}") from None
            angle = eval_expr(item.angle, env)
            out.append(channels.pulse_propagator(sys, item.targets, angle, item.phase_deg))
        elif isinstance(item, Delay):
            duration = eval_expr(item.duration, env)
            if duration < 0:
                raise CompileError(f"delay evaluates to a negative duration ({duration})")
            out.append(channels.delay_propagator(sys, duration))
        elif isinstance(item, Gradient):
            out.append(channels.gradient_channel(sys, strength=item.strength))
        elif isinstance(item, SpinLock):
            out.append(channels.spinlock_channel(sys, item.target, item.axis))
        else:
            raise TypeError(f"not a sequence item: {item!r}")
    return out


def propagator_of(sys: SpinSystem, seq: PulseSequence,
                  bindings: dict[str, float] | None = None) -> np.ndarray:
    """Composed unitary of a gradient/lock-free sequence (earliest rightmost)."""
    compiled = compile(seq, sys, bindings)
    if not compiled:
        return np.eye(sys.dim, dtype=complex)
    return compose_unitaries(compiled)


# ---------------------------------------------------------------- canned library

# The conditional-phase block of the QFT needs exp(+i*(pi/2)*IzSz); a coupling
# delay only generates exp(-i*2*pi*J*IzSz*t), so the duration 15/(4J) winds the
# coupling phase forward by a full period minus pi/2.  The flanking three-pulse
# blocks are composite -pi/4 z-rotations on both spins.
_QFT2_B01 = ("(15/(4*J))"
             " ; [pi/2]^{I,S}_x ; [-pi/4]^{I,S}_y ; [pi/2]^{I,S}_-x")

_CANNED: dict[str, str] = {
    "equalize": ("[pi/2]^{I,S}_x ; (1/(4*J)) ; [pi/2]^{I,S}_y ; (1/(4*J))"
                 " ; [pi/2]^{I,S}_-x ; grad(z)"),
    # Under this simulator's rotation/coupling sign convention the final
    # [pi/6] phase must be -y to land on the I_z + S_z + 2I_zS_z target
    # (a +y phase prepares the complementary I_z + S_z - 2I_zS_z state).
    "pseudo_pure": "[pi/4]^{I,S}_x ; (1/(2*J)) ; [pi/6]^{I,S}_-y ; grad(z)",
    "spinor_prep": "[pi/2]^I_x ; grad(z) ; [pi/2]^S_x ; (1/(2*J))",
    "spinor_rot": "[phi/2]^I_y ; [pi/2]^I_x ; (phi/(2*pi*J)) ; [pi/2]^I_-x",
    "bell_prep": ("[pi/2]^S_-x ; [pi/2]^I_y ; (1/(2*J))"
                  " ; [pi/2]^I_-y ; [pi/2]^S_x"),
    "measure_x": "[pi/2]^I_y ; grad(z) ; [pi]^S_y ; grad(z) ; [pi/2]^I_-y",
    "epr_mixture": ("[pi/2]^S_90deg ; (1/(2*J)) ; [pi/2]^I_135deg"
                    " ; (1/(2*J)) ; [pi/2]^S_90deg"),
    # Conditional y-rotation of S by pi when I is down, the single-transition
    # propagator realized with the same template as spinor_rot (roles swapped).
    "cnot": "[pi/2]^S_y ; [pi/2]^S_-x ; (1/(2*J)) ; [pi/2]^S_x",
    # pi rotation about the axis halfway between x and z.
    "hadamard": "[pi/4]^{spin}_y ; [pi]^{spin}_x ; [pi/4]^{spin}_-y",
    "qft2": None,  # assembled below
}

_CANNED["qft2"] = " ; ".join([
    _CANNED["hadamard"].replace("{spin}", "S"),
    _QFT2_B01,
    _CANNED["hadamard"].replace("{spin}", "I"),
])

CANNED_NAMES = tuple(sorted(_CANNED))


def canned_source(name: str, spin: str = "I") -> str:
    if name not in _CANNED:
        raise KeyError(f"unknown canned sequence {name!r}")
    return _CANNED[name].replace("{spin}", spin)


def canned(name: str, spin: str = "I") -> PulseSequence:
    """One entry per sequence stated in the source experiments.

    spinor_rot carries a free parameter phi, bound at compile time.
    hadamard takes an optional target spin (default I).
    """
    return parse(canned_source(name, spin=spin))


def qft2_b01_sequence() -> PulseSequence:
    """Just the conditional-phase block of the two-qubit QFT sequence."""
    return parse(_QFT2_B01)
