"""
Scalar expressions over t, x[i] and p[j]: a recursive-descent parser with
position-annotated errors, numeric evaluation and symbolic differentiation.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') integer)?
    atom   := number | 't' | ('x' | 'p') '[' integer ']' | ('x' | 'p') digits
            | ('sin' | 'cos' | 'exp') '(' expr ')' | 'pow' '(' expr ',' integer ')'
            | '(' expr ')'
"""
import re
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ExpressionSyntaxError, UnknownIdentifierError

FUNCTIONS = ('sin', 'cos', 'exp')

TOKEN_REGEX = re.compile(r'''
    (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),\[\]])
  | (?P<space>[ \t\r\n]+)
''', re.VERBOSE)

INDEXED_NAME_REGEX = re.compile(r'^([xp])(\d+)$')


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        match = TOKEN_REGEX.match(text, pos)
        if not match:
            raise ExpressionSyntaxError(f'Unexpected character {text[pos]!r}', line, pos - line_start + 1)
        kind = match.lastgroup
        if kind == 'space':
            for offset, char in enumerate(match.group(), start=pos):
                if char == '\n':
                    line, line_start = line + 1, offset + 1
        else:
            tokens.append(Token(kind, match.group(), line, pos - line_start + 1))
        pos = match.end()
    tokens.append(Token('end', '', line, pos - line_start + 1))
    return tokens


class Node:
    """
    Base class of expression tree nodes.
    """

    def evaluate(self, t, x, p):
        raise NotImplementedError()

    def diff(self, var: 'Var') -> 'Node':
        raise NotImplementedError()

    def variables(self) -> Iterable['Var']:
        return ()


@dataclass(frozen=True)
class Const(Node):
    value: float

    def evaluate(self, t, x, p):
        return np.float64(self.value)

    def diff(self, var):
        return ZERO

    def __str__(self):
        text = repr(float(self.value))
        return f'({text})' if self.value < 0 else text


ZERO = Const(0.0)
ONE = Const(1.0)


@dataclass(frozen=True)
class Var(Node):
    kind: str
    index: Optional[int] = None

    def evaluate(self, t, x, p):
        if self.kind == 't':
            return np.float64(t)
        return (x if self.kind == 'x' else p)[self.index]

    def diff(self, var):
        return ONE if var == self else ZERO

    def variables(self):
        return (self,)

    def __str__(self):
        return 't' if self.kind == 't' else f'{self.kind}[{self.index}]'


T = Var('t')


@dataclass(frozen=True)
class Binary(Node):
    left: Node
    right: Node

    def variables(self):
        return (*self.left.variables(), *self.right.variables())


class Add(Binary):

    def evaluate(self, t, x, p):
        return self.left.evaluate(t, x, p) + self.right.evaluate(t, x, p)

    def diff(self, var):
        return add(self.left.diff(var), self.right.diff(var))

    def __str__(self):
        return f'({self.left} + {self.right})'


class Sub(Binary):

    def evaluate(self, t, x, p):
        return self.left.evaluate(t, x, p) - self.right.evaluate(t, x, p)

    def diff(self, var):
        return sub(self.left.diff(var), self.right.diff(var))

    def __str__(self):
        return f'({self.left} - {self.right})'


class Mul(Binary):

    def evaluate(self, t, x, p):
        return self.left.evaluate(t, x, p) * self.right.evaluate(t, x, p)

    def diff(self, var):
        return add(mul(self.left.diff(var), self.right), mul(self.left, self.right.diff(var)))

    def __str__(self):
        return f'({self.left} * {self.right})'


class Div(Binary):

    def evaluate(self, t, x, p):
        return np.divide(self.left.evaluate(t, x, p), self.right.evaluate(t, x, p))

    def diff(self, var):
        numerator = sub(mul(self.left.diff(var), self.right), mul(self.left, self.right.diff(var)))
        return div(numerator, power(self.right, 2))

    def __str__(self):
        return f'({self.left} / {self.right})'


@dataclass(frozen=True)
class Neg(Node):
    operand: Node

    def evaluate(self, t, x, p):
        return -self.operand.evaluate(t, x, p)

    def diff(self, var):
        return neg(self.operand.diff(var))

    def variables(self):
        return self.operand.variables()

    def __str__(self):
        return f'(-{self.operand})'


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int

    def evaluate(self, t, x, p):
        return np.power(np.float64(self.base.evaluate(t, x, p)), self.exponent)

    def diff(self, var):
        return mul(mul(Const(float(self.exponent)), power(self.base, self.exponent - 1)), self.base.diff(var))

    def variables(self):
        return self.base.variables()

    def __str__(self):
        return f'pow({self.base}, {self.exponent})'


@dataclass(frozen=True)
class Call(Node):
    func: str
    argument: Node

    def evaluate(self, t, x, p):
        return getattr(np, self.func)(self.argument.evaluate(t, x, p))

    def diff(self, var):
        inner = self.argument.diff(var)
        if self.func == 'sin':
            outer = Call('cos', self.argument)
        elif self.func == 'cos':
            outer = neg(Call('sin', self.argument))
        else:
            outer = self
        return mul(outer, inner)

    def variables(self):
        return self.argument.variables()

    def __str__(self):
        return f'{self.func}({self.argument})'


def _is(node: Node, value: float) -> bool:
    return isinstance(node, Const) and node.value == value


def add(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    return Add(a, b)


def sub(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    return Sub(a, b)


def mul(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    return Mul(a, b)


def div(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    if _is(a, 0) and not _is(b, 0):
        return ZERO
    if _is(b, 1):
        return a
    return Div(a, b)


def neg(a: Node) -> Node:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def power(base: Node, exponent: int) -> Node:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const) and (base.value != 0 or exponent > 0):
        return Const(float(base.value) ** exponent)
    return Pow(base, exponent)


class Parser:

    def __init__(self, text: str, n: int = None, l: int = None, allowed: Sequence[str] = ('t', 'x', 'p')):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0
        self.limits = {'x': n, 'p': l}
        self.allowed = tuple(allowed)

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        if token.kind != 'end':
            self.pos += 1
        return token

    def error(self, message: str, token: Token = None, cls=ExpressionSyntaxError):
        token = token or self.current
        return cls(message, token.line, token.column)

    def expect(self, text: str) -> Token:
        if self.current.text != text or self.current.kind == 'end':
            found = self.current.text or 'end of input'
            raise self.error(f'Expected {text!r}, found {found!r}')
        return self.advance()

    def parse(self) -> Node:
        if self.current.kind == 'end':
            raise self.error('Empty expression')
        node = self.expression()
        if self.current.kind != 'end':
            raise self.error(f'Unexpected {self.current.text!r}')
        return node

    def expression(self) -> Node:
        node = self.term()
        while self.current.text in ('+', '-') and self.current.kind == 'op':
            op = self.advance().text
            node = add(node, self.term()) if op == '+' else sub(node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.current.text in ('*', '/') and self.current.kind == 'op':
            op = self.advance().text
            node = mul(node, self.unary()) if op == '*' else div(node, self.unary())
        return node

    def unary(self) -> Node:
        if self.current.kind == 'op' and self.current.text in ('-', '+'):
            op = self.advance().text
            operand = self.unary()
            return neg(operand) if op == '-' else operand
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        if self.current.kind == 'op' and self.current.text in ('^', '**'):
            self.advance()
            node = power(node, self.integer('Exponent'))
        return node

    def integer(self, what: str) -> int:
        sign = 1
        if self.current.kind == 'op' and self.current.text in ('-', '+'):
            sign = -1 if self.advance().text == '-' else 1
        token = self.current
        if token.kind != 'number' or not token.text.isdigit():
            raise self.error(f'{what} must be an integer literal, found {token.text or "end of input"!r}')
        self.advance()
        return sign * int(token.text)

    def variable(self, kind: str, index: int, token: Token) -> Var:
        if kind not in self.allowed:
            raise self.error(f'Identifier {token.text!r} is not allowed here', token, UnknownIdentifierError)
        limit = self.limits.get(kind)
        if limit is not None and not 0 <= index < limit:
            raise self.error(f'Index {index} of {kind!r} is outside [0, {limit})', token, UnknownIdentifierError)
        return Var(kind, index)

    def atom(self) -> Node:
        token = self.current
        if token.kind == 'number':
            self.advance()
            return Const(float(token.text))

        if token.kind == 'op' and token.text == '(':
            self.advance()
            node = self.expression()
            self.expect(')')
            return node

        if token.kind != 'name':
            raise self.error(f'Unexpected {token.text or "end of input"!r}')

        self.advance()
        name = token.text
        if name == 't':
            if 't' not in self.allowed:
                raise self.error("Identifier 't' is not allowed here", token, UnknownIdentifierError)
            return T
        if name in ('x', 'p'):
            self.expect('[')
            index = self.integer('Index')
            self.expect(']')
            return self.variable(name, index, token)
        indexed = INDEXED_NAME_REGEX.match(name)
        if indexed:
            return self.variable(indexed.group(1), int(indexed.group(2)), token)
        if name in FUNCTIONS:
            self.expect('(')
            argument = self.expression()
            self.expect(')')
            return Call(name, argument)
        if name == 'pow':
            self.expect('(')
            base = self.expression()
            self.expect(',')
            exponent = self.integer('Exponent of pow')
            self.expect(')')
            return power(base, exponent)

        raise self.error(f'Unknown identifier {name!r}', token, UnknownIdentifierError)


class Expression:
    """
    A parsed expression together with its source text.
    """

    def __init__(self, text: str, root: Node):
        self.text = text
        self.root = root

    def __repr__(self):
        return f'Expression({self.text!r})'

    def __str__(self):
        return str(self.root)

    def __eq__(self, other):
        return isinstance(other, Expression) and self.root == other.root

    def __hash__(self):
        return hash(self.root)

    def evaluate(self, t: float = 0.0, x: Sequence[float] = (), p: Sequence[float] = ()) -> float:
        with np.errstate(all='ignore'):
            return float(self.root.evaluate(t, x, p))

    def derivative(self, name: str) -> 'Expression':
        """
        Symbolic derivative with respect to 't', 'x[i]'/'xi' or 'p[j]'/'pj'.
        """
        var = Parser(name).parse()
        if not isinstance(var, Var):
            raise ExpressionSyntaxError(f'Cannot differentiate with respect to {name!r}', 1, 1)
        root = self.root.diff(var)
        return Expression(str(root), root)

    def variables(self) -> Tuple[Var, ...]:
        return tuple(sorted(set(self.root.variables()), key=lambda v: (v.kind, v.index or 0)))

    @property
    def is_constant(self) -> bool:
        return isinstance(self.root, Const)


def parse_expression(text: str, n: int = None, l: int = None,
                     allowed: Sequence[str] = ('t', 'x', 'p')) -> Expression:
    if not isinstance(text, str):
        text = repr(text) if isinstance(text, (int, float)) else str(text)
    return Expression(text, Parser(text, n, l, allowed).parse())
