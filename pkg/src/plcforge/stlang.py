# plcforge
# MIT License
#
# Copyright (c) 2026 The plcforge developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
"""
A small Structured Text dialect: tokenizer, parser, compiler and scan cycle interpreter.

Grammar:
    PROGRAM id VAR decl* END_VAR stmt* END_PROGRAM
    decl  := id [AT location] : (BOOL | INT) [:= literal] ;
    stmt  := id := expr ;
           | IF expr THEN stmt* {ELSIF expr THEN stmt*} [ELSE stmt*] END_IF ;
    expr  := NOT, AND, OR, XOR, = <> < > <= >=, + - *, parentheses,
             TRUE / FALSE and decimal integer literals

INT is an unsigned 16 bit word with wrap-around.
Keywords are case-insensitive, identifiers are not.
"""
from ducktools.classbuilder.prefab import prefab, attribute

from . import COMPILE_SENTINEL
from . import _lazy_imports as _laz
from .exceptions import BadLocation, StSyntaxError, StTypeError, UndeclaredVariable


BOOL = "BOOL"
INT = "INT"
TYPES = (BOOL, INT)

WORD_MASK = 0xFFFF
WORD_MODULUS = 0x10000

COIL_COUNT = 64
WORD_COUNT = 16

COMPILE_MESSAGE = "Compiling main program..."

KEYWORDS = frozenset({
    "PROGRAM", "END_PROGRAM", "VAR", "END_VAR", "AT",
    "BOOL", "INT", "IF", "THEN", "ELSIF", "ELSE", "END_IF",
    "NOT", "AND", "OR", "XOR", "TRUE", "FALSE",
})

TOKEN_PATTERN = r"""
    (?P<COMMENT>\(\*.*?\*\))
  | (?P<SPACE>[ \t\r\n]+)
  | (?P<LOCATION>%[A-Za-z0-9_.]*)
  | (?P<NUMBER>[0-9]+)
  | (?P<NAME>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<OP>:=|<>|<=|>=|[=<>+\-*();:])
  | (?P<MISMATCH>.)
"""

LOCATION_PATTERN = r"%([IQ])([XW])([0-9]+)(?:\.([0-9]+))?"

@prefab(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    column: int


@prefab(frozen=True)
class Location:
    area: str  # I or Q
    size: str  # X or W
    index: int
    text: str

    @property
    def mangled(self) -> str:
        return "__" + self.text[1:].replace(".", "_")

    @property
    def var_type(self) -> str:
        return BOOL if self.size == "X" else INT


@prefab(frozen=True)
class Declaration:
    name: str
    var_type: str
    location: Location | None = None
    initial: bool | int | None = None
    line: int = 0

    @property
    def default(self) -> bool | int:
        if self.initial is not None:
            return self.initial
        return False if self.var_type == BOOL else 0


# Expressions
@prefab(frozen=True)
class Literal:
    value: bool | int
    type: str


@prefab(frozen=True)
class VarRef:
    name: str
    type: str


@prefab(frozen=True)
class Unary:
    op: str
    operand: object
    type: str


@prefab(frozen=True)
class Binary:
    op: str
    left: object
    right: object
    type: str


# Statements
@prefab(frozen=True)
class Assign:
    target: str
    expr: object
    line: int = 0


@prefab(frozen=True)
class IfStatement:
    branches: tuple  # ((condition, (statement, ...)), ...)
    else_body: tuple = ()
    line: int = 0


@prefab(frozen=True)
class Ast:
    program_name: str
    declarations: tuple
    statements: tuple


@prefab(frozen=True)
class CompiledProgram:
    program_name: str
    declarations: tuple
    statements: tuple
    symbols: dict = attribute(default_factory=dict, compare=False)

    @property
    def located(self) -> tuple:
        return tuple(d for d in self.declarations if d.location is not None)


@prefab(frozen=True)
class RegisterMap:
    input_coils: tuple = (False,) * COIL_COUNT
    output_coils: tuple = (False,) * COIL_COUNT
    input_words: tuple = (0,) * WORD_COUNT
    holding_words: tuple = (0,) * WORD_COUNT
    wrapped: bool = False

    def __prefab_post_init__(self, input_coils, output_coils, input_words, holding_words):
        for name, values, size in [
            ("input_coils", input_coils, COIL_COUNT),
            ("output_coils", output_coils, COIL_COUNT),
            ("input_words", input_words, WORD_COUNT),
            ("holding_words", holding_words, WORD_COUNT),
        ]:
            if len(values) != size:
                raise ValueError(f"{name} must have {size} entries, got {len(values)}")
        for word in (*input_words, *holding_words):
            if not 0 <= word <= WORD_MASK:
                raise ValueError(f"Word value {word} is not an unsigned 16 bit value")

    def _image_name(self, location: Location) -> str:
        match location.area, location.size:
            case "I", "X":
                return "input_coils"
            case "Q", "X":
                return "output_coils"
            case "I", "W":
                return "input_words"
            case _:
                return "holding_words"

    def read(self, location: Location) -> bool | int:
        return getattr(self, self._image_name(location))[location.index]

    def replace(self, **images) -> "RegisterMap":
        values = {
            "input_coils": self.input_coils,
            "output_coils": self.output_coils,
            "input_words": self.input_words,
            "holding_words": self.holding_words,
            "wrapped": self.wrapped,
        }
        values.update(images)
        return RegisterMap(**values)

    def with_value(self, location: Location, value: bool | int) -> "RegisterMap":
        name = self._image_name(location)
        image = list(getattr(self, name))
        image[location.index] = bool(value) if location.size == "X" else int(value)
        return self.replace(**{name: tuple(image)})

    def set_input_coil(self, index: int, value: bool) -> "RegisterMap":
        coils = list(self.input_coils)
        coils[index] = bool(value)
        return self.replace(input_coils=tuple(coils))

    def set_input_word(self, index: int, value: int) -> "RegisterMap":
        words = list(self.input_words)
        words[index] = value
        return self.replace(input_words=tuple(words))


def parse_location(text: str, line: int = 0, column: int = 0) -> Location:
    match = _laz.re.fullmatch(LOCATION_PATTERN, text)
    if match is None:
        raise BadLocation(f"Invalid location {text!r}", line, column)

    area, size, major, minor = match.groups()
    major = int(major)
    if size == "X":
        if minor is None:
            raise BadLocation(f"Bit location {text!r} needs a byte.bit address", line, column)
        minor = int(minor)
        if minor > 7:
            raise BadLocation(f"Bit index in {text!r} must be 0-7", line, column)
        index = 8 * major + minor
        if index >= COIL_COUNT:
            raise BadLocation(f"Location {text!r} is beyond the {COIL_COUNT} coil image", line, column)
        normalized = f"%{area}X{major}.{minor}"
    else:
        if minor is not None:
            raise BadLocation(f"Word location {text!r} takes a single index", line, column)
        index = major
        if index >= WORD_COUNT:
            raise BadLocation(f"Location {text!r} is beyond the {WORD_COUNT} word image", line, column)
        normalized = f"%{area}W{major}"

    return Location(area=area, size=size, index=index, text=normalized)


def tokenize(source: str) -> list[Token]:
    tokens = []
    line = 1
    line_start = 0
    for match in _laz.re.finditer(TOKEN_PATTERN, source, _laz.re.VERBOSE | _laz.re.DOTALL):
        kind = match.lastgroup
        value = match.group()
        column = match.start() - line_start + 1

        if kind == "MISMATCH":
            raise StSyntaxError(f"Unexpected character {value!r}", line, column)
        if kind not in {"COMMENT", "SPACE"}:
            if kind == "NAME" and value.upper() in KEYWORDS:
                tokens.append(Token(kind="KEYWORD", value=value.upper(), line=line, column=column))
            else:
                tokens.append(Token(kind=kind, value=value, line=line, column=column))

        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = match.start() + value.rindex("\n") + 1

    if source.count("(*") != source.count("*)"):
        raise StSyntaxError("Unterminated comment", line, 1)

    tokens.append(Token(kind="EOF", value="", line=line, column=len(source) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.position = 0
        self.declarations: dict[str, Declaration] = {}

    @property
    def current(self) -> Token:
        return self.tokens[self.position]

    def error(self, message: str, token: Token | None = None):
        token = self.current if token is None else token
        return StSyntaxError(message, token.line, token.column)

    def advance(self) -> Token:
        token = self.current
        if token.kind != "EOF":
            self.position += 1
        return token

    def check(self, value: str) -> bool:
        token = self.current
        return token.kind in {"KEYWORD", "OP"} and token.value == value

    def accept(self, value: str) -> bool:
        if self.check(value):
            self.advance()
            return True
        return False

    def expect(self, value: str) -> Token:
        if not self.check(value):
            found = self.current.value or "end of input"
            raise self.error(f"Expected {value!r}, found {found!r}")
        return self.advance()

    def expect_name(self) -> Token:
        if self.current.kind != "NAME":
            found = self.current.value or "end of input"
            raise self.error(f"Expected an identifier, found {found!r}")
        return self.advance()

    # Program structure
    def parse_program(self) -> Ast:
        self.expect("PROGRAM")
        name = self.expect_name().value
        self.expect("VAR")
        while not self.check("END_VAR"):
            self.parse_declaration()
        self.expect("END_VAR")

        statements = self.parse_statements({"END_PROGRAM"})
        self.expect("END_PROGRAM")
        if self.current.kind != "EOF":
            raise self.error(f"Unexpected {self.current.value!r} after END_PROGRAM")

        return Ast(
            program_name=name,
            declarations=tuple(self.declarations.values()),
            statements=tuple(statements),
        )

    def parse_declaration(self):
        name_token = self.expect_name()
        name = name_token.value
        if name in self.declarations:
            raise self.error(f"Variable {name!r} is declared twice", name_token)

        location = None
        if self.accept("AT"):
            loc_token = self.current
            if loc_token.kind != "LOCATION":
                raise BadLocation(
                    f"Expected a location after AT, found {loc_token.value!r}",
                    loc_token.line,
                    loc_token.column,
                )
            self.advance()
            location = parse_location(loc_token.value, loc_token.line, loc_token.column)

        self.expect(":")
        type_token = self.current
        if not (type_token.kind == "KEYWORD" and type_token.value in TYPES):
            raise self.error(f"Expected BOOL or INT, found {type_token.value!r}")
        self.advance()
        var_type = type_token.value

        if location is not None and location.var_type != var_type:
            raise BadLocation(
                f"Location {location.text} holds {location.var_type}, not {var_type}",
                type_token.line,
                type_token.column,
            )

        initial = None
        if self.accept(":="):
            literal = self.parse_primary()
            if not isinstance(literal, Literal):
                raise self.error("Initial values must be literals")
            if literal.type != var_type:
                raise StTypeError(
                    f"Initial value of {name!r} must be {var_type}",
                    name_token.line,
                    name_token.column,
                )
            initial = literal.value

        self.expect(";")
        self.declarations[name] = Declaration(
            name=name,
            var_type=var_type,
            location=location,
            initial=initial,
            line=name_token.line,
        )

    def parse_statements(self, terminators: set[str]) -> list:
        statements = []
        while not any(self.check(t) for t in terminators):
            if self.current.kind == "EOF":
                raise self.error(f"Expected {' or '.join(sorted(terminators))} before end of input")
            statements.append(self.parse_statement())
        return statements

    def parse_statement(self):
        token = self.current
        if self.accept("IF"):
            return self.parse_if(token)

        target = self.expect_name()
        declaration = self.declarations.get(target.value)
        if declaration is None:
            raise UndeclaredVariable(
                f"Assignment to undeclared variable {target.value!r}",
                target.line,
                target.column,
            )
        self.expect(":=")
        expr = self.parse_expression()
        if expr.type != declaration.var_type:
            raise StTypeError(
                f"Can not assign {expr.type} to {declaration.var_type} variable {target.value!r}",
                target.line,
                target.column,
            )
        self.expect(";")
        return Assign(target=target.value, expr=expr, line=target.line)

    def parse_condition(self):
        token = self.current
        condition = self.parse_expression()
        if condition.type != BOOL:
            raise StTypeError("IF conditions must be BOOL", token.line, token.column)
        self.expect("THEN")
        return condition

    def parse_if(self, if_token: Token):
        branch_ends = {"ELSIF", "ELSE", "END_IF"}
        branches = []

        condition = self.parse_condition()
        branches.append((condition, tuple(self.parse_statements(branch_ends))))
        while self.accept("ELSIF"):
            condition = self.parse_condition()
            branches.append((condition, tuple(self.parse_statements(branch_ends))))

        else_body = ()
        if self.accept("ELSE"):
            else_body = tuple(self.parse_statements({"END_IF"}))

        self.expect("END_IF")
        self.expect(";")
        return IfStatement(branches=tuple(branches), else_body=else_body, line=if_token.line)

    # Expressions, lowest precedence first
    def _binary_level(self, operators, operand, check):
        left = operand()
        while True:
            token = self.current
            if not (token.kind in {"KEYWORD", "OP"} and token.value in operators):
                return left
            self.advance()
            right = operand()
            result_type = check(token, left, right)
            left = Binary(op=token.value, left=left, right=right, type=result_type)

    def _logical(self, token, left, right):
        if left.type != BOOL or right.type != BOOL:
            raise StTypeError(f"{token.value} needs BOOL operands", token.line, token.column)
        return BOOL

    def _comparison(self, token, left, right):
        return BOOL

    def _arithmetic(self, token, left, right):
        if left.type != INT or right.type != INT:
            raise StTypeError(f"{token.value!r} needs INT operands", token.line, token.column)
        return INT

    def parse_expression(self):
        return self._binary_level(("OR",), self.parse_xor, self._logical)

    def parse_xor(self):
        return self._binary_level(("XOR",), self.parse_and, self._logical)

    def parse_and(self):
        return self._binary_level(("AND",), self.parse_equality, self._logical)

    def parse_equality(self):
        return self._binary_level(("=", "<>"), self.parse_relation, self._comparison)

    def parse_relation(self):
        return self._binary_level(("<", ">", "<=", ">="), self.parse_sum, self._comparison)

    def parse_sum(self):
        return self._binary_level(("+", "-"), self.parse_product, self._arithmetic)

    def parse_product(self):
        return self._binary_level(("*",), self.parse_unary, self._arithmetic)

    def parse_unary(self):
        token = self.current
        if self.accept("NOT"):
            operand = self.parse_unary()
            if operand.type != BOOL:
                raise StTypeError("NOT needs a BOOL operand", token.line, token.column)
            return Unary(op="NOT", operand=operand, type=BOOL)
        return self.parse_primary()

    def parse_primary(self):
        token = self.current
        if token.kind == "NUMBER":
            self.advance()
            value = int(token.value)
            if value > WORD_MASK:
                raise self.error(f"Integer literal {value} does not fit in 16 bits", token)
            return Literal(value=value, type=INT)
        if self.accept("TRUE"):
            return Literal(value=True, type=BOOL)
        if self.accept("FALSE"):
            return Literal(value=False, type=BOOL)
        if token.kind == "NAME":
            self.advance()
            declaration = self.declarations.get(token.value)
            if declaration is None:
                raise UndeclaredVariable(
                    f"Use of undeclared variable {token.value!r}",
                    token.line,
                    token.column,
                )
            return VarRef(name=token.value, type=declaration.var_type)
        if self.accept("("):
            expr = self.parse_expression()
            self.expect(")")
            return expr

        found = token.value or "end of input"
        raise self.error(f"Expected an expression, found {found!r}")


def parse(source: str) -> Ast:
    """
    Parse and type check ST source text.

    :raises StSyntaxError: on malformed source, with line/column
    :raises UndeclaredVariable: if an identifier was never declared
    :raises BadLocation: on invalid or mistyped %-locations
    :raises StTypeError: on mixed BOOL/INT operations
    """
    return _Parser(source).parse_program()


def compile_program(ast: Ast) -> tuple[CompiledProgram, list[str]]:
    symbols = {}
    log_lines = []
    for declaration in ast.declarations:
        if declaration.location is not None:
            mangled = declaration.location.mangled
            symbols[declaration.name] = mangled
            log_lines.append(f"varName: {mangled}\tvarType: {declaration.var_type}")

    log_lines.append(COMPILE_MESSAGE)
    log_lines.append(COMPILE_SENTINEL)

    program = CompiledProgram(
        program_name=ast.program_name,
        declarations=ast.declarations,
        statements=ast.statements,
        symbols=symbols,
    )
    return program, log_lines


def variables(prog: CompiledProgram) -> list[tuple[str, str]]:
    return [(d.location.mangled, d.var_type) for d in prog.located]


class _Scan:
    def __init__(self, env: dict):
        self.env = env
        self.wrapped = False

    def word(self, value: int) -> int:
        result = value % WORD_MODULUS
        if result != value:
            self.wrapped = True
        return result

    def evaluate(self, expr):
        match expr:
            case Literal(value=value):
                return value
            case VarRef(name=name):
                return self.env[name]
            case Unary(operand=operand):
                return not self.evaluate(operand)
            case Binary(op=op, left=left, right=right):
                return self.binary(op, self.evaluate(left), self.evaluate(right))
        raise TypeError(f"Unknown expression node {expr!r}")

    def binary(self, op, left, right):
        match op:
            case "AND":
                return left and right
            case "OR":
                return left or right
            case "XOR":
                return left != right
            case "+":
                return self.word(left + right)
            case "-":
                return self.word(left - right)
            case "*":
                return self.word(left * right)

        left, right = int(left), int(right)
        match op:
            case "=":
                return left == right
            case "<>":
                return left != right
            case "<":
                return left < right
            case ">":
                return left > right
            case "<=":
                return left <= right
            case ">=":
                return left >= right
        raise ValueError(f"Unknown operator {op!r}")

    def execute(self, statements):
        for statement in statements:
            match statement:
                case Assign(target=target, expr=expr):
                    self.env[target] = self.evaluate(expr)
                case IfStatement(branches=branches, else_body=else_body):
                    for condition, body in branches:
                        if self.evaluate(condition):
                            self.execute(body)
                            break
                    else:
                        self.execute(else_body)


def scan_cycle(prog: CompiledProgram, regs: RegisterMap) -> RegisterMap:
    """
    Run one read-inputs, execute, write-outputs pass. Pure: regs is not modified.

    Located variables start from the register image, other variables from
    their declared initial value. Only %Q locations are written back.
    """
    env = {}
    for declaration in prog.declarations:
        if declaration.location is None:
            env[declaration.name] = declaration.default
        else:
            env[declaration.name] = regs.read(declaration.location)

    scan = _Scan(env)
    scan.execute(prog.statements)

    result = regs.replace(wrapped=scan.wrapped)
    for declaration in prog.located:
        if declaration.location.area == "Q":
            result = result.with_value(declaration.location, env[declaration.name])
    return result
