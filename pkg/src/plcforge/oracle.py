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
Brute-force truth tables for ST programs.

This evaluator deliberately shares nothing with the stlang parser or interpreter:
it tokenizes with its own pattern and evaluates statements directly from the
token stream, so the two can be checked against each other.
"""
import itertools

from . import _lazy_imports as _laz


TOKEN_PATTERN = (
    r"\(\*.*?\*\)"
    r"|%[A-Za-z]{2}[0-9.]+"
    r"|:=|<>|<=|>="
    r"|[A-Za-z_][A-Za-z0-9_]*"
    r"|[0-9]+"
    r"|\S"
)

PRECEDENCE = {
    "OR": 1,
    "XOR": 2,
    "AND": 3,
    "=": 4, "<>": 4,
    "<": 5, ">": 5, "<=": 5, ">=": 5,
    "+": 6, "-": 6,
    "*": 7,
}

MAX_INPUTS = 8


class BruteForceEvaluator:
    def __init__(self, source: str):
        tokens = [
            t for t in _laz.re.findall(TOKEN_PATTERN, source, _laz.re.DOTALL)
            if not t.startswith("(*")
        ]
        upper = [t.upper() for t in tokens]

        var_start = upper.index("VAR") + 1
        var_end = upper.index("END_VAR")
        program_end = len(upper) - 1 - upper[::-1].index("END_PROGRAM")

        # name -> (location text or None, type, initial)
        self.declarations: dict[str, tuple[str | None, str, object]] = {}
        declaration: list[str] = []
        for token in tokens[var_start:var_end]:
            if token == ";":
                self._declare(declaration)
                declaration = []
            else:
                declaration.append(token)

        self.body = tokens[var_end + 1:program_end]
        self.position = 0
        self.env: dict[str, object] = {}

    def _declare(self, parts: list[str]):
        name = parts[0]
        location = None
        if len(parts) > 2 and parts[1].upper() == "AT":
            location = parts[2].upper()
        type_index = parts.index(":") + 1
        var_type = parts[type_index].upper()
        initial = None
        if ":=" in parts:
            literal = parts[parts.index(":=") + 1].upper()
            initial = literal == "TRUE" if literal in {"TRUE", "FALSE"} else int(literal)
        self.declarations[name] = (location, var_type, initial)

    @property
    def input_coils(self) -> list[str]:
        return [
            loc for loc, _, _ in self.declarations.values()
            if loc is not None and loc.startswith("%IX")
        ]

    @property
    def outputs(self) -> list[str]:
        return [
            loc for loc, _, _ in self.declarations.values()
            if loc is not None and loc.startswith("%Q")
        ]

    # Token stream helpers
    def peek(self) -> str:
        if self.position < len(self.body):
            return self.body[self.position]
        return ""

    def take(self) -> str:
        token = self.peek()
        self.position += 1
        return token

    def take_keyword(self, keyword: str):
        token = self.take()
        if token.upper() != keyword:
            raise ValueError(f"Expected {keyword}, found {token!r}")

    # Expressions by precedence climbing
    def expression(self, min_precedence: int = 1):
        left = self.operand()
        while True:
            op = self.peek().upper()
            precedence = PRECEDENCE.get(op)
            if precedence is None or precedence < min_precedence:
                return left
            self.take()
            right = self.expression(precedence + 1)
            left = self.apply(op, left, right)

    def operand(self):
        token = self.take()
        keyword = token.upper()
        if keyword == "NOT":
            return not self.operand()
        if token == "(":
            value = self.expression()
            self.take_keyword(")")
            return value
        if keyword == "TRUE":
            return True
        if keyword == "FALSE":
            return False
        if token.isdigit():
            return int(token)
        return self.env[token]

    @staticmethod
    def apply(op: str, left, right):
        if op == "AND":
            return bool(left) and bool(right)
        if op == "OR":
            return bool(left) or bool(right)
        if op == "XOR":
            return bool(left) != bool(right)
        if op == "+":
            return (left + right) & 0xFFFF
        if op == "-":
            return (left - right) & 0xFFFF
        if op == "*":
            return (left * right) & 0xFFFF

        left, right = int(left), int(right)
        return {
            "=": left == right,
            "<>": left != right,
            "<": left < right,
            ">": left > right,
            "<=": left <= right,
            ">=": left >= right,
        }[op]

    # Statements, parsed and skipped when not executing
    def block(self, execute: bool, terminators: set[str]):
        while self.peek().upper() not in terminators:
            self.statement(execute)

    def statement(self, execute: bool):
        token = self.take()
        if token.upper() != "IF":
            self.take_keyword(":=")
            value = self.expression()
            self.take_keyword(";")
            if execute:
                self.env[token] = value
            return

        branch_ends = {"ELSIF", "ELSE", "END_IF"}
        done = False
        condition = self.expression()
        self.take_keyword("THEN")
        self.block(execute and not done and bool(condition), branch_ends)
        done = done or bool(condition)

        while self.peek().upper() == "ELSIF":
            self.take()
            condition = self.expression()
            self.take_keyword("THEN")
            self.block(execute and not done and bool(condition), branch_ends)
            done = done or bool(condition)

        if self.peek().upper() == "ELSE":
            self.take()
            self.block(execute and not done, {"END_IF"})

        self.take_keyword("END_IF")
        self.take_keyword(";")

    def run(self, inputs: dict[str, object], outputs: dict[str, object] | None = None):
        """
        Evaluate one scan.

        :param inputs: %I location text -> value, missing inputs read as zero
        :param outputs: %Q location text -> value before the scan
        :return: %Q location text -> value after the scan
        """
        outputs = {} if outputs is None else outputs
        self.env = {}
        for name, (location, var_type, initial) in self.declarations.items():
            zero = False if var_type == "BOOL" else 0
            if location is None:
                self.env[name] = zero if initial is None else initial
            elif location.startswith("%I"):
                self.env[name] = inputs.get(location, zero)
            else:
                self.env[name] = outputs.get(location, zero)

        self.position = 0
        self.block(True, {""})

        return {
            location: self.env[name]
            for name, (location, _, _) in self.declarations.items()
            if location is not None and location.startswith("%Q")
        }


def input_vectors(count: int) -> list[tuple[bool, ...]]:
    return list(itertools.product((False, True), repeat=count))


def truth_table(source: str, words: dict[str, int] | None = None) -> dict[tuple[bool, ...], dict[str, object]]:
    """
    Outputs for every combination of the program's boolean input coils,
    from an all-zero output image.

    :param source: ST program text
    :param words: fixed values for %IW inputs
    """
    evaluator = BruteForceEvaluator(source)
    coils = evaluator.input_coils
    if len(coils) > MAX_INPUTS:
        raise ValueError(f"{len(coils)} input coils is too many for an exhaustive table")

    table = {}
    for vector in input_vectors(len(coils)):
        inputs = dict(words or {})
        inputs.update(zip(coils, vector))
        table[vector] = evaluator.run(inputs)
    return table
