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
import pytest

from plcforge import COMPILE_SENTINEL
from plcforge.bundled import bundled_program
from plcforge.exceptions import (
    BadLocation,
    StSyntaxError,
    StTypeError,
    UndeclaredVariable,
)
from plcforge.stlang import (
    BOOL,
    COMPILE_MESSAGE,
    INT,
    RegisterMap,
    compile_program,
    parse,
    parse_location,
    scan_cycle,
    tokenize,
    variables,
)


def make_program(declarations: str, body: str) -> str:
    return f"PROGRAM test\n  VAR\n{declarations}\n  END_VAR\n{body}\nEND_PROGRAM\n"


def build(source: str):
    program, _ = compile_program(parse(source))
    return program


class TestTokenize:
    def test_keywords_any_case(self):
        tokens = tokenize("if x then")
        assert [(t.kind, t.value) for t in tokens] == [
            ("KEYWORD", "IF"),
            ("NAME", "x"),
            ("KEYWORD", "THEN"),
            ("EOF", ""),
        ]

    def test_positions(self):
        tokens = tokenize("a\n  b := 1;")
        b = tokens[1]
        assert (b.value, b.line, b.column) == ("b", 2, 3)

    def test_comments_skipped(self):
        tokens = tokenize("(* a\n comment *) x")
        assert tokens[0].value == "x"
        assert tokens[0].line == 2

    def test_unexpected_character(self):
        with pytest.raises(StSyntaxError) as err:
            tokenize("x := $;")
        assert (err.value.line, err.value.column) == (1, 6)

    def test_unterminated_comment(self):
        with pytest.raises(StSyntaxError):
            tokenize("(* never closed\nx := 1;")


class TestLocations:
    @pytest.mark.parametrize(
        "text, index, var_type",
        [
            ("%IX0.0", 0, BOOL),
            ("%QX1.7", 15, BOOL),
            ("%QX7.7", 63, BOOL),
            ("%IW3", 3, INT),
            ("%QW15", 15, INT),
        ]
    )
    def test_valid(self, text, index, var_type):
        location = parse_location(text)
        assert location.index == index
        assert location.var_type == var_type

    def test_mangled(self):
        assert parse_location("%QX0.1").mangled == "__QX0_1"
        assert parse_location("%IW2").mangled == "__IW2"

    @pytest.mark.parametrize(
        "text",
        ["%QX0.8", "%QX8.0", "%IX1", "%QW16", "%QW1.0", "%MX0.0", "%QB0"]
    )
    def test_invalid(self, text):
        with pytest.raises(BadLocation):
            parse_location(text)


class TestParse:
    def test_bundled_programs(self):
        for name in ["user_program.st", "tank_level.st", "blank_program.st"]:
            ast = parse(bundled_program(name))
            assert ast.declarations

    def test_undeclared_assignment(self):
        source = make_program("    x : BOOL;", "  y := TRUE;")
        with pytest.raises(UndeclaredVariable) as err:
            parse(source)
        assert (err.value.line, err.value.column) == (5, 3)

    def test_undeclared_use(self):
        source = make_program("    x : BOOL;", "  x := y;")
        with pytest.raises(UndeclaredVariable):
            parse(source)

    def test_duplicate_declaration(self):
        source = make_program("    x : BOOL;\n    x : INT;", "")
        with pytest.raises(StSyntaxError) as err:
            parse(source)
        assert err.value.line == 4

    def test_missing_semicolon(self):
        source = make_program("    x : BOOL;", "  x := TRUE\n")
        with pytest.raises(StSyntaxError) as err:
            parse(source)
        assert "';'" in str(err.value)

    def test_trailing_tokens(self):
        source = make_program("    x : BOOL;", "") + "x"
        with pytest.raises(StSyntaxError):
            parse(source)

    def test_location_type_mismatch(self):
        source = make_program("    x AT %QW0 : BOOL;", "")
        with pytest.raises(BadLocation):
            parse(source)

    def test_missing_location(self):
        source = make_program("    x AT : BOOL;", "")
        with pytest.raises(BadLocation):
            parse(source)

    @pytest.mark.parametrize(
        "body",
        [
            "  b := n;",
            "  n := b;",
            "  b := n AND b;",
            "  n := b + 1;",
            "  b := NOT n;",
            "  IF n THEN b := TRUE; END_IF;",
        ]
    )
    def test_type_errors(self, body):
        source = make_program("    b : BOOL;\n    n : INT;", body)
        with pytest.raises(StTypeError):
            parse(source)

    def test_initial_value_type(self):
        source = make_program("    n : INT := TRUE;", "")
        with pytest.raises(StTypeError):
            parse(source)

    def test_literal_too_large(self):
        source = make_program("    n : INT;", "  n := 65536;")
        with pytest.raises(StSyntaxError):
            parse(source)

    def test_str_has_position(self):
        source = make_program("    x : BOOL;", "  y := TRUE;")
        with pytest.raises(UndeclaredVariable) as err:
            parse(source)
        assert str(err.value).startswith("line 5, column 3:")


class TestCompile:
    def test_log_lines(self):
        _, log_lines = compile_program(parse(bundled_program("blank_program.st")))
        assert log_lines == [
            "varName: __IX0_0\tvarType: BOOL",
            "varName: __QX0_0\tvarType: BOOL",
            COMPILE_MESSAGE,
            COMPILE_SENTINEL,
        ]

    def test_variables(self):
        program = build(bundled_program("user_program.st"))
        assert variables(program) == [
            ("__IX0_0", BOOL),
            ("__IX0_1", BOOL),
            ("__IX0_2", BOOL),
            ("__IX0_3", BOOL),
            ("__QX0_0", BOOL),
            ("__QX0_1", BOOL),
            ("__IW0", INT),
            ("__QW0", INT),
        ]

    def test_symbols(self):
        program = build(bundled_program("blank_program.st"))
        assert program.symbols == {"var_in": "__IX0_0", "var_out": "__QX0_0"}


class TestRegisterMap:
    def test_defaults(self):
        regs = RegisterMap()
        assert len(regs.input_coils) == 64
        assert len(regs.holding_words) == 16
        assert not regs.wrapped

    def test_wrong_size(self):
        with pytest.raises(ValueError):
            RegisterMap(input_coils=(False,) * 8)

    def test_word_range(self):
        with pytest.raises(ValueError):
            RegisterMap().set_input_word(0, 65536)
        with pytest.raises(ValueError):
            RegisterMap().set_input_word(0, -1)

    def test_updates_are_copies(self):
        regs = RegisterMap()
        changed = regs.set_input_coil(3, True)

        assert changed.input_coils[3] is True
        assert regs.input_coils[3] is False


class TestScanCycle:
    def test_user_program(self):
        program = build(bundled_program("user_program.st"))
        regs = RegisterMap().set_input_coil(0, True).set_input_word(0, 40)

        result = scan_cycle(program, regs)

        assert result.output_coils[0] is True  # pump
        assert result.output_coils[1] is False  # alarm
        assert result.holding_words[0] == 60  # valve
        assert result.input_coils == regs.input_coils

    def test_pure(self):
        program = build(bundled_program("user_program.st"))
        regs = RegisterMap().set_input_coil(0, True)

        first = scan_cycle(program, regs)
        second = scan_cycle(program, regs)

        assert first == second
        assert regs.output_coils[0] is False

    def test_stop_wins(self):
        program = build(bundled_program("user_program.st"))
        regs = RegisterMap().set_input_coil(0, True).set_input_coil(1, True)

        assert scan_cycle(program, regs).output_coils[0] is False

    def test_state_carries_through_outputs(self):
        program = build(bundled_program("tank_level.st"))
        regs = RegisterMap().set_input_coil(8, True)  # enable at %IX1.0

        for _ in range(3):
            regs = scan_cycle(program, regs)
            assert regs.output_coils[15] is False
        regs = scan_cycle(program, regs)

        assert regs.holding_words[1] == 4
        assert regs.output_coils[15] is True  # warning at %QX1.7

    def test_elsif_branch(self):
        program = build(bundled_program("tank_level.st"))
        regs = RegisterMap(holding_words=(0, 9) + (0,) * 14)
        regs = regs.set_input_coil(2, True)  # overflow

        result = scan_cycle(program, regs)

        assert result.output_coils[1] is True
        assert result.holding_words[1] == 0

    def test_else_branch(self):
        program = build(bundled_program("user_program.st"))
        regs = RegisterMap().set_input_word(0, 150)

        assert scan_cycle(program, regs).holding_words[0] == 0

    def test_addition_wraps(self):
        source = make_program("    n AT %QW0 : INT;", "  n := n + 1;")
        program = build(source)
        regs = RegisterMap(holding_words=(65535,) + (0,) * 15)

        result = scan_cycle(program, regs)

        assert result.holding_words[0] == 0
        assert result.wrapped

    def test_subtraction_wraps(self):
        source = make_program("    n AT %QW0 : INT;", "  n := n - 1;")
        result = scan_cycle(build(source), RegisterMap())

        assert result.holding_words[0] == 65535
        assert result.wrapped

    def test_no_wrap_flag(self):
        source = make_program("    n AT %QW0 : INT;", "  n := 2 * 3;")
        result = scan_cycle(build(source), RegisterMap())

        assert result.holding_words[0] == 6
        assert not result.wrapped

    def test_inputs_not_written(self):
        source = make_program(
            "    a AT %IX0.0 : BOOL;\n    q AT %QX0.0 : BOOL;",
            "  a := TRUE;\n  q := a;",
        )
        result = scan_cycle(build(source), RegisterMap())

        assert result.input_coils[0] is False
        assert result.output_coils[0] is True
