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

from plcforge.bundled import bundled_program
from plcforge.oracle import BruteForceEvaluator, input_vectors, truth_table
from plcforge.stlang import RegisterMap, compile_program, parse, parse_location, scan_cycle


def interpreter_table(source: str, words: dict[str, int] | None = None):
    program, _ = compile_program(parse(source))
    evaluator = BruteForceEvaluator(source)
    coils = [parse_location(loc) for loc in evaluator.input_coils]
    outputs = [parse_location(loc) for loc in evaluator.outputs]

    base = RegisterMap()
    for loc, value in (words or {}).items():
        base = base.set_input_word(parse_location(loc).index, value)

    table = {}
    for vector in input_vectors(len(coils)):
        regs = base
        for location, value in zip(coils, vector):
            regs = regs.set_input_coil(location.index, value)
        result = scan_cycle(program, regs)
        table[vector] = {location.text: result.read(location) for location in outputs}
    return table


def test_input_vectors():
    assert input_vectors(2) == [
        (False, False),
        (False, True),
        (True, False),
        (True, True),
    ]


def test_evaluator_declarations():
    evaluator = BruteForceEvaluator(bundled_program("user_program.st"))
    assert evaluator.input_coils == ["%IX0.0", "%IX0.1", "%IX0.2", "%IX0.3"]
    assert evaluator.outputs == ["%QX0.0", "%QX0.1", "%QW0"]


def test_pump_station_table():
    table = truth_table(bundled_program("user_program.st"), {"%IW0": 40})

    assert len(table) == 16
    # start pressed, stop released
    assert table[(True, False, False, False)] == {"%QX0.0": True, "%QX0.1": False, "%QW0": 60}
    # stop pressed with the high level alarm
    assert table[(True, True, True, False)] == {"%QX0.0": False, "%QX0.1": True, "%QW0": 60}
    # manual override silences the alarm
    assert table[(False, True, True, True)]["%QX0.1"] is False


@pytest.mark.parametrize(
    "name, words",
    [
        ("user_program.st", {"%IW0": 40}),
        ("user_program.st", {"%IW0": 250}),
        ("tank_level.st", None),
        ("blank_program.st", None),
    ]
)
def test_agrees_with_interpreter(name, words):
    source = bundled_program(name)
    assert truth_table(source, words) == interpreter_table(source, words)


def test_agrees_on_a_mutated_program():
    source = bundled_program("user_program.st").replace(" AND ", " OR  ")
    assert truth_table(source, {"%IW0": 0}) == interpreter_table(source, {"%IW0": 0})
    assert truth_table(source) != truth_table(bundled_program("user_program.st"))


def test_too_many_inputs():
    declarations = "\n".join(f"    i{n} AT %IX0.{n} : BOOL;" for n in range(8))
    declarations += "\n    i8 AT %IX1.0 : BOOL;"
    source = f"PROGRAM wide\n  VAR\n{declarations}\n  END_VAR\nEND_PROGRAM\n"

    with pytest.raises(ValueError):
        truth_table(source)
