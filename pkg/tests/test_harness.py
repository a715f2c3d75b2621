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
import json
import os.path
import unittest.mock as mock

import pytest

from plcforge import AQUA, LEGACY
from plcforge.exceptions import PermissionDenied, ScenarioPanicked, UnknownScenario
from plcforge.harness import (
    FAILURE_MARK,
    SUCCESS_MARK,
    ForgeEnvironment,
    MatrixReport,
    attack,
    bits,
    get_columns,
    inspect_db,
    load_expected_matrix,
    run_matrix,
    run_scenario,
)
from plcforge.playbooks import (
    CORE_SCENARIOS,
    AttackOutcome,
    Evidence,
    changed_vectors,
    credentials_look_plain,
    mutate_operator,
)
from plcforge.store import ROOT, UserRecord


def outcome(scenario, profile, success):
    return AttackOutcome(scenario=scenario, profile=profile, success=success)


def expected_outcomes():
    expected = load_expected_matrix()
    return [
        outcome(scenario, profile, expected[profile][scenario])
        for profile in (LEGACY, AQUA)
        for scenario in CORE_SCENARIOS
    ]


def test_expected_matrix():
    expected = load_expected_matrix()
    assert all(expected[LEGACY].values())
    assert not any(expected[AQUA].values())
    assert list(expected[LEGACY]) == list(CORE_SCENARIOS)


def test_get_columns():
    rows = [{"name": "pump", "state": "on"}, {"name": "drain valve", "state": "off"}]
    lines = list(get_columns(
        data=rows,
        headings=["Name", "State"],
        attributes=["name", "state"],
        getter=lambda row, key: row[key],
    ))
    assert lines == [
        "| Name        | State |",
        "| ----------- | ----- |",
        "| pump        | on    |",
        "| drain valve | off   |",
    ]

    with pytest.raises(TypeError):
        list(get_columns(data=rows, headings=["Name"], attributes=["name", "state"]))


def test_bits():
    assert bits([True, False, 1, 0]) == "1010"


class TestPlaybookHelpers:
    def test_mutate_operator(self):
        assert mutate_operator(b"a AND b AND c") == b"a OR  b AND c"
        with pytest.raises(ValueError):
            mutate_operator(b"a OR b")

    def test_changed_vectors(self):
        before = {"00": "0", "01": "1", "10": "1"}
        after = {"00": "1", "01": "1", "10": "0"}
        assert changed_vectors(before, after) == ["00", "10"]

    def test_credentials_look_plain(self):
        plain = UserRecord(user_id=1, name="n", username="openplc", password="openplc", email="e")
        base64_only = UserRecord(user_id=1, name="n", username="b3BlbnBsYw==", password="b3BlbnBsYw==", email="e")
        ciphertext = "A" * 22 + "=="
        encrypted = UserRecord(user_id=1, name="n", username=ciphertext, password=ciphertext, email="e")

        assert credentials_look_plain(plain)
        assert credentials_look_plain(base64_only)
        assert not credentials_look_plain(encrypted)

    def test_evidence(self):
        evidence = Evidence()
        evidence.add("status", 302)
        result = evidence.outcome("auth", LEGACY, True)

        assert result.get("status") == "302"
        assert result.get("missing") is None
        assert result.to_dict()["evidence"] == [["status", "302"]]


class TestMatrixReport:
    def test_pass(self):
        report = MatrixReport(outcomes=expected_outcomes(), expected=load_expected_matrix())

        assert report.passed
        rendered = report.render()
        assert rendered.endswith("Matrix PASS")
        assert f"| access    | {SUCCESS_MARK}" in rendered
        assert json.loads(report.to_json())["pass"] is True

    def test_mismatch(self):
        outcomes = expected_outcomes()
        outcomes[-1] = outcome(CORE_SCENARIOS[-1], AQUA, True)
        report = MatrixReport(outcomes=outcomes, expected=load_expected_matrix())

        assert not report.passed
        assert report.mismatches == [outcomes[-1]]
        assert "injection under aqua did not match" in report.render()

    def test_extra_scenarios_ignored(self):
        outcomes = [*expected_outcomes(), outcome("modbus-fci", AQUA, True)]
        assert MatrixReport(outcomes=outcomes, expected=load_expected_matrix()).passed

    def test_single_profile(self):
        outcomes = [o for o in expected_outcomes() if o.profile == AQUA]
        report = MatrixReport(outcomes=outcomes, expected=load_expected_matrix(), profiles=(AQUA,))
        assert f"| {FAILURE_MARK}" in report.render()
        assert report.passed


class TestEnvironment:
    def test_unknown_profile(self):
        with pytest.raises(ValueError):
            ForgeEnvironment("neo")

    def test_provisioned(self):
        with ForgeEnvironment(LEGACY) as env:
            assert env.tls is None
            assert env.runtime.dashboard.plc_running
            assert env.store.read_active_program() == env.copy_name
            assert env.plant_truth_table() == env.oracle_table(env.demo_source)
            root = env.root

        assert env.runtime is None
        assert not os.path.exists(root)

    def test_seeded_environments_repeat(self):
        with ForgeEnvironment(LEGACY, seed=11) as first:
            first_copy = first.copy_name
        with ForgeEnvironment(LEGACY, seed=11) as second:
            assert second.copy_name == first_copy

    def test_run_scenario_errors(self):
        with ForgeEnvironment(LEGACY) as env:
            with pytest.raises(UnknownScenario):
                run_scenario("teleport", LEGACY, env)
            with pytest.raises(ValueError):
                run_scenario("access", AQUA, env)

            broken = mock.Mock(side_effect=KeyError("boom"))
            with mock.patch.dict("plcforge.harness.PLAYBOOKS", {"access": broken}):
                with pytest.raises(ScenarioPanicked):
                    run_scenario("access", LEGACY, env)


def test_attack_unknown_scenario():
    with pytest.raises(UnknownScenario):
        attack("teleport", LEGACY)


class TestScenarios:
    def test_legacy_injection_evidence(self):
        result = attack("injection", LEGACY, seed=3)

        assert result.success
        assert result.get("baseline_oracle_agrees") == "True"
        assert result.get("attack_oracle_agrees") == "True"
        assert result.get("changed_vector") == "0000"
        assert result.get("pages_identical") == "True"
        assert result.get("compile_finished") == "True"
        assert result.get("start_status") == "302"
        assert result.get("session_source") == "transcript"

    def test_aqua_injection_blocked(self):
        result = attack("injection", AQUA)

        assert not result.success
        assert result.get("blocked_at") == "read active_program: permission denied"

    def test_aqua_auth_evidence(self):
        result = attack("auth", AQUA)

        assert not result.success
        assert result.get("transcript_credentials") == "none"
        assert result.get("database_credentials") == "none"
        assert result.get("default_login") == "401"

    def test_whitelisted_attacker_gets_in(self):
        result = attack("auth", AQUA, whitelist_attacker=True)

        assert result.success
        assert result.get("session_source") == "default"

    @pytest.mark.parametrize(
        "scenario, legacy, aqua",
        [
            ("psm-injection", True, False),
            ("deny-of-access", True, False),
            ("index-corruption", True, False),
            ("modbus-fci", True, True),
        ]
    )
    def test_extra_scenarios(self, scenario, legacy, aqua):
        assert attack(scenario, LEGACY).success is legacy
        assert attack(scenario, AQUA).success is aqua


def test_full_matrix():
    report = run_matrix(seed=1)

    assert report.passed, report.render()
    assert len(report.outcomes) == 2 * len(CORE_SCENARIOS)


def test_seeded_matrix_repeats():
    assert run_matrix(seed=1).to_json() == run_matrix(seed=1).to_json()


def test_whitelisted_attacker_fails_matrix():
    report = run_matrix((AQUA,), seed=1, whitelist_attacker=True)

    assert report.passed is False
    assert report.outcome("auth", AQUA).success
    assert ("auth", AQUA) in [(o.scenario, o.profile) for o in report.mismatches]


class TestInspectDb:
    def test_legacy(self, legacy_store):
        copy_name = legacy_store.save_copy(b"PROGRAM p\n  VAR\n  END_VAR\nEND_PROGRAM\n")
        legacy_store.insert_program("pump", copy_name, 1_700_000_000.0)

        lines = inspect_db(legacy_store.root, "other").split("\n")

        assert lines[0] == "*****Users*****"
        assert lines[1] == "10: OpenPLC User | openplc | openplc@openplc.com | openplc | None"
        assert lines[2] == "*****Programs*****"
        assert lines[3].startswith(f"PID: 1 | TITLE: pump | FILE: {copy_name} | UPLOADED: ")

    def test_hardened(self, hardened_store):
        with pytest.raises(PermissionDenied):
            inspect_db(hardened_store.root, "other")

        user_line = inspect_db(hardened_store.root, ROOT).split("\n")[1]
        assert " | openplc | " not in user_line
