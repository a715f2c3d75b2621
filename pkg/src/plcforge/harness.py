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
Provision throwaway projects, run attack playbooks against them and
compare the results with the expected outcome matrix.
"""
import os

from collections.abc import Callable, Generator, Iterable

from ducktools.classbuilder.prefab import Prefab, attribute

from . import AQUA, LEGACY, PROFILES, DEFAULT_USERNAME, DEFAULT_PASSWORD
from . import _lazy_imports as _laz
from ._logger import log
from ._records import RecordBook
from .aquasec import Whitelist, client_ssl_context, harden_install
from .bundled import DEMO_PROGRAM, bundled_program, expected_matrix_text
from .client import ForgeClient
from .config import ForgeConfig
from .exceptions import (
    EnvSetupFailure,
    ForgeError,
    LifecycleError,
    ScenarioPanicked,
    TransportError,
    UnknownScenario,
)
from .fieldbus import HmiClient, ModbusServer
from .oracle import input_vectors, truth_table
from .paths import DB_FILENAME
from .playbooks import CORE_SCENARIOS, PLAYBOOKS, AttackOutcome
from .runtime import Runtime
from .store import ProgramRecord, Store, UserRecord
from .tap import Rule, Tap, Transcript
from .webserver import WebServer


HARNESS_HOST = "127.0.0.1"

DEMO_TITLE = "user_program"
DEMO_DESCRIPTION = "Pump station"
DEMO_INPUT_COILS = ("%IX0.0", "%IX0.1", "%IX0.2", "%IX0.3")
DEMO_OUTPUT_COILS = ("%QX0.0", "%QX0.1")

# Wall clock start for seeded environments, one day further per seed
SEEDED_EPOCH = 1_700_000_000

SUCCESS_MARK = "✓"
FAILURE_MARK = "-"


def get_columns(
    *,
    data: Iterable,
    headings: list[str],
    attributes: list[str],
    getter: Callable[[object, str], str] = getattr,
) -> Generator[str]:
    """
    A helper function to generate a table to print with correct column widths

    :param data: input data
    :param headings: headings for the top of the table
    :param attributes: attribute names to use for each column
    :param getter: attribute getter function (ex: getattr, dict.get)
    :return: Generator of column lines
    """
    if len(headings) != len(attributes):
        raise TypeError("Must be the same number of headings as attributes")

    widths = {
        f"{attrib}": len(head) for attrib, head in zip(attributes, headings)
    }

    data_rows = []
    for d in data:
        row = []
        for attrib in attributes:
            d_text = f"{getter(d, attrib)}"
            widths[attrib] = max(widths[attrib], len(d_text))
            row.append(d_text)
        data_rows.append(row)

    yield (
        "| "
        + " | ".join(f"{head:<{widths[attrib]}}"
                     for head, attrib in zip(headings, attributes))
        + " |"
    )
    yield (
        "| "
        + " | ".join("-" * widths[attrib] for attrib in attributes)
        + " |"
    )
    for row in data_rows:
        yield (
            "| "
            + " | ".join(f"{item:<{widths[attrib]}}"
                         for item, attrib in zip(row, attributes))
            + " |"
        )


def bits(values: Iterable) -> str:
    return "".join("1" if v else "0" for v in values)


def seeded_tokens(seed: int) -> Callable[[], str]:
    rng = _laz.random.Random(seed)

    def token_factory() -> str:
        return f"{rng.getrandbits(128):032x}"

    return token_factory


def seeded_clock(seed: int) -> Callable[[], float]:
    """
    A stopped wall clock, so upload dates and activity times repeat between runs
    """
    now = float(SEEDED_EPOCH + seed * 86400)
    return lambda: now


class ForgeEnvironment:
    """
    A fresh project with a running web server, Modbus server and the demo
    program deployed by the operator.

    Use as a context manager; everything started here is torn down on exit.
    """
    def __init__(
        self,
        profile: str,
        *,
        seed: int | None = None,
        whitelist_attacker: bool = False,
        config: ForgeConfig | None = None,
    ):
        if profile not in PROFILES:
            raise ValueError(f"Unknown profile {profile!r}, expected one of {PROFILES}")

        self.profile = profile
        self.seed = seed
        self.whitelist_attacker = whitelist_attacker
        self.config = config if config is not None else ForgeConfig(
            profile=profile,
            scan_interval=0.005,
            compile_step_delay=0.001,
        )

        self.demo_source: bytes = bundled_program(DEMO_PROGRAM).encode("utf-8")

        self._tempdir = None
        self.store: Store | None = None
        self.runtime: Runtime | None = None
        self.webserver: WebServer | None = None
        self.modbus: ModbusServer | None = None
        self.operator: ForgeClient | None = None
        self.copy_name: str | None = None
        self._taps: list[Tap] = []

    def __enter__(self):
        return self.start()

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.stop()

    @property
    def root(self) -> str:
        return self._tempdir.name

    @property
    def tls(self):
        return self.webserver.tls

    @property
    def web_address(self) -> tuple[str, int]:
        return self.webserver.address

    @property
    def modbus_address(self) -> tuple[str, int]:
        return self.modbus.address

    def start(self) -> "ForgeEnvironment":
        try:
            self._provision()
        except Exception as e:
            self.stop()
            if isinstance(e, EnvSetupFailure):
                raise
            raise EnvSetupFailure(f"Could not provision {self.profile} environment: {e}") from e
        return self

    def _provision(self) -> None:
        self._tempdir = _laz.TemporaryDirectory(prefix="plcforge-")
        rng = None if self.seed is None else _laz.random.Random(self.seed)
        self.store = Store.init(self.root, self.profile, rng=rng)

        if self.profile == AQUA:
            harden_install(self.store)
            if self.whitelist_attacker:
                paths = self.store.paths
                whitelist = Whitelist.load(paths.whitelist_path)
                whitelist.add(DEFAULT_USERNAME, self.config.attacker_ip)
                self.store.write_file(paths.whitelist_path, whitelist.dumps().encode("utf-8"))

        if self.seed is None:
            self.runtime = Runtime(store=self.store, config=self.config)
        else:
            self.runtime = Runtime(
                store=self.store,
                config=self.config,
                clock=seeded_clock(self.seed),
                token_factory=seeded_tokens(self.seed + 1),
            )
        self.runtime.boot()

        self.webserver = WebServer(self.runtime, HARNESS_HOST, 0).start()
        self.modbus = ModbusServer(self.runtime.plant, HARNESS_HOST, 0).start()

        self.operator = self.client(self.config.operator_ip)
        response = self.operator.login(DEFAULT_USERNAME, DEFAULT_PASSWORD)
        if response.status != 302:
            raise EnvSetupFailure(f"Operator login refused with status {response.status}")
        try:
            self.copy_name = self.operator.deploy(self.demo_source, DEMO_TITLE, DEMO_DESCRIPTION)
        except (LifecycleError, TransportError) as e:
            raise EnvSetupFailure(f"Operator could not deploy the demo program: {e}") from e

        log(f"Provisioned {self.profile} environment at {self.root!r} running {self.copy_name}")

    def stop(self) -> None:
        for tap in self._taps:
            tap.stop()
        self._taps.clear()
        if self.modbus is not None:
            self.modbus.stop()
            self.modbus = None
        if self.webserver is not None:
            self.webserver.stop()
            self.webserver = None
        if self.runtime is not None:
            self.runtime.shutdown()
            self.runtime = None
        if self._tempdir is not None:
            self._tempdir.cleanup()
            self._tempdir = None

    # Roles
    def client(self, source_ip: str, *, address: tuple[str, int] | None = None) -> ForgeClient:
        host, port = address if address is not None else self.web_address
        ssl_context = None
        if self.tls is not None:
            ssl_context = client_ssl_context(self.tls.cert_path)
        return ForgeClient(
            host=host,
            port=port,
            source_ip=source_ip,
            ssl_context=ssl_context,
            timeout=self.config.client_timeout,
        )

    def tap(self, *, upstream: tuple[str, int] | None = None, rule: Rule | None = None) -> Tap:
        tap = Tap(upstream if upstream is not None else self.web_address, rule=rule).start()
        self._taps.append(tap)
        return tap

    def sniff_operator_login(self) -> Transcript:
        """
        Have the operator log in once more through a recording tap
        """
        tap = self.tap()
        operator = self.client(self.config.operator_ip, address=tap.address)
        try:
            operator.login(DEFAULT_USERNAME, DEFAULT_PASSWORD)
        except TransportError as e:
            log(f"Operator login through the tap failed: {e}")
        tap.stop()
        self._taps.remove(tap)
        return tap.transcript

    # Observations
    def plant_truth_table(self) -> dict[str, str]:
        """
        Drive every demo input vector over Modbus and read the output coils back

        :return: input bits -> output bits
        """
        table = {}
        with HmiClient(self.modbus_address, timeout=self.config.client_timeout) as hmi:
            for vector in input_vectors(len(DEMO_INPUT_COILS)):
                for address, value in enumerate(vector):
                    hmi.write_coil(address, value)
                self.runtime.wait_for_scans(2)
                table[bits(vector)] = bits(hmi.read_coils(0, len(DEMO_OUTPUT_COILS)))
            for address in range(len(DEMO_INPUT_COILS)):
                hmi.write_coil(address, False)
        return table

    @staticmethod
    def oracle_table(source: bytes) -> dict[str, str]:
        table = truth_table(source.decode("utf-8"))
        return {
            bits(vector): bits(outputs.get(coil, False) for coil in DEMO_OUTPUT_COILS)
            for vector, outputs in table.items()
        }

    def page_digests(self) -> dict[str, str]:
        digests = {}
        for path in ("/programs", "/dashboard"):
            response = self.operator.get(path)
            digests[path] = _laz.hashlib.sha256(response.body).hexdigest()
        return digests

    def record_digest(self) -> str:
        records = self.store.programs()
        text = "\n".join([str(len(records)), *(r.to_line() for r in records)])
        return _laz.hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


class MatrixReport(Prefab, kw_only=True):
    outcomes: list[AttackOutcome]
    expected: dict[str, dict[str, bool]]
    profiles: tuple[str, ...] = attribute(default=(LEGACY, AQUA))

    def outcome(self, scenario: str, profile: str) -> AttackOutcome | None:
        for outcome in self.outcomes:
            if outcome.scenario == scenario and outcome.profile == profile:
                return outcome
        return None

    @property
    def mismatches(self) -> list[AttackOutcome]:
        return [
            o for o in self.outcomes
            if o.scenario in CORE_SCENARIOS
            and o.success != self.expected[o.profile][o.scenario]
        ]

    @property
    def passed(self) -> bool:
        return not self.mismatches

    def render(self) -> str:
        rows = []
        for scenario in CORE_SCENARIOS:
            row = {"scenario": scenario}
            for profile in self.profiles:
                outcome = self.outcome(scenario, profile)
                if outcome is not None:
                    row[profile] = SUCCESS_MARK if outcome.success else FAILURE_MARK
                else:
                    row[profile] = ""
                expected = self.expected[profile][scenario]
                row[f"expected_{profile}"] = SUCCESS_MARK if expected else FAILURE_MARK
            rows.append(row)

        attributes = [
            "scenario",
            *self.profiles,
            *(f"expected_{p}" for p in self.profiles),
        ]
        headings = [
            "Attack",
            *self.profiles,
            *(f"expected {p}" for p in self.profiles),
        ]
        lines = list(get_columns(
            data=rows,
            headings=headings,
            attributes=attributes,
            getter=lambda row, key: row[key],
        ))
        lines.append("")
        lines.append(f"Matrix {'PASS' if self.passed else 'FAIL'}")
        for outcome in self.mismatches:
            lines.append(f"  {outcome.scenario} under {outcome.profile} did not match")
        return "\n".join(lines)

    def to_json(self) -> str:
        return _laz.json.dumps(
            {
                "pass": self.passed,
                "profiles": list(self.profiles),
                "expected": self.expected,
                "outcomes": [o.to_dict() for o in self.outcomes],
            },
            indent=2,
        )


def load_expected_matrix() -> dict[str, dict[str, bool]]:
    data = _laz.tomllib.loads(expected_matrix_text())
    return {
        profile: {scenario: bool(data[profile][scenario]) for scenario in CORE_SCENARIOS}
        for profile in PROFILES
    }


def run_scenario(name: str, profile: str, env: ForgeEnvironment) -> AttackOutcome:
    """
    Run one playbook against a provisioned environment

    :raises UnknownScenario: if no playbook has this name
    :raises ScenarioPanicked: if the playbook crashed instead of reaching a verdict
    """
    try:
        playbook = PLAYBOOKS[name]
    except KeyError:
        raise UnknownScenario(
            f"Unknown scenario {name!r}, expected one of {', '.join(PLAYBOOKS)}"
        )
    if env.profile != profile:
        raise ValueError(f"Environment runs {env.profile!r}, not {profile!r}")

    log(f"Running {name} against {profile}")
    try:
        outcome = playbook(env)
    except EnvSetupFailure:
        raise
    except Exception as e:
        raise ScenarioPanicked(f"Scenario {name!r} under {profile!r} crashed: {e!r}") from e

    log(f"{name} under {profile}: {'success' if outcome.success else 'failure'}")
    return outcome


def attack(
    name: str,
    profile: str,
    *,
    seed: int | None = None,
    whitelist_attacker: bool = False,
) -> AttackOutcome:
    if name not in PLAYBOOKS:
        raise UnknownScenario(
            f"Unknown scenario {name!r}, expected one of {', '.join(PLAYBOOKS)}"
        )
    with ForgeEnvironment(profile, seed=seed, whitelist_attacker=whitelist_attacker) as env:
        return run_scenario(name, profile, env)


def run_matrix(
    profiles: Iterable[str] = (LEGACY, AQUA),
    *,
    seed: int | None = None,
    whitelist_attacker: bool = False,
) -> MatrixReport:
    """
    Run every core scenario under every profile, each against its own fresh environment
    """
    profiles = tuple(profiles)
    outcomes = [
        attack(scenario, profile, seed=seed, whitelist_attacker=whitelist_attacker)
        for profile in profiles
        for scenario in CORE_SCENARIOS
    ]
    return MatrixReport(
        outcomes=outcomes,
        expected=load_expected_matrix(),
        profiles=profiles,
    )


def inspect_db(root: str, identity: str) -> str:
    """
    Dump the users and programs of a project database as the given identity

    :raises PermissionDenied: if the identity may not read the database
    """
    store = Store(root=root)
    book = RecordBook.loads(store.read_as(identity, DB_FILENAME).decode("utf-8"))

    lines = ["*****Users*****"]
    for user in UserRecord.select_rows(book):
        lines.append(
            f"{user.user_id}: {user.name} | {user.username} | {user.email} "
            f"| {user.password} | {user.picture_path}"
        )
    lines.append("*****Programs*****")
    for program in ProgramRecord.select_rows(book):
        lines.append(
            f"PID: {program.prog_id} | TITLE: {program.title} "
            f"| FILE: {program.copy_name} | UPLOADED: {program.upload_date}"
        )
    return "\n".join(lines)
