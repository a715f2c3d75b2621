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
import sys
import os

import argparse

from ducktools.lazyimporter import LazyImporter, FromImport, ModuleImport

from . import __version__, PROFILES, LEGACY, AQUA
from .exceptions import ForgeError

_laz = LazyImporter(
    [
        ModuleImport("json"),
        FromImport("plcforge.aquasec", "harden_install"),
        FromImport("plcforge.config", "ForgeConfig"),
        FromImport("plcforge.fieldbus", "ModbusServer"),
        FromImport("plcforge.harness", "attack"),
        FromImport("plcforge.harness", "inspect_db"),
        FromImport("plcforge.harness", "run_matrix"),
        FromImport("plcforge.paths", "ProjectPaths"),
        FromImport("plcforge.paths", "default_root"),
        FromImport("plcforge.runtime", "Runtime"),
        FromImport("plcforge.store", "Store"),
        FromImport("plcforge.webserver", "WebServer"),
    ]
)

SCENARIO_NAMES = (
    "access", "auth", "replay", "mitm", "injection",
    "psm-injection", "deny-of-access", "index-corruption", "modbus-fci",
)


class FixedArgumentParser(argparse.ArgumentParser):
    """
    The builtin argument parser uses shutil to figure out the terminal width
    to display help info. This one replaces the function that calls help info
    and plugs in a value for width.

    This prevents the unnecessary import.
    """
    def _get_formatter(self):
        # Calculate width
        try:
            columns = int(os.environ['COLUMNS'])
        except (KeyError, ValueError):
            try:
                size = os.get_terminal_size()
            except (AttributeError, ValueError, OSError):
                # get_terminal_size unsupported
                columns = 80
            else:
                columns = size.columns

        # noinspection PyArgumentList
        return self.formatter_class(prog=self.prog, width=columns-2)


def get_parser(prog, exit_on_error=True) -> FixedArgumentParser:
    parser = FixedArgumentParser(
        prog=prog,
        description="PLC runtime emulator with legacy and hardened profiles and an attack harness",
        exit_on_error=exit_on_error,
    )

    parser.add_argument("-V", "--version", action="version", version=__version__)

    subparsers = parser.add_subparsers(dest="command", required=True)

    # 'install'
    install_parser = subparsers.add_parser(
        "install",
        help="Create a fresh project store, hardened when the profile is aqua",
    )
    install_parser.add_argument("--profile", choices=PROFILES, default=LEGACY)
    install_parser.add_argument(
        "--root",
        help="Project root folder (default: $PLCFORGE_ROOT or the user data folder)",
    )

    # 'serve'
    serve_parser = subparsers.add_parser(
        "serve",
        help="Run the web server, scan loop and Modbus server for a project",
    )
    serve_parser.add_argument(
        "--profile",
        choices=PROFILES,
        help="Profile to install with if the root holds no store yet",
    )
    serve_parser.add_argument("--root", help="Project root folder")
    serve_parser.add_argument("--host", help="Address to bind")
    serve_parser.add_argument("--http-port", type=int, help="Web server port")
    serve_parser.add_argument("--modbus-port", type=int, help="Modbus server port")
    serve_parser.add_argument(
        "--access-log",
        action="store_true",
        help="Log every HTTP request",
    )

    # 'inspect-db'
    inspect_parser = subparsers.add_parser(
        "inspect-db",
        help="Dump the users and programs of a project database",
    )
    inspect_parser.add_argument("--root", help="Project root folder")
    inspect_parser.add_argument(
        "--as",
        dest="identity",
        choices=["other", "root"],
        default="other",
        help="File system identity to read the database as",
    )

    # 'attack'
    attack_parser = subparsers.add_parser(
        "attack",
        help="Run one attack scenario against a fresh environment",
    )
    attack_parser.add_argument("scenario", choices=SCENARIO_NAMES)
    attack_parser.add_argument("--profile", choices=PROFILES, default=LEGACY)
    attack_parser.add_argument("--seed", type=int, help="Seed for copy names and session tokens")
    attack_parser.add_argument("--json", action="store_true", help="Print the outcome as JSON")
    attack_parser.add_argument(
        "--whitelist-attacker",
        action="store_true",
        help="Add the attacker address to the aqua whitelist",
    )

    # 'matrix'
    matrix_parser = subparsers.add_parser(
        "matrix",
        help="Run every core scenario under every profile and compare with the expected matrix",
    )
    matrix_parser.add_argument(
        "--profile",
        action="append",
        choices=PROFILES,
        help="Profile to include, may be repeated (default: all)",
    )
    matrix_parser.add_argument("--seed", type=int, help="Seed for copy names and session tokens")
    matrix_parser.add_argument("--json", action="store_true", help="Print the report as JSON")
    matrix_parser.add_argument(
        "--whitelist-attacker",
        action="store_true",
        help="Add the attacker address to the aqua whitelist",
    )

    return parser


def _root(args) -> str:
    return args.root if args.root else _laz.default_root()


def install_command(args):
    root = _root(args)
    store = _laz.Store.init(root, args.profile)
    if args.profile == AQUA:
        result = _laz.harden_install(store)
        print(f"Certificate fingerprint: {result.tls.fingerprint}")

    config = _laz.ForgeConfig(profile=args.profile)
    config.save(store.paths.config_path)
    print(f"Installed {args.profile} project at {store.root!r}")
    return 0


def serve_command(args):
    root = _root(args)
    paths = _laz.ProjectPaths(root)
    if not os.path.exists(paths.db_path):
        if args.profile is None:
            raise RuntimeError(f"No project at {root!r}, pass --profile to install one")
        args.root = root
        install_command(args)

    store = _laz.Store(root=root)
    if args.profile is not None and args.profile != store.profile:
        raise RuntimeError(
            f"Project at {root!r} was installed as {store.profile!r}, not {args.profile!r}"
        )

    config = _laz.ForgeConfig.load(paths.config_path)
    config.profile = store.profile
    if args.host:
        config.bind_host = args.host
    if args.http_port is not None:
        if store.profile == AQUA:
            config.https_port = args.http_port
        else:
            config.http_port = args.http_port
    if args.modbus_port is not None:
        config.modbus_port = args.modbus_port
    if args.access_log:
        config.access_log = True

    runtime = _laz.Runtime(store=store, config=config)
    runtime.boot()
    modbus = _laz.ModbusServer(runtime.plant, config.bind_host, config.modbus_port).start()
    webserver = _laz.WebServer(runtime, config.bind_host)
    try:
        webserver.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        webserver.stop()
        modbus.stop()
        runtime.shutdown()
    return 0


def inspect_db_command(args):
    print(_laz.inspect_db(_root(args), args.identity))
    return 0


def attack_command(args):
    outcome = _laz.attack(
        args.scenario,
        args.profile,
        seed=args.seed,
        whitelist_attacker=args.whitelist_attacker,
    )
    if args.json:
        print(_laz.json.dumps(outcome.to_dict(), indent=2))
    else:
        verdict = "success" if outcome.success else "failure"
        print(f"{outcome.scenario} under {outcome.profile}: {verdict}")
        for label, value in outcome.evidence:
            print(f"  {label}: {value}")
    return 0


def matrix_command(args):
    profiles = tuple(dict.fromkeys(args.profile)) if args.profile else PROFILES
    report = _laz.run_matrix(
        profiles,
        seed=args.seed,
        whitelist_attacker=args.whitelist_attacker,
    )
    print(report.to_json() if args.json else report.render())
    return 0 if report.passed else 1


def main_command() -> int:
    executable_name = os.path.splitext(os.path.basename(sys.executable))[0]

    if __name__ == "__main__":
        command = f"{executable_name} -m plcforge"
    else:
        command = os.path.basename(sys.argv[0])

    parser = get_parser(prog=command)
    args = parser.parse_args()

    match args.command:
        case "install":
            return install_command(args)
        case "serve":
            return serve_command(args)
        case "inspect-db":
            return inspect_db_command(args)
        case "attack":
            return attack_command(args)
        case "matrix":
            return matrix_command(args)
        case _:
            raise RuntimeError(f"Invalid Command {args.command!r}")


def main() -> int:
    try:
        result = main_command()
    except (RuntimeError, ForgeError) as e:
        errors = "\n".join(str(a) for a in e.args) + "\n"
        if sys.stderr:
            sys.stderr.write(errors)
        return 1
    return result


if __name__ == "__main__":
    sys.exit(main())
