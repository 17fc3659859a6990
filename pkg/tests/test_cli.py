import csv
import io
import json
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from slicecalc import cli
from slicecalc.cli import (
    ReportEnvelope,
    RunConfig,
    apply_mapping,
    load_schema,
    load_tolerances,
    parse_points,
    rewrite_command_alias,
    validate_report,
)
from slicecalc.clifford import Paravector
from slicecalc.errors import ConfigError
from slicecalc.operators import ResidualReport


ROOT = Path(__file__).resolve().parents[1]
CLI = ROOT / "sc.py"
PYTHON = ROOT / ".venv" / "bin" / "python"

POINTS = """\
# q0 q1 q2   x0 x1 x2
0.5 0.2 0.1   0 1 0
0 1 0         0 0 1
0 1 0         1 0 0
"""


class ConfigTests(unittest.TestCase):
    def test_defaults_are_valid(self) -> None:
        self.assertEqual([], RunConfig().validate())

    def test_validation_collects_every_error(self) -> None:
        cfg = RunConfig(m=9, resolutions=[32, 16], sphere_order=0, functions=["nope"], identities=["bogus"])
        errors = cfg.validate()
        self.assertTrue(any("m must lie" in e for e in errors))
        self.assertTrue(any("strictly increasing" in e for e in errors))
        self.assertTrue(any("sphere_order" in e for e in errors))
        self.assertTrue(any("bogus" in e for e in errors))
        self.assertGreaterEqual(len(errors), 5)

    def test_converge_needs_two_resolutions(self) -> None:
        errors = RunConfig(command="converge", resolutions=[32]).validate()
        self.assertIn("converge needs at least two resolutions", errors)

    def test_boundedness_belongs_to_converge(self) -> None:
        self.assertEqual([], RunConfig(command="converge", identities=["boundedness"]).validate())
        self.assertTrue(RunConfig(command="verify", identities=["boundedness"]).validate())

    def test_kernel_dump_needs_points(self) -> None:
        self.assertIn("kernel-dump needs --points", RunConfig(command="kernel-dump").validate())

    def test_mapping_overlay(self) -> None:
        cfg = apply_mapping(RunConfig(), {
            "m": 3,
            "profile": {"kind": "rectangle", "a": -1, "b": 1, "v_min": 1, "v_max": 2},
            "resolutions": "16, 24",
            "functions": ["one", "exp"],
            "settings": {"workers": 4, "log_file": "run.log"},
        })
        self.assertEqual(3, cfg.m)
        self.assertEqual("rectangle", cfg.profile.kind)
        self.assertEqual([16, 24], cfg.resolutions)
        self.assertEqual(["one", "exp"], cfg.functions)
        self.assertEqual(4, cfg.workers)
        self.assertEqual("run.log", cfg.log_file)

    def test_mapping_rejects_unknown_keys_and_bad_numbers(self) -> None:
        with self.assertRaises(ConfigError):
            apply_mapping(RunConfig(), {"resolution": 32})
        with self.assertRaises(ConfigError):
            apply_mapping(RunConfig(), {"m": "two"})
        with self.assertRaises(ConfigError):
            apply_mapping(RunConfig(), {"resolutions": "16,many"})

    def test_command_alias(self) -> None:
        self.assertEqual(["verify", "--m", "2"], rewrite_command_alias(["--command", "verify", "--m", "2"]))
        self.assertEqual(["hodge", "--degree", "3"], rewrite_command_alias(["--degree", "3", "--command=hodge"]))
        self.assertEqual(["converge"], rewrite_command_alias(["converge"]))

    def test_tolerance_table(self) -> None:
        table = load_tolerances()
        self.assertEqual(1e-12, table["clifford-axioms"]["tolerance"])
        self.assertEqual(10.0, table["extension"]["control_factor"])
        self.assertEqual(0.10, table["boundedness"]["spread"])


class PointsTests(unittest.TestCase):
    def test_rows_and_comments(self) -> None:
        rows = parse_points(POINTS, 2)
        self.assertEqual([2, 3, 4], [r[0] for r in rows])
        self.assertEqual([0.5, 0.2, 0.1], rows[0][1].tolist())
        self.assertEqual([0.0, 1.0, 0.0], rows[0][2].tolist())

    def test_bad_rows_name_their_line(self) -> None:
        with self.assertRaises(ConfigError) as ctx:
            parse_points("0 0 0 1 1 1\n1 2 3\n", 2)
        self.assertIn("line 2", str(ctx.exception))
        with self.assertRaises(ConfigError) as ctx:
            parse_points("0 0 x 1 1 1\n", 2)
        self.assertIn("line 1", str(ctx.exception))


class SchemaTests(unittest.TestCase):
    def test_missing_fields_and_wrong_types_are_reported(self) -> None:
        schema = load_schema()
        errors = validate_report({"schema": "slicecalc/1", "command": "verify"}, schema)
        self.assertIn("$ is missing required field 'reports'", errors)
        errors = validate_report({"schema": "other", "command": "fly", "runtime_s": "slow"}, schema)
        self.assertTrue(any("$.schema" in e for e in errors))
        self.assertTrue(any("$.command" in e for e in errors))
        self.assertTrue(any("$.runtime_s" in e for e in errors))


class RunLogTests(unittest.TestCase):
    def test_log_line_format(self) -> None:
        with tempfile.TemporaryDirectory() as td:
            path = Path(td) / "nested" / "run.log"
            with mock.patch.object(cli, "utc_now_iso", return_value="2026-01-02T03:04:05Z"):
                cli._log_identity(str(path), "cauchy", 32, "pass", 1e-7, 0.5)
                cli._log_identity(str(path), "plemelj", 32, "fail", 0.25, 1.25)
            lines = path.read_text(encoding="utf-8").splitlines()
            self.assertEqual(2, len(lines))
            self.assertTrue(lines[0].startswith("2026-01-02T03:04:05Z  VERIFY  identity=cauchy "))
            self.assertIn("n=32", lines[0])
            self.assertIn("max=1.000e-07 duration=0.5s", lines[0])
            self.assertIn("status=fail", lines[1])

    def test_timestamps_are_utc_seconds(self) -> None:
        self.assertRegex(cli.utc_now_iso(), r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$")

    def test_unwritable_log_is_ignored(self) -> None:
        with tempfile.TemporaryDirectory() as td:
            cli._log_identity(td, "cauchy", 32, "pass", 0.0, 0.0)
            self.assertTrue(Path(td).is_dir())

    def test_schema_violations_are_programming_errors(self) -> None:
        envelope = ReportEnvelope("verify", RunConfig().to_dict())
        with mock.patch.object(cli, "load_schema", return_value={"type": "object", "required": ["nope"]}):
            with self.assertRaises(RuntimeError):
                cli.render(envelope, "json")
        self.assertEqual([], validate_report(envelope.to_dict(), load_schema()))


class ConvergeTests(unittest.TestCase):
    def decaying(self, order: float):
        def evaluate(identity, fn, domain, cfg, tolerances):
            point = Paravector(2, 0.0, (0.0, 2.0))
            report = ResidualReport(identity, [point], [0.5 * domain.resolution ** -order], domain.resolution,
                                    function=fn.name)
            return cli.Outcome(identity, fn.name, report, True)

        return evaluate

    def converge(self, order: float) -> ReportEnvelope:
        cfg = RunConfig(command="converge", resolutions=[8, 16, 32], identities=["borel-pompeiu"],
                        functions=["conjugate"])
        with mock.patch.object(cli, "evaluate_identity", side_effect=self.decaying(order)):
            return cli.run_converge(cfg)

    def test_orders_follow_the_residual_decay(self) -> None:
        envelope = self.converge(2.0)
        orders = envelope.orders["borel-pompeiu"]["conjugate"]
        self.assertEqual(2, len(orders))
        for order in orders:
            self.assertAlmostEqual(2.0, order, places=10)
        self.assertTrue(envelope.passed["borel-pompeiu"])

    def test_slow_decay_fails_the_minimum_order(self) -> None:
        envelope = self.converge(1.0)
        self.assertAlmostEqual(1.0, envelope.orders["borel-pompeiu"]["conjugate"][0], places=10)
        self.assertFalse(envelope.passed["borel-pompeiu"])
        self.assertEqual(1, envelope.exit_code)

    def test_boundedness_spread(self) -> None:
        cfg = RunConfig(command="converge", resolutions=[8, 12], identities=["boundedness"], trials=2,
                        functions=["one"])
        with mock.patch.object(cli, "boundedness_probe", side_effect=[1.0, 1.05]) as ratio:
            envelope = cli.run_converge(cfg)
        self.assertEqual(2, ratio.call_count)
        self.assertEqual([1.0, 1.05], envelope.boundedness["ratios"])
        self.assertAlmostEqual(0.05, envelope.boundedness["spread"], places=12)
        self.assertTrue(envelope.passed["boundedness"])
        with mock.patch.object(cli, "boundedness_probe", side_effect=[1.0, 1.5]):
            self.assertFalse(cli.run_converge(cfg).passed["boundedness"])


class CliTests(unittest.TestCase):
    def run_cli(self, cwd: Path, *args: str) -> subprocess.CompletedProcess[str]:
        python = PYTHON if PYTHON.exists() else Path(sys.executable)
        return subprocess.run(
            [str(python), str(CLI), *args],
            cwd=str(cwd),
            capture_output=True,
            text=True,
        )

    def test_version(self) -> None:
        with tempfile.TemporaryDirectory() as td:
            for args in ((), ("--version",), ("-v",)):
                res = self.run_cli(Path(td), *args)
                self.assertEqual(0, res.returncode)
                self.assertEqual("slicecalc 0.1.0", res.stdout.strip())

    def test_configuration_errors_exit_2(self) -> None:
        with tempfile.TemporaryDirectory() as td:
            res = self.run_cli(Path(td), "verify", "--m", "0")
            self.assertEqual(2, res.returncode)
            self.assertIn("m must lie in", res.stderr)

            res = self.run_cli(Path(td), "verify", "--profile", "kind=disk,u0=0,v0=0.2,R=0.5")
            self.assertEqual(2, res.returncode)
            self.assertIn("v = 0", res.stderr)

            res = self.run_cli(Path(td), "verify", "--config", "missing.yaml")
            self.assertEqual(2, res.returncode)
            self.assertIn("cannot read config", res.stderr)

    def test_kernel_dump_json(self) -> None:
        with tempfile.TemporaryDirectory() as td:
            workdir = Path(td)
            (workdir / "pairs.txt").write_text(POINTS, encoding="utf-8")
            res = self.run_cli(workdir, "kernel-dump", "--m", "2", "--points", "pairs.txt")
            self.assertEqual(0, res.returncode, res.stderr)
            data = json.loads(res.stdout)
            self.assertEqual([], validate_report(data, load_schema()))
            self.assertEqual("kernel-dump", data["command"])
            regular, on_sphere, on_axis = data["rows"]
            self.assertFalse(regular["singular"])
            self.assertEqual(4, len(regular["s_inv"]))
            self.assertEqual(4, len(regular["k"]))
            self.assertEqual(4, len(regular["k_e0"]))
            self.assertTrue(on_sphere["singular"])
            self.assertIsNone(on_sphere["s_inv"])
            self.assertIsNone(on_sphere["k"])
            self.assertTrue(on_axis["singular"])
            self.assertIsNotNone(on_axis["s_inv"])
            self.assertIsNone(on_axis["k"])

    def test_kernel_dump_csv_via_command_alias(self) -> None:
        with tempfile.TemporaryDirectory() as td:
            workdir = Path(td)
            (workdir / "pairs.txt").write_text(POINTS, encoding="utf-8")
            res = self.run_cli(workdir, "--command", "kernel-dump", "--points", "pairs.txt",
                               "--format", "csv", "--out", "dump.csv")
            self.assertEqual(0, res.returncode, res.stderr)
            rows = list(csv.reader(io.StringIO((workdir / "dump.csv").read_text(encoding="utf-8"))))
            self.assertEqual(["line", "q", "x", "singular", "s_inv", "k", "k_e0"], rows[0])
            self.assertEqual(4, len(rows))
            self.assertEqual("false", rows[1][3])
            self.assertEqual("true", rows[2][3])
            self.assertEqual("", rows[2][4])
            self.assertEqual(4, len(rows[1][4].split()))

    def test_verify_with_yaml_config(self) -> None:
        with tempfile.TemporaryDirectory() as td:
            workdir = Path(td)
            (workdir / "run.yaml").write_text(
                "m: 2\n"
                "resolutions: [8]\n"
                "functions: [identity]\n"
                "identities: [clifford-axioms, kernel-decomposition]\n"
                "settings:\n"
                "  log_file: logs/run.log\n",
                encoding="utf-8",
            )
            res = self.run_cli(workdir, "verify", "--config", "run.yaml", "--seed", "3")
            self.assertEqual(0, res.returncode, res.stderr)
            data = json.loads(res.stdout)
            self.assertEqual([], validate_report(data, load_schema()))
            self.assertEqual(3, data["config"]["seed"])
            self.assertEqual([8], data["config"]["resolutions"])
            self.assertTrue(data["passed"]["all"])
            self.assertEqual(["clifford-axioms", "kernel-decomposition"], [r["identity"] for r in data["reports"]])
            self.assertEqual(["-", "-"], [r["function"] for r in data["reports"]])
            log_lines = (workdir / "logs" / "run.log").read_text(encoding="utf-8").splitlines()
            self.assertEqual(2, len(log_lines))
            self.assertIn("VERIFY  identity=clifford-axioms", log_lines[0])
            self.assertIn("status=pass", log_lines[0])

    def test_verify_reports_skipped_identities(self) -> None:
        with tempfile.TemporaryDirectory() as td:
            res = self.run_cli(Path(td), "verify", "--resolutions", "8", "--identities", "m1-oracle,clifford-axioms",
                               "--functions", "one")
            self.assertEqual(0, res.returncode, res.stderr)
            data = json.loads(res.stdout)
            self.assertEqual("m1-oracle", data["skipped"][0]["identity"])
            self.assertEqual(1, len(data["reports"]))

    def test_converge_rejects_p_below_the_bound(self) -> None:
        with tempfile.TemporaryDirectory() as td:
            res = self.run_cli(Path(td), "converge", "--m", "2", "--resolutions", "8,16",
                               "--identities", "boundedness", "--p", "2")
            self.assertEqual(2, res.returncode)
            self.assertIn("p > max(m, 2) = 2", res.stderr)

    def test_converge_reports_orders_and_boundedness(self) -> None:
        with tempfile.TemporaryDirectory() as td:
            res = self.run_cli(Path(td), "converge", "--resolutions", "8,16", "--identities", "gauss,boundedness",
                               "--functions", "exp", "--trials", "2", "--sphere-order", "4")
            self.assertIn(res.returncode, (0, 1), res.stderr)
            data = json.loads(res.stdout)
            self.assertEqual([], validate_report(data, load_schema()))
            self.assertEqual(1, len(data["orders"]["gauss"]["exp"]))
            self.assertTrue(data["passed"]["gauss"])
            bounded = data["boundedness"]
            self.assertEqual([8, 16], bounded["resolutions"])
            self.assertEqual(2, len(bounded["ratios"]))
            self.assertTrue(all(r > 0.0 for r in bounded["ratios"]))
            spread = (max(bounded["ratios"]) - min(bounded["ratios"])) / min(bounded["ratios"])
            self.assertAlmostEqual(spread, bounded["spread"], places=12)

    def test_hodge_envelope(self) -> None:
        with tempfile.TemporaryDirectory() as td:
            res = self.run_cli(Path(td), "hodge", "--resolutions", "16", "--degree", "4", "--functions", "square",
                               "--sphere-order", "4")
            self.assertEqual(0, res.returncode, res.stderr)
            data = json.loads(res.stdout)
            self.assertEqual([], validate_report(data, load_schema()))
            self.assertEqual("hodge", data["command"])
            self.assertEqual(
                ["hodge-complementarity", "hodge-orthogonality", "hodge-idempotence", "im-q-trace"],
                [r["identity"] for r in data["reports"]],
            )
            trace = data["reports"][-1]
            self.assertLess(trace["extra"]["p_tail"], 1e-6)
            self.assertGreater(trace["extra"]["control"], 10 * trace["max_residual"])
            self.assertTrue(data["passed"]["all"])


if __name__ == "__main__":
    unittest.main()
