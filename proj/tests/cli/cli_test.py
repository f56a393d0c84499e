"""End-to-end checks of the strandstate executable: exit codes, report
schema conformance, and byte-identical output across runs."""

import json
import os
import subprocess
import sys
import tempfile
import unittest

import jsonschema

CLI = os.environ["STRANDSTATE_CLI"]
DATA = os.environ["STRANDSTATE_DATA"]
SCHEMA = os.environ["STRANDSTATE_SCHEMA"]

with open(SCHEMA) as f:
    VALIDATOR = jsonschema.Draft202012Validator(json.load(f))


def data(name):
    return os.path.join(DATA, name)


def run(*args, env=None):
    full_env = dict(os.environ)
    full_env.pop("STRANDSTATE_BOUNDS", None)
    full_env.update(env or {})
    return subprocess.run([CLI, *args], capture_output=True, text=True, env=full_env, timeout=900)


def report(*args, code=0, env=None):
    r = run(*args, "--format", "json", env=env)
    if r.returncode != code:
        raise AssertionError(f"{args}: exit {r.returncode}, wanted {code}\n{r.stderr}")
    j = json.loads(r.stdout)
    errors = [e.message for e in VALIDATOR.iter_errors(j)]
    if errors:
        raise AssertionError(f"{args}: schema errors {errors[:3]}")
    return j


class Version(unittest.TestCase):
    def test_reports_format_version(self):
        r = run("--version")
        self.assertEqual(r.returncode, 0)
        self.assertIn("format 1.0", r.stdout)


class Analyze(unittest.TestCase):
    def test_no_receptions_one_shape(self):
        j = report("analyze", data("toy.proto"), data("toy-send.skel"))
        self.assertEqual(len(j["shapes"]), 1)
        self.assertFalse(j["dead"])

    def test_envelope_goal_is_deterministic(self):
        args = ("analyze", data("envelope.proto"), data("envelope-goal.skel"), "--format", "json", "--tree",
                "--sentence")
        a, b = run(*args), run(*args)
        self.assertEqual(a.returncode, 0)
        self.assertEqual(a.stdout, b.stdout)
        j = json.loads(a.stdout)
        self.assertTrue(VALIDATOR.is_valid(j))
        self.assertEqual(len(j["shapes"]), 3)
        self.assertIsInstance(j["sentence"], str)

    def test_bound_exhaustion_exits_two(self):
        j = report("analyze", data("envelope.proto"), data("envelope-goal.skel"), "--max-strands", "2", code=2)
        self.assertTrue(j["incomplete"])

    def test_environment_bounds(self):
        j = report("analyze", data("envelope.proto"), data("envelope-goal.skel"), code=2,
                   env={"STRANDSTATE_BOUNDS": "strands=2"})
        self.assertEqual(j["bounds"]["max_strands"], 2)

    def test_dot_output(self):
        r = run("analyze", data("toy.proto"), data("toy-goal.skel"), "--format", "dot")
        self.assertEqual(r.returncode, 0)
        self.assertTrue(r.stdout.startswith("digraph"))


class VerifyGoal(unittest.TestCase):
    def test_envelope_verified_with_evidence(self):
        with tempfile.TemporaryDirectory() as tmp:
            ev = os.path.join(tmp, "evidence.json")
            j = report("verify-goal", "envelope", "--evidence", ev)
            self.assertEqual(j["verdict"], "VERIFIED")
            self.assertEqual(j["incomplete_steps"], 0)
            with open(ev) as f:
                evidence = json.load(f)
            self.assertTrue(VALIDATOR.is_valid(evidence))
            root = evidence["steps"][0]
            self.assertTrue(all(len(b["labels"]) == 2 for b in root["bridges"]))

    def test_weak_without_bridge_is_not_verified(self):
        j = report("verify-goal", "envelope-weak", "--no-bridge", "--no-deepen", "--max-strands", "9", code=2)
        self.assertEqual(j["verdict"], "INCONCLUSIVE")
        self.assertIn("fixpoint", j["steps"][0]["shape_outcomes"])

    def test_tiny_bounds_inconclusive(self):
        j = report("verify-goal", "envelope", "--no-deepen", "--max-strands", "4", code=2)
        self.assertEqual(j["verdict"], "INCONCLUSIVE")


class Checks(unittest.TestCase):
    def test_check_bundle(self):
        j = report("check-bundle", data("toy-run.bundle"), "--protocol", data("toy.proto"))
        self.assertTrue(j["ok"])
        with open(data("toy-run.bundle")) as f:
            broken = f.read().replace("((1 1) (0 1))", "")
        with tempfile.NamedTemporaryFile("w", suffix=".bundle", delete=False) as f:
            f.write(broken)
        try:
            j = report("check-bundle", f.name, "--protocol", data("toy.proto"), code=1)
            self.assertEqual([v["kind"] for v in j["violations"]], ["MissingTransmitter"])
        finally:
            os.unlink(f.name)

    def test_check_compat(self):
        j = report("check-compat", data("tpm-chain.bundle"))
        self.assertTrue(j["compatible"])
        self.assertEqual(j["witness"]["length"], 2)
        j = report("check-compat", data("tpm-split.bundle"), code=1)
        self.assertFalse(j["compatible"])
        self.assertIsNone(j["witness"])

    def test_check_sat(self):
        j = report("check-sat", data("toy-run.bundle"), data("toy-goal.formula"), "--protocol", data("toy.proto"))
        self.assertTrue(j["satisfied"])


class Oracles(unittest.TestCase):
    def test_paths(self):
        j = report("oracle", "paths", "--max-len", "6")
        self.assertEqual(j["violations"], 0)
        self.assertEqual(j["paths"], 2640)

    def test_bundles(self):
        j = report("oracle", "bundles", data("toy.proto"), data("toy-goal.skel"))
        self.assertEqual(j["counterexamples"], 0)
        self.assertEqual(j["bundles"], 556)

    def test_compat_is_seeded(self):
        a = run("oracle", "compat", "--random", "200", "--seed", "7", "--format", "json")
        b = run("oracle", "compat", "--random", "200", "--seed", "7", "--format", "json")
        self.assertEqual(a.returncode, 0)
        self.assertEqual(a.stdout, b.stdout)
        j = json.loads(a.stdout)
        self.assertTrue(VALIDATOR.is_valid(j))
        self.assertEqual(j["exhaustive"]["disagreements"] + j["random"]["disagreements"], 0)


class Fmt(unittest.TestCase):
    def test_idempotent(self):
        for name in ["toy.proto", "envelope.proto", "toy-goal.skel", "toy-run.bundle", "tpm-split.bundle"]:
            extra = ["--protocol", data("toy.proto")] if name.startswith("toy-") else []
            once = run("fmt", data(name), *extra)
            self.assertEqual(once.returncode, 0, once.stderr)
            with tempfile.NamedTemporaryFile("w", delete=False) as f:
                f.write(once.stdout)
            try:
                twice = run("fmt", f.name, *extra)
                self.assertEqual(twice.stdout, once.stdout, name)
            finally:
                os.unlink(f.name)


class Errors(unittest.TestCase):
    def test_parse_error_exit_three_with_position(self):
        with tempfile.NamedTemporaryFile("w", suffix=".proto", delete=False) as f:
            f.write("(defprotocol bad\n  (defrole r (vars (x data) (y data))\n    (trace (recv (enc x y)))))\n")
        try:
            r = run("fmt", f.name)
            self.assertEqual(r.returncode, 3)
            self.assertIn("3:25", r.stderr)
        finally:
            os.unlink(f.name)

    def test_missing_file(self):
        self.assertEqual(run("analyze", data("nope.proto"), data("toy-goal.skel")).returncode, 3)

    def test_usage_error(self):
        self.assertGreater(run("frobnicate").returncode, 2)
        self.assertGreater(run("analyze").returncode, 2)

    def test_unknown_builtin_protocol(self):
        self.assertEqual(run("check-bundle", data("toy-run.bundle")).returncode, 3)


if __name__ == "__main__":
    unittest.main(argv=[sys.argv[0], "-v"])
