"""
Tests for the config module.
"""
import json
import math
import tempfile
import unittest
from pathlib import Path

from quasiid.charfn import Convolution, Degenerate, DiscretePMF, Gaussian, Poisson, ScaledShift
from quasiid.config import parse_number, parse_probes, read_config, with_probes
from quasiid.criteria import Tolerances
from quasiid.exceptions import ConfigInvalid
from quasiid.lk import LevyKhinchineCF


class TestParseNumber(unittest.TestCase):

    def test_plain_numbers(self):
        self.assertEqual(parse_number(3, "x"), 3.0)
        self.assertEqual(parse_number(0.25, "x"), 0.25)
        self.assertEqual(parse_number("0.5", "x"), 0.5)

    def test_pi_expressions(self):
        self.assertEqual(parse_number("pi", "x"), math.pi)
        self.assertEqual(parse_number("4*pi", "x"), 4.0 * math.pi)
        self.assertEqual(parse_number("pi/512", "x"), math.pi / 512)
        self.assertAlmostEqual(parse_number("3 * pi / 4", "x"), 0.75 * math.pi)

    def test_rejects_garbage(self):
        for value in ["tau", "2*pi/0", True, None, [1], "nan"]:
            with self.assertRaises(ConfigInvalid) as ctx:
                parse_number(value, "grid.step")
            self.assertEqual(ctx.exception.field, "grid.step")

    def test_parse_probes(self):
        self.assertEqual(parse_probes("0.25, 1,3"), [0.25, 1.0, 3.0])
        with self.assertRaises(ConfigInvalid):
            parse_probes("1,-2")
        with self.assertRaises(ConfigInvalid):
            parse_probes([])


class TestReadConfig(unittest.TestCase):
    """Reading and validating config files."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.temp_path = Path(self.temp_dir)

    def tearDown(self):
        import shutil
        if self.temp_path.exists():
            shutil.rmtree(self.temp_path)

    def write_config(self, data, name="config.json"):
        path = self.temp_path / name
        path.write_text(json.dumps(data))
        return str(path)

    def minimal(self, **extra):
        data = {"distributions": [{"name": "poisson", "spec": {"kind": "poisson", "rate": 1}}]}
        data.update(extra)
        return data

    def assertInvalid(self, data, field):
        with self.assertRaises(ConfigInvalid) as ctx:
            read_config(self.write_config(data))
        self.assertEqual(ctx.exception.field, field)
        self.assertIn(field, str(ctx.exception))

    def test_defaults(self):
        config = read_config(self.write_config(self.minimal()))
        self.assertEqual(len(config.distributions), 1)
        self.assertEqual(config.distributions[0].name, "poisson")
        self.assertEqual(config.distributions[0].cf, Poisson(1.0))
        self.assertAlmostEqual(config.t_max, 4.0 * math.pi)
        self.assertAlmostEqual(config.step, math.pi / 512)
        self.assertEqual(len(config.h_sequence), 7)
        self.assertAlmostEqual(config.h_sequence[0], math.pi / 8)
        self.assertEqual(config.t_probes, [0.5, 1.0, 2.0])
        self.assertEqual(config.k_max, 32)
        self.assertEqual(config.tolerances, Tolerances())
        self.assertEqual(config.report, "report.json")
        self.assertIsNone(config.traces)

    def test_full_config(self):
        data = self.minimal(
            schema_version=1,
            grid={"t_max": "8*pi", "step": "pi/256"},
            h_sequence={"h0": "pi/8", "ratio": 0.5, "count": 5},
            t_probes=[1, 3],
            k_max=16,
            tolerances={"weighted_sum": 1e-5},
            outputs={"report": "out/r.json", "traces": "out/traces"},
        )
        config = read_config(self.write_config(data))
        self.assertAlmostEqual(config.t_max, 8.0 * math.pi)
        self.assertAlmostEqual(config.h_sequence[-1], math.pi / 128)
        self.assertEqual(config.t_probes, [1.0, 3.0])
        self.assertEqual(config.k_max, 16)
        self.assertEqual(config.tolerances.weighted_sum, 1e-5)
        self.assertEqual(config.tolerances.derivative, 1e-6)
        self.assertEqual(config.traces, "out/traces")

    def test_explicit_h0_is_rounded_onto_grid(self):
        data = {
            "schema_version": 1,
            "distributions": [{"name": "poisson", "spec": {"kind": "poisson", "rate": 1}}],
            "grid": {"t_max": "4*pi", "step": "pi/512"},
            "h_sequence": {"h0": 0.2, "ratio": 0.5, "count": 7},
            "t_probes": [0.5, 1, 2],
            "k_max": 32,
            "tolerances": {"weighted_sum": 1e-6, "derivative": 1e-6,
                           "exact_identity": 1e-9, "monotone": 1e-9},
            "outputs": {"report": "report.json", "traces": None},
        }
        config = read_config(self.write_config(data))
        self.assertEqual(len(config.h_sequence), 7)
        self.assertAlmostEqual(config.h_sequence[0], math.pi / 8)
        for h in config.h_sequence:
            multiple = h / config.step
            self.assertAlmostEqual(multiple, round(multiple), places=9)
        implicit = read_config(self.write_config(self.minimal(), name="implicit.json"))
        self.assertEqual(config.h_sequence, implicit.h_sequence)

    def test_explicit_h0_on_grid_is_kept(self):
        data = self.minimal(grid={"step": "pi/256"}, h_sequence={"h0": "pi/4", "count": 4})
        config = read_config(self.write_config(data))
        self.assertAlmostEqual(config.h_sequence[0], math.pi / 4)
        self.assertAlmostEqual(config.h_sequence[-1], math.pi / 32)

    def test_distribution_kinds(self):
        specs = [
            {"kind": "degenerate", "a": 2},
            {"kind": "gaussian", "mean": 1, "variance": 2},
            {"kind": "bernoulli", "p": 0.3},
            {"kind": "pmf", "atoms": [[0, 0.25], [1, 0.75]]},
            {"kind": "convolution", "components": [{"kind": "poisson", "rate": 1},
                                                   {"kind": "degenerate", "a": 1}]},
            {"kind": "scaled_shift", "base": {"kind": "poisson", "rate": 1}, "scale": 2},
            {"kind": "levy_khinchine", "gamma": 0.5, "atoms": [[1, 0.2], [2, -0.1]]},
        ]
        data = {"distributions": [{"name": f"d{i}", "spec": s} for i, s in enumerate(specs)]}
        cfs = [d.cf for d in read_config(self.write_config(data)).distributions]
        self.assertEqual(cfs[0], Degenerate(2.0))
        self.assertEqual(cfs[1], Gaussian(1.0, 2.0))
        self.assertEqual(cfs[2].atoms, ((0.0, 0.7), (1.0, 0.3)))
        self.assertIsInstance(cfs[3], DiscretePMF)
        self.assertIsInstance(cfs[4], Convolution)
        self.assertEqual(cfs[5], ScaledShift(Poisson(1.0), 2.0, 0.0))
        self.assertIsInstance(cfs[6], LevyKhinchineCF)
        self.assertEqual(cfs[6].pair.gamma, 0.5)
        self.assertEqual(cfs[6].pair.g.atoms, [(1.0, 0.2), (2.0, -0.1)])

    def test_pmf_from_csv(self):
        (self.temp_path / "pmf.csv").write_text("x,mass\n0,0.2\n1,0.5\n2,0.3\n")
        data = {"distributions": [{"name": "file", "spec": {"kind": "pmf", "path": "pmf.csv"}}]}
        cf = read_config(self.write_config(data)).distributions[0].cf
        self.assertEqual(cf.atoms, ((0.0, 0.2), (1.0, 0.5), (2.0, 0.3)))

    def test_pmf_csv_missing_column(self):
        (self.temp_path / "pmf.csv").write_text("x,weight\n0,1\n")
        data = {"distributions": [{"name": "file", "spec": {"kind": "pmf", "path": "pmf.csv"}}]}
        self.assertInvalid(data, "distributions[0].spec.path")

    def test_pmf_csv_missing_file(self):
        data = {"distributions": [{"name": "file", "spec": {"kind": "pmf", "path": "none.csv"}}]}
        with self.assertRaises(FileNotFoundError):
            read_config(self.write_config(data))

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            read_config(str(self.temp_path / "absent.json"))

    def test_malformed_json(self):
        path = self.temp_path / "bad.json"
        path.write_text("{\"distributions\": [")
        with self.assertRaises(ConfigInvalid) as ctx:
            read_config(str(path))
        self.assertIn("JSON parsing error", str(ctx.exception))

    def test_invalid_fields(self):
        self.assertInvalid({}, "distributions")
        self.assertInvalid(self.minimal(schema_version=2), "schema_version")
        self.assertInvalid(self.minimal(grid={"t_max": 1.0, "step": 0.3}), "grid.step")
        self.assertInvalid(self.minimal(h_sequence={"h0": 0.2, "ratio": 0.3}), "h_sequence")
        self.assertInvalid(self.minimal(h_sequence={"ratio": 1.5}), "h_sequence.ratio")
        self.assertInvalid(self.minimal(h_sequence={"count": 0}), "h_sequence.count")
        self.assertInvalid(self.minimal(t_probes=[0.5, 20.0]), "t_probes")
        self.assertInvalid(self.minimal(k_max=0), "k_max")
        self.assertInvalid(self.minimal(tolerances={"weighted": 1e-3}), "tolerances")
        self.assertInvalid(self.minimal(tolerances={"monotone": -1}), "tolerances.monotone")
        self.assertInvalid(self.minimal(outputs={"report": 3}), "outputs.report")

    def test_invalid_distributions(self):
        def single(spec, name="d"):
            return {"distributions": [{"name": name, "spec": spec}]}

        self.assertInvalid(single({"kind": "cauchy"}), "distributions[0].spec.kind")
        self.assertInvalid(single({"kind": "poisson"}), "distributions[0].spec.rate")
        self.assertInvalid(single({"kind": "bernoulli", "p": 1.5}), "distributions[0].spec")
        self.assertInvalid(single({"kind": "pmf", "atoms": [[0, 0.5]]}), "distributions[0].spec")
        self.assertInvalid(single({"kind": "poisson", "rate": 1}, name=""), "distributions[0].name")
        self.assertInvalid(
            {"distributions": [{"name": "a", "spec": {"kind": "poisson", "rate": 1}},
                               {"name": "a", "spec": {"kind": "poisson", "rate": 2}}]},
            "distributions[1].name")

    def test_with_probes(self):
        config = read_config(self.write_config(self.minimal()))
        updated = with_probes(config, [0.25, 3.0])
        self.assertEqual(updated.t_probes, [0.25, 3.0])
        self.assertEqual(config.t_probes, [0.5, 1.0, 2.0])
        with self.assertRaises(ConfigInvalid):
            with_probes(config, [100.0])


if __name__ == '__main__':
    unittest.main()
