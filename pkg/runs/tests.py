import io
import json
import tempfile
import time
import unittest
from pathlib import Path

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase, override_settings
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APISimpleTestCase

from continuation.sweeps import ContinuationPath, CurvePoint, CurveResult, SweepPlan, lambda_path, sweep
from physics.nonlinearities import CubicModel, KerrModel, linearize
from solver.newton import newton_solve
from solver.petviashvili import petviashvili
from sparsifier.preconditioner import apply_preconditioner, build_preconditioner
from spectral.grids import Field, build_grid, participation_ratio, power

from .cli import run_command
from .config import ConfigError, parse_config
from .outputs import CURVE_FILENAME, curve_csv, emit_outputs, read_field, write_field
from .serializers import RunConfigSerializer
from .presets import (
    KERR_DEFOCUSING_HALF,
    KERR_FOCUSING,
    PRESETS,
    SATURABLE_DEFOCUSING_HALF,
    SATURABLE_FOCUSING,
    SECH_1D,
    describe_presets,
    get_preset,
)


def sech_document(out_dir, **overrides):
    """A 1-D cubic run small enough for the test suite."""
    document = {
        "model": {"kind": "cubic", "coefficient": 2.0, "kinetic_factor": 1.0},
        "grid": {"d": 1, "n": 256, "box_len": 30.0},
        "plan": {
            "paths": [{"label": "down", "lambdas": [-1.0, -1.25]}],
            "seed": {"kind": "gaussian", "sigma": 1.0, "target_power": 2.0},
        },
        "output": {"directory": str(out_dir)},
    }
    document.update(overrides)
    return document


def point(lambda_, power_, converged=True):
    return CurvePoint(
        path="up",
        lambda_=lambda_,
        power=power_,
        newton_iters=4,
        mean_gmres_iters=7.25,
        converged=converged,
        participation_ratio=1.0,
        failure=None if converged else "max_newton",
    )


# ---------------------------
# Presets and config documents
# ---------------------------
class PresetTests(SimpleTestCase):
    def test_every_preset_is_a_valid_config(self):
        for name in PRESETS:
            with self.subTest(preset=name):
                config = parse_config(json.dumps({"preset": name}))
                self.assertEqual(config.preset, name)

    def test_kerr_focusing_preset(self):
        config = parse_config(json.dumps({"preset": KERR_FOCUSING}))
        self.assertEqual(config.model, KerrModel(V0=28.8, sigma=1, kinetic_factor=0.5))
        self.assertEqual((config.grid.d, config.grid.n, config.grid.box_len), (2, 192, 32.0))
        lambdas = config.plan.paths[0].lambda_values
        self.assertEqual((lambdas[0], lambdas[-1]), (0.0, 11.7498))
        self.assertLessEqual(np.max(np.abs(np.diff(lambdas))), 0.25)
        self.assertAlmostEqual(power(config.plan.seed_field(config.grid)), 4.0, places=12)

    def test_descriptions_leave_the_document_alone(self):
        self.assertNotIn("description", get_preset(SECH_1D))
        self.assertIn("description", PRESETS[SECH_1D])
        self.assertEqual([entry["name"] for entry in describe_presets()], sorted(PRESETS))


class ParseConfigTests(SimpleTestCase):
    def test_empty_document_names_the_missing_sections(self):
        with self.assertRaises(ConfigError) as raised:
            parse_config("")
        message = str(raised.exception)
        for section in ("model", "grid", "plan"):
            self.assertIn(f"{section}: ", message)

    def test_invalid_kerr_sigma(self):
        document = sech_document("out", model={"kind": "kerr", "V0": 28.8, "sigma": 0})
        with self.assertRaises(ConfigError) as raised:
            parse_config(json.dumps(document))
        self.assertIn("model.sigma:", str(raised.exception))
        self.assertIn("sigma", raised.exception.errors["model"])

    def test_unknown_keys_are_rejected(self):
        document = sech_document("out")
        document["grid"]["spacing"] = 0.1
        with self.assertRaises(ConfigError) as raised:
            parse_config(json.dumps(document))
        self.assertIn("grid.spacing: Unknown key.", str(raised.exception))

    def test_non_finite_numbers_are_rejected(self):
        text = json.dumps(sech_document("out")).replace('"box_len": 30.0', '"box_len": NaN')
        with self.assertRaises(ConfigError) as raised:
            parse_config(text)
        self.assertIn("grid.box_len", str(raised.exception))

    def test_malformed_json(self):
        with self.assertRaises(ConfigError):
            parse_config("{")
        with self.assertRaises(ConfigError):
            parse_config("[]")

    def test_unknown_preset(self):
        with self.assertRaises(ConfigError) as raised:
            parse_config('{"preset": "kerr-sideways"}')
        self.assertIn("preset: Unknown preset 'kerr-sideways'", str(raised.exception))

    def test_document_overrides_its_preset(self):
        config = parse_config(json.dumps({"preset": KERR_FOCUSING, "grid": {"n": 96}, "solver": {"res_tol": 1e-9}}))
        self.assertEqual((config.grid.n, config.grid.box_len), (96, 32.0))
        self.assertEqual(config.options.res_tol, 1e-9)
        self.assertEqual(config.model.V0, 28.8)

    def test_path_errors_carry_their_index(self):
        document = sech_document("out")
        document["plan"]["paths"].append({"start": 0.0, "stop": 1.0, "step": 0.0})
        with self.assertRaises(ConfigError) as raised:
            parse_config(json.dumps(document))
        self.assertIn("plan.paths[1].step:", str(raised.exception))

    def test_path_labels_must_be_unique_and_file_safe(self):
        paths = [{"label": "up", "lambdas": [-1.0]}, {"label": "up", "lambdas": [-1.5]}]
        with self.assertRaises(ConfigError) as raised:
            parse_config(json.dumps(sech_document("out", plan={"paths": paths})))
        self.assertIn("plan.paths:", str(raised.exception))
        paths = [{"label": "../up", "lambdas": [-1.0]}]
        with self.assertRaises(ConfigError) as raised:
            parse_config(json.dumps(sech_document("out", plan={"paths": paths})))
        self.assertIn("label", str(raised.exception))

    def test_run_config_serializer_docstring_is_clean(self):
        doc = RunConfigSerializer.__doc__
        self.assertTrue(doc.strip().startswith("Validates a complete run-config document."))
        self.assertNotIn('"', doc)

    def test_defaults_are_filled_in(self):
        config = parse_config(json.dumps(sech_document("out")))
        self.assertEqual(config.options.max_newton, 50)
        self.assertEqual(config.options.krylov.restart, 40)
        self.assertIsNone(config.plan.dump_lambdas)
        self.assertEqual(config.output_dir, Path("out"))

    @override_settings(SOLITONS={**settings.SOLITONS, "STENCIL_B": 2, "ORDERING": "colamd", "OUTPUT_DIR": "elsewhere"})
    def test_solver_defaults_come_from_settings(self):
        document = sech_document("out")
        del document["output"]
        config = parse_config(json.dumps(document))
        self.assertEqual(config.options.stencil_b, 2)
        self.assertEqual(config.options.ordering, "colamd")
        self.assertEqual(config.output_dir, Path("elsewhere"))


# ---------------------------
# Result files
# ---------------------------
class OutputTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out_dir = Path(self.tmp.name)

    def test_empty_curve_is_just_the_header(self):
        self.assertEqual(curve_csv(CurveResult()), "lambda,power,newton_iters,mean_gmres_iters,converged\n")

    def test_rows_follow_the_points_in_order(self):
        result = CurveResult(points=(point(0.0, 4.0), point(0.25, 0.1), point(0.5, 4.5, converged=False)))
        lines = curve_csv(result).splitlines()
        self.assertEqual(
            lines[1:],
            ["0,4,4,7.25,true", "0.25,0.10000000000000001,4,7.25,true", "0.5,4.5,4,7.25,false"],
        )
        self.assertEqual(curve_csv(result), curve_csv(result))

    def test_field_round_trip_is_bitwise(self):
        grid = build_grid(2, 16, 8.0)
        field = Field(grid, np.random.default_rng(31).standard_normal(grid.shape))
        data_path = write_field(field, 0.1, self.out_dir, KerrModel(V0=28.8, sigma=1))
        self.assertEqual(data_path.name, "field_0.1.f64")
        self.assertEqual(data_path.stat().st_size, 8 * 256)
        for source in (data_path, data_path.with_name("field_0.1.meta"), self.out_dir / "field_0.1"):
            with self.subTest(source=source.name):
                restored, meta = read_field(source)
                np.testing.assert_array_equal(restored.values, field.values)
                self.assertEqual(restored.grid, grid)
        self.assertEqual(meta["lambda"], 0.1)
        self.assertEqual(meta["model"]["kind"], "kerr")
        self.assertEqual(meta["power"], power(field))

    def test_emit_outputs_writes_curve_and_fields(self):
        grid = build_grid(1, 8, 2.0)
        result = CurveResult(
            points=(point(-1.0, 2.0), point(-2.0, 2.8)),
            fields={("up", -2.0): Field(grid, np.ones(8)), ("up", -1.0): Field(grid, np.zeros(8))},
        )
        written = emit_outputs(result, self.out_dir)
        self.assertEqual([path.name for path in written], [CURVE_FILENAME, "field_-2.0.f64", "field_-1.0.f64"])
        self.assertEqual((self.out_dir / CURVE_FILENAME).read_text(), curve_csv(result))
        self.assertEqual(sorted(p.name for p in self.out_dir.iterdir() if p.name.startswith(".")), [])

    def test_lambda_shared_by_two_paths_names_both_dumps(self):
        grid = build_grid(1, 8, 2.0)
        result = CurveResult(
            points=(point(16.0, 1.0), point(15.875, 1.1), point(16.0, 1.0), point(16.125, 0.9)),
            fields={
                ("down", 16.0): Field(grid, np.ones(8)),
                ("down", 15.875): Field(grid, np.ones(8)),
                ("up", 16.0): Field(grid, np.full(8, 2.0)),
            },
        )
        written = emit_outputs(result, self.out_dir)
        self.assertEqual(
            [path.name for path in written],
            [CURVE_FILENAME, "field_15.875.f64", "field_down_16.0.f64", "field_up_16.0.f64"],
        )
        restored, _ = read_field(self.out_dir / "field_up_16.0.f64")
        np.testing.assert_array_equal(restored.values, 2.0)

    def test_dumped_field_seeds_a_later_run(self):
        grid = build_grid(1, 256, 30.0)
        x = grid.coordinates()[0]
        field = Field(grid, 1.0 / np.cosh(x))
        data_path = write_field(field, -1.0, self.out_dir)
        document = sech_document(self.out_dir)
        document["plan"]["seed"] = {"kind": "file", "path": str(data_path)}
        config = parse_config(json.dumps(document))
        self.assertEqual(power(config.plan.seed_field(config.grid)), power(field))

        document["grid"]["n"] = 128
        with self.assertRaises(ConfigError) as raised:
            parse_config(json.dumps(document))
        self.assertIn("plan.seed.path:", str(raised.exception))


# ---------------------------
# manage.py solitons
# ---------------------------
class CommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out_dir = Path(self.tmp.name) / "results"
        self.stdout, self.stderr = io.StringIO(), io.StringIO()

    def write_config(self, document):
        path = Path(self.tmp.name) / "run.json"
        path.write_text(json.dumps(document))
        return str(path)

    def run_solitons(self, *argv):
        return run_command(list(argv), stdout=self.stdout, stderr=self.stderr)

    def test_presets_are_listed(self):
        self.assertEqual(self.run_solitons("presets"), 0)
        for name in PRESETS:
            self.assertIn(name, self.stdout.getvalue())

    def test_sweep_writes_the_curve_and_end_fields(self):
        config = self.write_config(sech_document(self.out_dir))
        self.assertEqual(self.run_solitons("sweep", "--config", config), 0)
        rows = (self.out_dir / CURVE_FILENAME).read_text().splitlines()
        self.assertEqual(len(rows), 3)
        self.assertTrue(all(row.endswith(",true") for row in rows[1:]))
        self.assertTrue((self.out_dir / "field_-1.0.f64").exists())
        self.assertTrue((self.out_dir / "field_-1.25.meta").exists())
        self.assertIn("lambda=-1.25", self.stderr.getvalue())

    def test_out_flag_overrides_the_config_directory(self):
        config = self.write_config(sech_document(self.out_dir))
        elsewhere = Path(self.tmp.name) / "elsewhere"
        self.assertEqual(self.run_solitons("solve", "--config", config, "--lambda", "-1", "--out", str(elsewhere)), 0)
        self.assertTrue((elsewhere / "field_-1.0.f64").exists())
        self.assertFalse(self.out_dir.exists())
        self.assertIn("Converged at lambda=-1", self.stdout.getvalue())

    def test_fixed_norm_reports_lambda(self):
        config = self.write_config(sech_document(self.out_dir))
        self.assertEqual(self.run_solitons("fixed-norm", "--config", config, "--norm", "1.4142135623730951"), 0)
        _, meta = read_field(next(self.out_dir.glob("field_*.f64")))
        self.assertAlmostEqual(meta["lambda"], -1.0, delta=1e-5)

    def test_non_convergence_exits_with_one(self):
        config = self.write_config(sech_document(self.out_dir, solver={"max_newton": 0}))
        self.assertEqual(self.run_solitons("sweep", "--config", config), 1)
        self.assertIn("Sweep incomplete", self.stderr.getvalue())
        self.assertEqual(len((self.out_dir / CURVE_FILENAME).read_text().splitlines()), 2)

    def test_petviashvili_iteration_cap_exits_with_one(self):
        config = self.write_config(sech_document(self.out_dir))
        self.assertEqual(self.run_solitons("petviashvili", "--config", config, "--max-iters", "1"), 1)
        self.assertFalse(self.out_dir.exists())

    def test_usage_errors_exit_with_two(self):
        self.assertEqual(self.run_solitons("sweep", "--preset", "kerr-sideways"), 2)
        self.assertIn("Unknown preset", self.stderr.getvalue())
        self.assertEqual(self.run_solitons("solve", "--config", str(Path(self.tmp.name) / "missing.json")), 2)
        self.assertEqual(self.run_solitons("petviashvili", "--preset", "saturable-focusing"), 2)
        config = self.write_config(sech_document(self.out_dir))
        self.assertEqual(self.run_solitons("fixed-norm", "--config", config, "--norm", "-1"), 2)


# ---------------------------
# API
# ---------------------------
class PresetApiTests(APISimpleTestCase):
    def test_list(self):
        response = self.client.get(reverse("runs:preset-list"))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual([entry["name"] for entry in response.data], sorted(PRESETS))

    def test_detail(self):
        response = self.client.get(reverse("runs:preset-detail", kwargs={"name": SECH_1D}))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data["config"], get_preset(SECH_1D))

    def test_unknown_preset_is_404(self):
        response = self.client.get(reverse("runs:preset-detail", kwargs={"name": "kerr-sideways"}))
        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)


class ConfigValidateApiTests(APISimpleTestCase):
    url = "/runs/config/validate/"

    def test_valid_document_is_echoed_with_defaults(self):
        response = self.client.post(self.url, {"preset": SECH_1D, "grid": {"n": 256}}, format="json")
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        config = response.data["config"]
        self.assertEqual(config["grid"]["n"], 256)
        self.assertEqual(config["solver"]["damping"], "backtracking")
        self.assertEqual(config["krylov"]["restart"], 40)

    def test_invalid_document_is_400(self):
        response = self.client.post(
            self.url, {"preset": SECH_1D, "grid": {"n": 7}, "solver": {"tolerance": 1}}, format="json"
        )
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn("grid", response.data)
        self.assertIn("tolerance", response.data["solver"])

    def test_unknown_preset_is_400(self):
        response = self.client.post(self.url, {"preset": "kerr-sideways"}, format="json")
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn("preset", response.data)

    def test_body_must_be_an_object(self):
        response = self.client.post(self.url, [1, 2], format="json")
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)


# ---------------------------
# Full-size reproductions (SOLITONS_EXTENDED_TESTS=True)
# ---------------------------
@unittest.skipUnless(settings.SOLITONS["EXTENDED_TESTS"], "set SOLITONS_EXTENDED_TESTS=True to run")
class PresetReproductionTests(SimpleTestCase):
    def sweep_preset(self, name):
        config = parse_config(json.dumps({"preset": name}))
        result = sweep(config.model, config.grid, config.plan, config.options)
        self.assertTrue(result.converged, result.failed_paths)
        for label in dict.fromkeys(curve_point.path for curve_point in result.points):
            path_points = result.for_path(label)
            # first points start from the Gaussian seed, later ones are warm-started
            for curve_point in path_points[1:]:
                self.assertLessEqual(curve_point.newton_iters, 15)
            for curve_point in path_points:
                self.assertGreater(curve_point.power, 1e-6)
                self.assertLessEqual(curve_point.mean_gmres_iters, 60)
        return config, result

    def test_kerr_focusing_path_to_the_band_edge(self):
        _, result = self.sweep_preset(KERR_FOCUSING)
        powers = [curve_point.power for curve_point in result.points]
        self.assertGreater(powers[-1], powers[-2])
        fields = [result.fields[key] for key in sorted(result.fields, key=lambda key: key[1])]
        self.assertGreater(participation_ratio(fields[-1]), 5 * participation_ratio(fields[0]))

    def test_petviashvili_fails_in_the_gap_where_newton_converges(self):
        config = parse_config(json.dumps({"preset": KERR_FOCUSING}))
        path = ContinuationPath(tuple(lambda_path(0.0, 6.0, 0.25)), label="up")
        plan = SweepPlan(paths=(path,), seed=config.plan.seed)
        result = sweep(config.model, config.grid, plan, config.options)
        self.assertTrue(result.converged, result.failed_paths)
        _, report = petviashvili(config.model, config.grid, 6.0, config.plan.seed_field(config.grid), max_iters=500)
        self.assertFalse(report.converged)

    def test_remaining_presets_at_desk_scale(self):
        for name in (SATURABLE_FOCUSING, KERR_DEFOCUSING_HALF, SATURABLE_DEFOCUSING_HALF):
            with self.subTest(preset=name):
                self.sweep_preset(name)

    def test_preconditioner_cost_at_192(self):
        config = parse_config(json.dumps({"preset": KERR_FOCUSING}))
        u = config.plan.seed_field(config.grid)
        state = build_preconditioner(linearize(config.model, config.grid, u, 0.0))
        self.assertLessEqual(state.stats.setup_seconds, 60.0)
        self.assertLessEqual(state.stats.fill, 50.0)
        started = time.perf_counter()
        apply_preconditioner(state, u)
        self.assertLessEqual(time.perf_counter() - started, 0.5)


class KerrFocusingSeedTests(SimpleTestCase):
    """The kerr-focusing model and seed on a quarter of the preset box, at the preset spacing."""

    def setUp(self):
        document = {"preset": KERR_FOCUSING, "grid": {"n": 96, "box_len": 16.0}}
        self.config = parse_config(json.dumps(document))
        self.seed = self.config.plan.seed_field(self.config.grid)

    def test_seed_reaches_the_localized_soliton(self):
        config = self.config
        u, report = newton_solve(config.model, config.grid, 0.0, self.seed, config.options)
        self.assertTrue(report.converged, report.failure)
        self.assertGreater(power(u), 1.0)
        self.assertLess(participation_ratio(u), 0.25 * config.grid.box_len**2)

    def test_petviashvili_fails_inside_the_gap(self):
        _, report = petviashvili(self.config.model, self.config.grid, 6.0, self.seed, max_iters=500)
        self.assertFalse(report.converged)
        self.assertIsNotNone(report.failure)


class SechPresetTests(SimpleTestCase):
    def test_preset_follows_the_sech_family(self):
        config = parse_config(json.dumps({"preset": SECH_1D}))
        self.assertEqual(config.model, CubicModel(coefficient=2.0, kinetic_factor=1.0))
        result = sweep(config.model, config.grid, config.plan, config.options)
        self.assertTrue(result.converged)
        for curve_point in result.points:
            self.assertAlmostEqual(curve_point.power, 2.0 * np.sqrt(-curve_point.lambda_), delta=1e-6)
