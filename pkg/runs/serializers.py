# runs/serializers.py

import math
from dataclasses import dataclass
from pathlib import Path

from django.conf import settings
from rest_framework import serializers

from continuation.seeds import GaussianSeed, SeedError
from continuation.sweeps import ContinuationPath, PlanError, SweepPlan, lambda_path
from krylov.gmres import KrylovOptions
from physics.nonlinearities import (
    CUBIC,
    DEFAULT_KINETIC_FACTOR,
    KERR,
    KIND_CHOICES,
    SATURABLE,
    CubicModel,
    KerrModel,
    Model,
    SaturableModel,
)
from solver.newton import DAMPING_BACKTRACKING, DAMPING_CHOICES, NewtonOptions
from sparsifier.factorization import ORDERING_CHOICES
from spectral.grids import SUPPORTED_DIMENSIONS, Grid, GridError, build_grid

from .outputs import OutputError, read_field
from .presets import PRESETS

SEED_GAUSSIAN = "gaussian"
SEED_FILE = "file"

SEED_CHOICES = [
    (SEED_GAUSSIAN, "Gaussian of prescribed power"),
    (SEED_FILE, "Field dump written by a previous run"),
]


# ---------------------------
# Base classes
# ---------------------------
class StrictSerializer(serializers.Serializer):
    """Rejects keys it does not declare, naming each of them."""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["Unknown key."] for key in unknown})
        return super().to_internal_value(data)


class FiniteFloatField(serializers.FloatField):
    default_error_messages = {"not_finite": "A finite number is required."}

    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if not math.isfinite(value):
            self.fail("not_finite")
        return value


# ---------------------------
# Physics and discretization
# ---------------------------
class PhysicsModelSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=KIND_CHOICES)
    V0 = FiniteFloatField(required=False)
    sigma = serializers.IntegerField(required=False)
    A = FiniteFloatField(default=1.0)
    coefficient = FiniteFloatField(default=1.0)
    kinetic_factor = FiniteFloatField(default=DEFAULT_KINETIC_FACTOR)

    def validate_kinetic_factor(self, value):
        if value <= 0:
            raise serializers.ValidationError("kinetic_factor must be positive.")
        return value

    def validate(self, attrs):
        kind = attrs["kind"]
        if kind in (KERR, SATURABLE) and "V0" not in attrs:
            raise serializers.ValidationError({"V0": [f"Required for {kind} models."]})
        if kind == KERR:
            if "sigma" not in attrs:
                raise serializers.ValidationError({"sigma": ["Required for kerr models."]})
            if attrs["sigma"] not in (1, -1):
                raise serializers.ValidationError({"sigma": ["Kerr sigma must be +1 or -1."]})
        return attrs

    def build(self, attrs):
        kind = attrs["kind"]
        if kind == KERR:
            return KerrModel(V0=attrs["V0"], sigma=attrs["sigma"], kinetic_factor=attrs["kinetic_factor"])
        if kind == SATURABLE:
            return SaturableModel(V0=attrs["V0"], A=attrs["A"], kinetic_factor=attrs["kinetic_factor"])
        if kind == CUBIC:
            return CubicModel(coefficient=attrs["coefficient"], kinetic_factor=attrs["kinetic_factor"])
        raise serializers.ValidationError({"kind": [f"Unsupported model kind '{kind}'."]})


class GridSerializer(StrictSerializer):
    d = serializers.ChoiceField(choices=SUPPORTED_DIMENSIONS)
    n = serializers.IntegerField(min_value=4)
    box_len = FiniteFloatField()
    centered = serializers.BooleanField(default=True)

    def validate(self, attrs):
        try:
            build_grid(attrs["d"], attrs["n"], attrs["box_len"], attrs["centered"])
        except GridError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs

    def build(self, attrs):
        return build_grid(attrs["d"], attrs["n"], attrs["box_len"], attrs["centered"])


# ---------------------------
# Solver knobs
# ---------------------------
class KrylovSerializer(StrictSerializer):
    rel_tol = FiniteFloatField(default=1e-10)
    restart = serializers.IntegerField(default=40, min_value=1)
    max_iters = serializers.IntegerField(default=200, min_value=0)

    def validate_rel_tol(self, value):
        if not 0.0 < value < 1.0:
            raise serializers.ValidationError("rel_tol must lie in (0, 1).")
        return value


class SolverSerializer(StrictSerializer):
    res_tol = FiniteFloatField(default=1e-8)
    max_newton = serializers.IntegerField(default=50, min_value=0)
    damping = serializers.ChoiceField(choices=DAMPING_CHOICES, default=DAMPING_BACKTRACKING)
    max_halvings = serializers.IntegerField(default=8, min_value=0)
    stencil_b = serializers.IntegerField(default=lambda: settings.SOLITONS["STENCIL_B"], min_value=0)
    stencil_w = serializers.IntegerField(default=lambda: settings.SOLITONS["STENCIL_W"], min_value=1)
    ordering = serializers.ChoiceField(choices=ORDERING_CHOICES, default=lambda: settings.SOLITONS["ORDERING"])

    def validate_res_tol(self, value):
        if value <= 0:
            raise serializers.ValidationError("res_tol must be positive.")
        return value


# ---------------------------
# Continuation plan
# ---------------------------
class PathSerializer(StrictSerializer):
    label = serializers.RegexField(
        r"^[A-Za-z0-9_-]+$", default="path", error_messages={"invalid": "Use letters, digits, '-' and '_' only."}
    )
    lambdas = serializers.ListField(child=FiniteFloatField(), required=False, allow_empty=False)
    start = FiniteFloatField(required=False)
    stop = FiniteFloatField(required=False)
    step = FiniteFloatField(required=False)

    def validate(self, attrs):
        ranged = [key for key in ("start", "stop", "step") if key in attrs]
        if "lambdas" in attrs:
            if ranged:
                raise serializers.ValidationError("Give either 'lambdas' or 'start'/'stop'/'step', not both.")
            values = attrs["lambdas"]
        elif len(ranged) == 3:
            try:
                values = lambda_path(attrs["start"], attrs["stop"], attrs["step"])
            except PlanError as exc:
                raise serializers.ValidationError({"step": [str(exc)]})
        else:
            raise serializers.ValidationError("A path needs 'lambdas' or all of 'start', 'stop' and 'step'.")
        try:
            attrs["path"] = ContinuationPath(tuple(values), label=attrs["label"])
        except PlanError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs


class SeedSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=SEED_CHOICES, default=SEED_GAUSSIAN)
    sigma = FiniteFloatField(default=1.0)
    target_power = FiniteFloatField(default=4.0)
    path = serializers.CharField(required=False)

    def validate(self, attrs):
        if attrs["kind"] == SEED_FILE and "path" not in attrs:
            raise serializers.ValidationError({"path": ["Required for file seeds."]})
        if attrs["kind"] == SEED_GAUSSIAN:
            try:
                GaussianSeed(attrs["sigma"], attrs["target_power"])
            except SeedError as exc:
                raise serializers.ValidationError(str(exc))
        return attrs


class PlanSerializer(StrictSerializer):
    paths = PathSerializer(many=True, allow_empty=False)
    seed = SeedSerializer(required=False)
    auto_refine = serializers.BooleanField(default=False)

    def validate_paths(self, value):
        labels = [path["label"] for path in value]
        if len(set(labels)) != len(labels):
            raise serializers.ValidationError("Path labels must be unique.")
        return value


class OutputSerializer(StrictSerializer):
    directory = serializers.CharField(default=lambda: settings.SOLITONS["OUTPUT_DIR"])
    dump_lambdas = serializers.ListField(child=FiniteFloatField(), allow_null=True, default=None)


# ---------------------------
# Whole run configuration
# ---------------------------
@dataclass(frozen=True, eq=False)
class RunConfig:
    """Everything a run needs, built from a validated config document."""

    model: Model
    grid: Grid
    options: NewtonOptions
    plan: SweepPlan
    output_dir: Path
    preset: str | None = None


class RunConfigSerializer(StrictSerializer):
    """
    Validates a complete run-config document. Optional sections that are
    absent get their defaults, so validated_data always holds every section.
    """

    OPTIONAL_SECTIONS = {
        "solver": SolverSerializer,
        "krylov": KrylovSerializer,
        "output": OutputSerializer,
    }

    preset = serializers.CharField(required=False)
    model = PhysicsModelSerializer()
    grid = GridSerializer()
    plan = PlanSerializer()
    solver = SolverSerializer(required=False)
    krylov = KrylovSerializer(required=False)
    output = OutputSerializer(required=False)

    def validate_preset(self, value):
        if value not in PRESETS:
            raise serializers.ValidationError(f"Unknown preset '{value}'. Available: {', '.join(sorted(PRESETS))}.")
        return value

    def validate(self, attrs):
        for name, serializer_class in self.OPTIONAL_SECTIONS.items():
            if name not in attrs:
                section = serializer_class(data={})
                section.is_valid(raise_exception=True)
                attrs[name] = section.validated_data
        if "seed" not in attrs["plan"]:
            seed = SeedSerializer(data={})
            seed.is_valid(raise_exception=True)
            attrs["plan"]["seed"] = seed.validated_data
        return attrs

    def build(self):
        """Turn validated data into solver objects (a RunConfig)."""
        data = self.validated_data
        model = self.fields["model"].build(data["model"])
        grid = self.fields["grid"].build(data["grid"])
        solver, krylov = data["solver"], data["krylov"]
        options = NewtonOptions(
            res_tol=solver["res_tol"],
            max_newton=solver["max_newton"],
            damping=solver["damping"],
            max_halvings=solver["max_halvings"],
            krylov=KrylovOptions(
                rel_tol=krylov["rel_tol"], restart=krylov["restart"], max_iters=krylov["max_iters"]
            ),
            stencil_b=solver["stencil_b"],
            stencil_w=solver["stencil_w"],
            ordering=solver["ordering"],
        )
        output = data["output"]
        dump_lambdas = output.get("dump_lambdas")
        plan = SweepPlan(
            paths=tuple(path["path"] for path in data["plan"]["paths"]),
            seed=self._build_seed(data["plan"]["seed"], grid),
            auto_refine=data["plan"]["auto_refine"],
            dump_lambdas=None if dump_lambdas is None else tuple(dump_lambdas),
        )
        return RunConfig(
            model=model,
            grid=grid,
            options=options,
            plan=plan,
            output_dir=Path(output["directory"]),
            preset=data.get("preset"),
        )

    def _build_seed(self, seed, grid):
        if seed["kind"] == SEED_GAUSSIAN:
            return GaussianSeed(sigma=seed["sigma"], target_power=seed["target_power"])
        try:
            field, _ = read_field(seed["path"])
        except (OutputError, ValueError) as exc:
            raise serializers.ValidationError({"plan": {"seed": {"path": [str(exc)]}}})
        if field.grid != grid:
            raise serializers.ValidationError(
                {"plan": {"seed": {"path": [f"Seed lives on {field.grid}, the run uses {grid}."]}}}
            )
        return field
