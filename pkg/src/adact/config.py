"""Experiment configuration documents for the command-line front end."""
from __future__ import annotations

import json
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .activations import REFERENCE_KINDS
from .trainers import TRAINERS, TrainConfig


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SineParams(_Strict):
    n_train: int = Field(5000, ge=1)
    n_test: int = Field(100, ge=1)
    seed: int = 0


class RosenbrockParams(_Strict):
    n_train: int = Field(1000, ge=1)
    n_test: int = Field(500, ge=1)
    seed: int = 0
    low: float = -2.0
    high: float = 2.0


class CsvParams(_Strict):
    path: str
    test_path: str | None = None
    n_inputs: int = Field(ge=1)
    n_outputs: int = Field(1, ge=1)
    kind: Literal["approximation", "classification"] = "approximation"


class SineSource(_Strict):
    source: Literal["gen_sine"]
    params: SineParams = SineParams()


class RosenbrockSource(_Strict):
    source: Literal["gen_rosenbrock"]
    params: RosenbrockParams = RosenbrockParams()


class CsvSource(_Strict):
    source: Literal["csv"]
    params: CsvParams


DataSection = Annotated[Union[SineSource, RosenbrockSource, CsvSource], Field(discriminator="source")]


class ModelSection(_Strict):
    N_h: int = Field(10, ge=1)
    H: int = Field(20, ge=2)
    init_activation: Literal[REFERENCE_KINDS] = "sigmoid"
    leaky_slope: float = 0.01
    range_margin: float = Field(0.05, ge=0)
    weight_sigma: float = Field(1.0, ge=0)


class TrainSection(_Strict):
    trainer: Literal[TRAINERS] = "adact"
    N_it: int = Field(100, ge=1)
    seed: int = 0
    optimizer_for_acts: Literal["olf", "adam"] = "olf"
    adam_lr: float = Field(0.01, gt=0)
    clamp_budget: float = Field(0.0, ge=0, le=1)
    baseline_activation: Literal["fixed", "pla"] = "fixed"


class EvalSection(_Strict):
    k_folds: int = Field(10, ge=2)


class OutputSection(_Strict):
    directory: str = "out"


class ExperimentConfig(_Strict):
    data: DataSection
    model: ModelSection = ModelSection()
    train: TrainSection = TrainSection()
    eval: EvalSection = EvalSection()
    output: OutputSection = OutputSection()

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            trainer=self.train.trainer,
            n_iter=self.train.N_it,
            n_hidden=self.model.N_h,
            n_hinges=self.model.H,
            init_activation=self.model.init_activation,
            act_optimizer=self.train.optimizer_for_acts,
            adam_lr=self.train.adam_lr,
            seed=self.train.seed,
            weight_sigma=self.model.weight_sigma,
            range_margin=self.model.range_margin,
            leaky_slope=self.model.leaky_slope,
            clamp_budget=self.train.clamp_budget,
            baseline_activation=self.train.baseline_activation,
        )


class ConfigError(ValueError):
    pass


def _describe(err: ValidationError):
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "\n".join(lines)


def parse_config(doc) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from None


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(doc)
