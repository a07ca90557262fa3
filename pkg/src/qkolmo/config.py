"""Resource caps and verify-suite configuration.

Caps are a validated pydantic model. The ``QKOLMO_CAPS`` environment variable raises them,
either as a JSON object or as comma separated ``name=value`` pairs::

    QKOLMO_CAPS='max_time=128,max_net_input_length=2' qkolmo halting-spaces id.qtm --n 2
"""

import json
import logging
import os
from importlib import resources
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import SpecParseError

logger = logging.getLogger(__name__)

CAPS_ENV_VAR = "QKOLMO_CAPS"
DEFAULT_VERIFY_CONFIG = "verify_default.json"


class ResourceCaps(BaseModel):
    """Hard limits for the exponential parts of the lab. Exceeding one is an explicit error."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    max_exact_input_length: int = Field(6, ge=0, description="n for exact halting kernels")
    max_net_input_length: int = Field(3, ge=0, description="n for cover/net based algorithms")
    max_time: int = Field(64, ge=1, description="simulation horizon")
    max_configurations: int = Field(500_000, ge=1, description="configurations per simulation")
    max_cover_points: int = Field(4_000_000, ge=1, description="points of a sphere cover")
    max_net_cells: int = Field(400_000, ge=1, description="cells examined by one ball test")
    max_search_work: int = Field(5_000_000, ge=1, description="candidate x vector checks in interpolation")
    max_fine_tune_levels: int = Field(24, ge=0, description="levels of the fine-tuning cascade")
    max_diagonal_source_length: int = Field(16, ge=1)
    max_general_source_length: int = Field(12, ge=1)
    max_symmetric_dimension: int = Field(256, ge=1, description="2^(l*n) for symmetric-subspace builds")

    def check(self, cap: str, value: int | float, hint: str = "") -> None:
        """Raise ResourceCapError when ``value`` exceeds the cap named ``cap``."""
        from .errors import ResourceCapError

        limit = getattr(self, cap)
        if value > limit:
            raise ResourceCapError(cap, value, limit, hint)


def parse_caps_overrides(raw: str) -> dict[str, Any]:
    """JSON object or comma separated name=value pairs."""
    raw = raw.strip()
    if not raw:
        return {}
    if raw.startswith("{"):
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as e:
            raise SpecParseError(f"{CAPS_ENV_VAR} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise SpecParseError(f"{CAPS_ENV_VAR} must be a JSON object")
        return data
    overrides: dict[str, Any] = {}
    for item in raw.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise SpecParseError(f"{CAPS_ENV_VAR} entry '{item}' is not name=value")
        name, value = item.split("=", 1)
        overrides[name.strip()] = value.strip()
    return overrides


def load_caps(overrides: dict[str, Any] | None = None, environ: dict[str, str] | None = None) -> ResourceCaps:
    """Build caps from defaults, the environment and explicit overrides (in that order)."""
    env = os.environ if environ is None else environ
    values = parse_caps_overrides(env.get(CAPS_ENV_VAR, ""))
    values.update(overrides or {})
    try:
        caps = ResourceCaps(**values)
    except ValidationError as e:
        raise SpecParseError(f"invalid resource caps: {e}") from e
    if values:
        logger.debug(f"Resource caps overridden: {sorted(values)}")
    return caps


def resolve_caps(caps: ResourceCaps | None) -> ResourceCaps:
    return caps if caps is not None else load_caps()


class VerifyConfig(BaseModel):
    """Configuration of ``qkolmo verify-suite``."""

    model_config = ConfigDict(extra="forbid")

    seed: int = 1
    machines: list[str] = Field(default_factory=lambda: ["identity", "prefix", "two_times", "qf_unreachable"])
    sources: list[str] = Field(default_factory=lambda: ["iid_skewed", "markov_frozen"])
    n_max: int = Field(3, ge=0)
    t_max: int = Field(16, ge=1)
    random_machines: int = Field(5, ge=0)
    bound_trials: int = Field(1000, ge=1)
    blind_code_trials: int = Field(1000, ge=1)
    compression_trials: int = Field(200, ge=1)
    pipeline_trials: int = Field(50, ge=1)
    approx_delta: str = "1/100"
    approx_t_max: int = Field(8, ge=1)
    run_approx: bool = True
    caps: dict[str, Any] = Field(default_factory=dict)


def load_verify_config(path: str | Path | None = None) -> VerifyConfig:
    """Load a verify-suite config file, or the packaged default when ``path`` is None."""
    try:
        if path is None:
            text = resources.files("qkolmo.data").joinpath(DEFAULT_VERIFY_CONFIG).read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise SpecParseError(f"cannot read verify config: {e}") from e
    try:
        return VerifyConfig.model_validate_json(text)
    except ValidationError as e:
        raise SpecParseError(f"invalid verify config: {e}") from e
