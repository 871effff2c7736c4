"""Pipeline configuration: TOML file -> validated PipelineConfig.

The schema (all keys optional, defaults shown) is documented in
docs/config.md and mirrored by DEFAULTS below. Section overview:

  run_seed, store_path, runs_dir      top-level run identity and layout
  [backend]                           llm/embed/generate/aesthetic bindings,
                                      each "mock" or "http"
  [backend.<role>_http]               url, api_key_env, timeout_ms (+
                                      model_tag, dimension for embed)
  [backend.embed_mock]                dimension
  [backend.generate_mock]             defect_flags, perturb_product, always_fail
  [retrieval]                         tau_p, product_limit, background_k
  [plan]                              slots, rotations_deg, scale_bounds,
                                      vertical_anchor, canvas_size
  [generation]                        seeds_per_variant
  [quality]                           mode, patterns, k, aesthetic_threshold,
                                      alpha, beta, use_clip_filter,
                                      clip_threshold, clip_weight
  [evaluation]                        msssim_scales
"""

from __future__ import annotations

import copy
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .quality import DEFAULT_PATTERNS, SelectionPolicy


class ConfigError(Exception):
    pass


DEFAULTS = {
    "run_seed": 0,
    "store_path": "assets.cpst",
    "runs_dir": "runs",
    "backend": {
        "llm": "mock",
        "embed": "mock",
        "generate": "mock",
        "aesthetic": "mock",
        "embed_mock": {"dimension": 64},
        "generate_mock": {
            "defect_flags": [],
            "perturb_product": 0.0,
            "always_fail": False,
        },
    },
    "retrieval": {"tau_p": 0.39, "product_limit": 5, "background_k": 5},
    "plan": {
        "slots": ["left", "center", "right"],
        "rotations_deg": [0, 15, 345],
        "scale_bounds": [0.1, 0.8],
        "vertical_anchor": 0.85,
        "canvas_size": [1024, 1024],
    },
    "generation": {"seeds_per_variant": 1},
    "quality": {
        "mode": "hierarchical",
        "patterns": [list(p) for p in DEFAULT_PATTERNS],
        "k": 4,
        "aesthetic_threshold": 5.0,
        "alpha": 0.5,
        "beta": 0.5,
        "use_clip_filter": False,
        "clip_threshold": 0.5,
        "clip_weight": 2.5,
    },
    "evaluation": {"msssim_scales": 5},
}

_BACKEND_ROLES = ("llm", "embed", "generate", "aesthetic")


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value, f"{path}{key}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class PipelineConfig:
    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    # ------------------------------------------------------------- loading

    @classmethod
    def from_dict(cls, overrides: dict) -> "PipelineConfig":
        config = cls(_merge(DEFAULTS, overrides))
        config.validate()
        return config

    @classmethod
    def from_toml(cls, path) -> "PipelineConfig":
        with open(path, "rb") as fh:
            try:
                overrides = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"cannot parse {path}: {exc}") from exc
        return cls.from_dict(overrides)

    def snapshot(self) -> dict:
        """Deep copy suitable for embedding in a run manifest."""
        return copy.deepcopy(self.data)

    def canonical_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    # ------------------------------------------------------------ accessors

    @property
    def run_seed(self) -> int:
        return int(self.data["run_seed"])

    @property
    def store_path(self) -> Path:
        return Path(self.data["store_path"])

    @property
    def runs_dir(self) -> Path:
        return Path(self.data["runs_dir"])

    @property
    def retrieval(self) -> dict:
        return self.data["retrieval"]

    @property
    def plan(self) -> dict:
        return self.data["plan"]

    @property
    def generation(self) -> dict:
        return self.data["generation"]

    @property
    def evaluation(self) -> dict:
        return self.data["evaluation"]

    def selection_policy(self) -> SelectionPolicy:
        q = self.data["quality"]
        return SelectionPolicy(
            mode=q["mode"],
            patterns=tuple(tuple(p) for p in q["patterns"]),
            k=q["k"],
            aesthetic_threshold=q["aesthetic_threshold"],
            alpha=q["alpha"],
            beta=q["beta"],
            use_clip_filter=q["use_clip_filter"],
            clip_threshold=q["clip_threshold"],
            clip_weight=q["clip_weight"],
        )

    # ----------------------------------------------------------- validation

    def validate(self) -> None:
        d = self.data
        errors = []
        if not isinstance(d.get("run_seed"), int) or d["run_seed"] < 0:
            errors.append("run_seed must be a non-negative integer")
        backend = d.get("backend", {})
        for role in _BACKEND_ROLES:
            binding = backend.get(role)
            if binding not in ("mock", "http"):
                errors.append(f"backend.{role} must be 'mock' or 'http', got {binding!r}")
            elif binding == "http":
                http_cfg = backend.get(f"{role}_http", {})
                if not http_cfg.get("url"):
                    errors.append(f"backend.{role}_http.url required for http binding")
        r = d.get("retrieval", {})
        if not (-1.0 <= r.get("tau_p", 0.39) <= 1.0):
            errors.append("retrieval.tau_p must lie in [-1, 1]")
        if r.get("product_limit", 1) < 1:
            errors.append("retrieval.product_limit must be positive")
        if r.get("background_k", 1) < 1:
            errors.append("retrieval.background_k must be positive")
        p = d.get("plan", {})
        bounds = p.get("scale_bounds", [0.1, 0.8])
        if len(bounds) != 2 or not (0.0 < bounds[0] <= bounds[1] <= 1.0):
            errors.append("plan.scale_bounds must be [lo, hi] with 0 < lo <= hi <= 1")
        if not (0.0 < p.get("vertical_anchor", 0.85) <= 1.0):
            errors.append("plan.vertical_anchor must lie in (0, 1]")
        size = p.get("canvas_size", [1024, 1024])
        if len(size) != 2 or any(not isinstance(v, int) or v < 16 for v in size):
            errors.append("plan.canvas_size must be two integers >= 16")
        unknown_slots = set(p.get("slots", [])) - {"left", "center", "right"}
        if unknown_slots:
            errors.append(f"plan.slots contains unknown slots {sorted(unknown_slots)}")
        if not p.get("slots"):
            errors.append("plan.slots must be non-empty")
        if not p.get("rotations_deg"):
            errors.append("plan.rotations_deg must be non-empty")
        if d.get("generation", {}).get("seeds_per_variant", 1) < 1:
            errors.append("generation.seeds_per_variant must be positive")
        scales = d.get("evaluation", {}).get("msssim_scales", 5)
        if not (1 <= scales <= 5):
            errors.append("evaluation.msssim_scales must lie in [1, 5]")
        try:
            self.selection_policy()
        except (ValueError, KeyError) as exc:
            errors.append(f"quality section invalid: {exc}")
        if errors:
            raise ConfigError("; ".join(errors))

    # ------------------------------------------------------------- backends

    def build_backends(self):
        """Instantiate the four backend roles per the [backend] section."""
        from .backends.http import (
            HttpAestheticBackend,
            HttpEmbeddingBackend,
            HttpGenerationBackend,
            HttpLLMBackend,
        )
        from .backends.mock import (
            MockAestheticBackend,
            MockEmbeddingBackend,
            MockGenerationBackend,
            MockLLMBackend,
        )

        b = self.data["backend"]

        def http_kwargs(role):
            cfg = dict(b.get(f"{role}_http", {}))
            cfg.pop("model_tag", None)
            cfg.pop("dimension", None)
            return cfg

        if b["llm"] == "mock":
            llm = MockLLMBackend()
        else:
            llm = HttpLLMBackend(**http_kwargs("llm"))
        if b["embed"] == "mock":
            embed = MockEmbeddingBackend(**b.get("embed_mock", {}))
        else:
            cfg = b.get("embed_http", {})
            embed = HttpEmbeddingBackend(
                model_tag=cfg.get("model_tag", "http-embed"),
                dimension=cfg.get("dimension", 512),
                **http_kwargs("embed"),
            )
        if b["generate"] == "mock":
            generate = MockGenerationBackend(**b.get("generate_mock", {}))
        else:
            generate = HttpGenerationBackend(**http_kwargs("generate"))
        if b["aesthetic"] == "mock":
            aesthetic = MockAestheticBackend(**b.get("aesthetic_mock", {}))
        else:
            aesthetic = HttpAestheticBackend(**http_kwargs("aesthetic"))
        return Backends(llm, embed, generate, aesthetic)


@dataclass
class Backends:
    llm: object
    embed: object
    generate: object
    aesthetic: object
