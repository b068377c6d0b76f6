"""Domain types for edge-caching scenarios.

A scenario couples a network description (macro BSs, small cells, mobile
nodes), a cost model for the different delivery paths, a set of contents with
request populations and deadlines, and an initial placement of content copies.
Everything here is plain data: validation reports violations instead of
raising, so partially built scenarios can be inspected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

import numpy as np


class ScenarioError(ValueError):
    """Malformed scenario input (unknown keys, wrong types, bad shapes)."""


@dataclass(frozen=True)
class CostParams:
    c_bh: float      # backhaul transfer of one copy to a small cell
    c_bs: float      # direct macro-BS push of one copy to a mobile node
    c_sc: float      # opportunistic small-cell delivery to one requester
    c_d2d: float     # opportunistic device-to-device delivery to one requester
    c_bs_ttl: float  # macro-BS delivery of one copy at the deadline

    @property
    def offloading_meaningful(self) -> bool:
        """Whether an opportunistic SC delivery beats waiting for the deadline."""
        return self.c_sc < self.c_bs_ttl


@dataclass(frozen=True)
class ContentClass:
    content_id: str
    r0_total: int          # number of requesters at creation
    ttl: float             # seconds until the deadline delivery
    creation_time: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    n_bs: int              # macro base stations
    n_sc: int              # small cells
    n_mn: int              # mobile nodes
    cache_per_sc: int      # content slots per small cell
    p_c: float             # probability a served node relays further
    mu_lambda: float       # mean pairwise meeting rate (1/s)
    cv_lambda: float = 0.0  # coefficient of variation of pairwise rates
    lambda_d: float = 0.0   # per-holder content drop rate (1/s), 0 = never


@dataclass(frozen=True)
class Placement:
    """Initial copies per content: small-cell caches and pushed mobile seeds.

    Values may be fractional (relaxed optimizer output); the simulator and
    the file writers integerize where integers are required.
    """

    h_sc0: np.ndarray
    h_mn0: np.ndarray

    def __post_init__(self):
        for name in ("h_sc0", "h_mn0"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.h_sc0.shape != self.h_mn0.shape:
            raise ScenarioError("placement arrays must have equal length")


@dataclass(frozen=True)
class EffectiveState:
    """Fluid state immediately after seeding.

    Pushed mobile seeds count as served at t=0: they leave the requester pool
    and join the holder pool only with the relaying probability p_c.
    """

    r0: float  # requesters still to serve
    h0: float  # active holders (small cells plus relaying seeds)


def effective_state(r0_total: float, h_sc0: float, h_mn0: float, p_c: float) -> EffectiveState:
    return EffectiveState(r0=r0_total - h_mn0, h0=h_sc0 + p_c * h_mn0)


@dataclass(frozen=True)
class Scenario:
    """A loaded scenario file: config, costs, contents, optional placement."""

    cfg: ScenarioConfig
    costs: CostParams
    contents: list[ContentClass]
    placement: Placement | None = None


def validate_scenario(cfg: ScenarioConfig, contents: list[ContentClass],
                      placement: Placement | None = None,
                      costs: CostParams | None = None) -> list[str]:
    """Collect constraint violations; an empty list means the scenario is sound.

    Pure and idempotent: nothing is raised and nothing is mutated.
    """
    bad = []
    if cfg.n_bs < 1:
        bad.append(f"n_bs must be >= 1, got {cfg.n_bs}")
    if cfg.n_sc < 0:
        bad.append(f"n_sc must be >= 0, got {cfg.n_sc}")
    if cfg.n_mn < 1:
        bad.append(f"n_mn must be >= 1, got {cfg.n_mn}")
    if cfg.cache_per_sc < 0:
        bad.append(f"cache_per_sc must be >= 0, got {cfg.cache_per_sc}")
    if not 0.0 <= cfg.p_c <= 1.0:
        bad.append(f"p_c must lie in [0, 1], got {cfg.p_c}")
    if cfg.mu_lambda <= 0:
        bad.append(f"mu_lambda must be positive, got {cfg.mu_lambda}")
    if cfg.cv_lambda < 0:
        bad.append(f"cv_lambda must be >= 0, got {cfg.cv_lambda}")
    if cfg.lambda_d < 0:
        bad.append(f"lambda_d must be >= 0, got {cfg.lambda_d}")
    if costs is not None:
        for f_ in fields(costs):
            if getattr(costs, f_.name) < 0:
                bad.append(f"cost {f_.name} must be >= 0, got {getattr(costs, f_.name)}")
    for c in contents:
        if c.r0_total < 1:
            bad.append(f"content {c.content_id}: r0_total must be >= 1, got {c.r0_total}")
        if c.ttl < 0:
            bad.append(f"content {c.content_id}: ttl must be >= 0, got {c.ttl}")
        if c.creation_time < 0:
            bad.append(f"content {c.content_id}: creation_time must be >= 0, got {c.creation_time}")
    if placement is not None:
        if len(placement.h_sc0) != len(contents):
            bad.append(f"placement covers {len(placement.h_sc0)} contents, scenario has {len(contents)}")
        else:
            for c, hs, hm in zip(contents, placement.h_sc0, placement.h_mn0):
                if hs < 0 or hs > cfg.n_sc:
                    bad.append(f"content {c.content_id}: h_sc0={hs} outside [0, n_sc={cfg.n_sc}]")
                if hm < 0 or hm > c.r0_total:
                    bad.append(f"content {c.content_id}: h_mn0={hm} outside [0, r0_total={c.r0_total}]")
            total = float(np.sum(placement.h_sc0))
            cache = cfg.n_sc * cfg.cache_per_sc
            if total > cache + 1e-9:
                bad.append(f"sum of h_sc0 ({total:g}) exceeds total SC cache ({cache})")
    return bad


def integerize(values, item_cap=None, total_cap=None) -> np.ndarray:
    """Round a fractional allocation to integers, preserving the rounded total.

    Round-to-nearest with largest-remainder correction: floors first, then
    hands out the remaining units by descending fractional part, never pushing
    an item above item_cap nor the sum above total_cap.
    """
    v = np.clip(np.asarray(values, dtype=float), 0.0, item_cap)
    target = int(round(float(np.sum(v))))
    if total_cap is not None:
        target = min(target, int(total_cap))
    if item_cap is not None:
        target = min(target, int(item_cap) * len(v))
    out = np.floor(v).astype(int)
    deficit = target - int(np.sum(out))
    if deficit > 0:
        order = np.argsort(-(v - np.floor(v)), kind="stable")
        for idx in list(order) + list(order):  # second pass if remainders tie out at caps
            if deficit == 0:
                break
            if item_cap is None or out[idx] + 1 <= item_cap:
                out[idx] += 1
                deficit -= 1
    return out


# --- scenario JSON files ---------------------------------------------------

_SECTION_KEYS = ("scenario", "costs", "contents", "placement")


def _take(section: dict, name: str, keys: dict):
    """Build kwargs from a JSON section, rejecting unknown keys."""
    unknown = set(section) - set(keys)
    if unknown:
        raise ScenarioError(f"unknown key {sorted(unknown)[0]!r} in section {name!r}")
    out = {}
    for k, typ in keys.items():
        if k in section:
            try:
                out[k] = typ(section[k])
            except (TypeError, ValueError) as e:
                raise ScenarioError(f"bad value for {name}.{k}: {e}") from e
    return out


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"invalid JSON in {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ScenarioError("scenario file must hold a JSON object")
    unknown = set(raw) - set(_SECTION_KEYS)
    if unknown:
        raise ScenarioError(f"unknown top-level key {sorted(unknown)[0]!r}")
    for req in ("scenario", "costs", "contents"):
        if req not in raw:
            raise ScenarioError(f"missing required section {req!r}")

    cfg = ScenarioConfig(**_take(raw["scenario"], "scenario", {
        "n_bs": int, "n_sc": int, "n_mn": int, "cache_per_sc": int,
        "p_c": float, "mu_lambda": float, "cv_lambda": float, "lambda_d": float,
    }))
    costs = CostParams(**_take(raw["costs"], "costs", {
        "c_bh": float, "c_bs": float, "c_sc": float, "c_d2d": float, "c_bs_ttl": float,
    }))
    if not isinstance(raw["contents"], list) or not raw["contents"]:
        raise ScenarioError("contents must be a nonempty list")
    contents = []
    for i, item in enumerate(raw["contents"]):
        kw = _take(item, f"contents[{i}]", {
            "content_id": str, "r0_total": int, "ttl": float, "creation_time": float,
        })
        kw.setdefault("content_id", f"content-{i:04d}")
        contents.append(ContentClass(**kw))

    placement = None
    if "placement" in raw:
        sec = raw["placement"]
        unknown = set(sec) - {"h_sc0", "h_mn0"}
        if unknown:
            raise ScenarioError(f"unknown key {sorted(unknown)[0]!r} in section 'placement'")
        try:
            placement = Placement(h_sc0=np.asarray(sec.get("h_sc0", []), dtype=float),
                                  h_mn0=np.asarray(sec.get("h_mn0", [0] * len(sec.get("h_sc0", []))), dtype=float))
        except (TypeError, ValueError) as e:
            raise ScenarioError(f"bad placement arrays: {e}") from e
    return Scenario(cfg=cfg, costs=costs, contents=contents, placement=placement)


def save_scenario(scn: Scenario, path) -> None:
    raw = {
        "scenario": {
            "n_bs": scn.cfg.n_bs, "n_sc": scn.cfg.n_sc, "n_mn": scn.cfg.n_mn,
            "cache_per_sc": scn.cfg.cache_per_sc, "p_c": scn.cfg.p_c,
            "mu_lambda": scn.cfg.mu_lambda, "cv_lambda": scn.cfg.cv_lambda,
            "lambda_d": scn.cfg.lambda_d,
        },
        "costs": {
            "c_bh": scn.costs.c_bh, "c_bs": scn.costs.c_bs, "c_sc": scn.costs.c_sc,
            "c_d2d": scn.costs.c_d2d, "c_bs_ttl": scn.costs.c_bs_ttl,
        },
        "contents": [
            {"content_id": c.content_id, "r0_total": c.r0_total, "ttl": c.ttl,
             "creation_time": c.creation_time}
            for c in scn.contents
        ],
    }
    if scn.placement is not None:
        raw["placement"] = {"h_sc0": [float(x) for x in scn.placement.h_sc0],
                            "h_mn0": [float(x) for x in scn.placement.h_mn0]}
    with open(path, "w") as fh:
        json.dump(raw, fh, indent=2, sort_keys=True)
        fh.write("\n")
