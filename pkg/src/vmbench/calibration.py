"""Threshold sets and their calibration from a reference corpus.

Per-scenario thresholds come from empirical quantiles of the reference
corpus's own evidence (quality drops, skeleton deviations, displacement
amplitudes). Scenarios with too few samples fall back to the pooled
all-scenario quantile; an empty pool falls back to a configured floor.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .bundle import FeatureBundle
from .errors import DegenerateInput, MissingThreshold, SchemaError

THRESHOLDS_SCHEMA_VERSION = "vmbench-thresholds/1"

# uncalibrated defaults, deliberately conservative; see ThresholdSet.defaults()
DEFAULT_MSS_BASE = 0.05        # quality drop, in normalized quality units
DEFAULT_PAS_TAU = 8.0          # px per frame
DEFAULT_OIS_LENGTH_TAU = 0.2   # fraction of reference length
DEFAULT_OIS_ANGLE_TAU = 0.3    # radians
DEFAULT_QUANTILE = 0.99
DEFAULT_MIN_SAMPLES = 30
DEFAULT_FLOOR = 1e-6

OIS_KINDS = ("length", "angle")


@dataclass(frozen=True)
class TcsRuleParams:
    """Default rule parameters for excusable appear/disappear events."""

    cover_fraction: float = 0.5            # occluder must cover this much of the subject box
    boundary_margin_fraction: float = 0.05  # of min(width, height)
    depth_window: int = 5                  # frames of area history for the depth rule
    min_area_fraction: float = 0.002       # of frame area, "small enough to have receded"

    def __post_init__(self) -> None:
        if not 0 < self.cover_fraction <= 1:
            raise ValueError("cover_fraction must be in (0, 1]")
        if not 0 < self.boundary_margin_fraction < 0.5:
            raise ValueError("boundary_margin_fraction must be in (0, 0.5)")
        if self.depth_window < 2:
            raise ValueError("depth_window must be >= 2")
        if not 0 < self.min_area_fraction < 1:
            raise ValueError("min_area_fraction must be in (0, 1)")


@dataclass(frozen=True)
class MssThreshold:
    """Smoothness tolerance: tau(t) = base * (1 + amplitude_coeff * amp_t)."""

    base: float
    amplitude_coeff: float = 0.0

    def __post_init__(self) -> None:
        if not self.base > 0:
            raise ValueError("MSS base threshold must be positive")
        if self.amplitude_coeff < 0:
            raise ValueError("amplitude_coeff must be >= 0")


@dataclass(frozen=True)
class FallbackDefaults:
    mss: MssThreshold
    ois_length: float
    ois_angle: float
    pas: float

    def __post_init__(self) -> None:
        if not (self.ois_length > 0 and self.ois_angle > 0 and self.pas > 0):
            raise ValueError("fallback thresholds must be positive")


@dataclass
class ThresholdSet:
    mss: dict[str, MssThreshold] = field(default_factory=dict)
    ois: dict[str, float] = field(default_factory=dict)
    pas: dict[str, float] = field(default_factory=dict)
    tcs_rules: TcsRuleParams = field(default_factory=TcsRuleParams)
    fallback: FallbackDefaults | None = None
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for scenario, tau in self.pas.items():
            if not tau > 0:
                raise ValueError(f"PAS threshold for {scenario!r} must be positive")
        for kind, tau in self.ois.items():
            if kind not in OIS_KINDS:
                raise ValueError(f"unknown OIS component kind {kind!r}")
            if not tau > 0:
                raise ValueError(f"OIS threshold for {kind!r} must be positive")

    @classmethod
    def defaults(cls) -> "ThresholdSet":
        """Usable without calibration; every lookup resolves via fallback."""
        return cls(
            fallback=FallbackDefaults(
                mss=MssThreshold(base=DEFAULT_MSS_BASE),
                ois_length=DEFAULT_OIS_LENGTH_TAU,
                ois_angle=DEFAULT_OIS_ANGLE_TAU,
                pas=DEFAULT_PAS_TAU,
            ),
            provenance={"source": "defaults"},
        )

    def mss_for(self, scenario_id: str) -> MssThreshold:
        got = self.mss.get(scenario_id)
        if got is not None:
            return got
        if self.fallback is not None:
            return self.fallback.mss
        raise MissingThreshold(f"no MSS threshold for scenario {scenario_id!r} and no fallback")

    def pas_for(self, scenario_id: str) -> float:
        got = self.pas.get(scenario_id)
        if got is not None:
            return got
        if self.fallback is not None:
            return self.fallback.pas
        raise MissingThreshold(f"no PAS threshold for scenario {scenario_id!r} and no fallback")

    def ois_for(self, kind: str) -> float:
        if kind not in OIS_KINDS:
            raise ValueError(f"unknown OIS component kind {kind!r}")
        got = self.ois.get(kind)
        if got is not None:
            return got
        if self.fallback is not None:
            return self.fallback.ois_length if kind == "length" else self.fallback.ois_angle
        raise MissingThreshold(f"no OIS threshold for kind {kind!r} and no fallback")


def empirical_quantile(samples: Iterable[float], q: float) -> float:
    """Linear-interpolation quantile of a finite sample.

    Matches the textbook definition on sorted order statistics:
    quantile((1,2,3,4,5), 0.5) == 3.0, quantile((0, 10), 0.99) == 9.9.
    """
    arr = np.asarray(list(samples), dtype=float)
    if arr.size == 0:
        raise DegenerateInput("cannot take a quantile of an empty sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError("quantile samples must be finite")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile level {q!r} outside [0, 1]")
    return float(np.quantile(arr, q, method="linear"))


def calibrate(
    bundles: Iterable[FeatureBundle],
    q: float = DEFAULT_QUANTILE,
    overrides: dict[str, Any] | None = None,
    min_samples: int = DEFAULT_MIN_SAMPLES,
    floor: float = DEFAULT_FLOOR,
    schemas=None,
    corpus_id: str | None = None,
) -> ThresholdSet:
    """Derive a ThresholdSet from a reference corpus at quantile level q.

    Scenarios with fewer than min_samples samples get no map entry (they
    resolve through the fallback, which holds the pooled quantile) and are
    recorded in provenance. An empty pool falls back to `floor`.
    """
    # imported here: metrics depends on the threshold types above
    from .metrics import amplitude_series, deviation_table
    from .skeletons import get_schema

    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile level {q!r} outside [0, 1]")
    if min_samples < 1:
        raise ValueError("min_samples must be >= 1")
    if not floor > 0:
        raise ValueError("floor must be positive")

    mss_samples: dict[str, list[float]] = {}
    pas_samples: dict[str, list[float]] = {}
    ois_samples: dict[str, list[float]] = {kind: [] for kind in OIS_KINDS}
    bundle_count = 0

    for bundle in bundles:
        bundle_count += 1
        scenario = bundle.scene.scenario_id
        q_series = bundle.quality.q
        drops = q_series[:-1] - q_series[1:]
        positive = drops[drops > 0]
        if positive.size:
            mss_samples.setdefault(scenario, []).extend(positive.tolist())
        amps, counts = amplitude_series(bundle.trajectories, bundle.frame_count)
        observed = amps[counts > 0]
        if observed.size:
            pas_samples.setdefault(scenario, []).extend(observed.tolist())
        for track in bundle.keypoint_tracks:
            schema = get_schema(track.schema_id, schemas)
            table = deviation_table(track, schema)
            for kind, dev in (("length", table.lengths), ("angle", table.angles)):
                vals = dev[np.isfinite(dev)]
                if vals.size:
                    ois_samples[kind].extend(vals.tolist())

    insufficient: list[dict[str, Any]] = []

    def scenario_map(samples: dict[str, list[float]], metric: str) -> dict[str, float]:
        out: dict[str, float] = {}
        for scenario in sorted(samples):
            vals = samples[scenario]
            if len(vals) >= min_samples:
                out[scenario] = max(floor, empirical_quantile(vals, q))
            else:
                insufficient.append({"metric": metric, "scenario": scenario, "count": len(vals)})
        return out

    def pooled_tau(samples_by_key: dict[str, list[float]], metric: str) -> float:
        pooled = [v for vals in samples_by_key.values() for v in vals]
        if not pooled:
            insufficient.append({"metric": metric, "scenario": None, "count": 0})
            return floor
        if len(pooled) < min_samples:
            insufficient.append({"metric": metric, "scenario": None, "count": len(pooled)})
        return max(floor, empirical_quantile(pooled, q))

    mss_map = {s: MssThreshold(base=tau) for s, tau in scenario_map(mss_samples, "mss").items()}
    pas_map = scenario_map(pas_samples, "pas")
    ois_map = {}
    for kind in OIS_KINDS:
        vals = ois_samples[kind]
        if vals:
            if len(vals) < min_samples:
                insufficient.append({"metric": "ois", "scenario": kind, "count": len(vals)})
            ois_map[kind] = max(floor, empirical_quantile(vals, q))
        else:
            insufficient.append({"metric": "ois", "scenario": kind, "count": 0})
            ois_map[kind] = floor

    fallback = FallbackDefaults(
        mss=MssThreshold(base=pooled_tau(mss_samples, "mss")),
        ois_length=ois_map["length"],
        ois_angle=ois_map["angle"],
        pas=pooled_tau(pas_samples, "pas"),
    )

    result = ThresholdSet(
        mss=mss_map,
        ois=ois_map,
        pas=pas_map,
        fallback=fallback,
        provenance={
            "source": "calibrate",
            "quantile": q,
            "min_samples": min_samples,
            "floor": floor,
            "bundle_count": bundle_count,
            "corpus_id": corpus_id,
            "sample_counts": {
                "mss": {s: len(v) for s, v in sorted(mss_samples.items())},
                "pas": {s: len(v) for s, v in sorted(pas_samples.items())},
                "ois": {k: len(v) for k, v in sorted(ois_samples.items())},
            },
            "insufficient": insufficient,
        },
    )
    if overrides:
        result = apply_overrides(result, overrides)
    return result


def apply_overrides(thresholds: ThresholdSet, overrides: dict[str, Any]) -> ThresholdSet:
    """Merge a partial threshold document over a calibrated set (last wins)."""
    known = {"mss", "ois", "pas", "tcs_rules", "fallback"}
    unknown = set(overrides) - known
    if unknown:
        raise SchemaError(f"unknown override sections: {sorted(unknown)}")
    mss = dict(thresholds.mss)
    for scenario, entry in overrides.get("mss", {}).items():
        mss[scenario] = _mss_from_doc(entry)
    ois = dict(thresholds.ois)
    for kind, tau in overrides.get("ois", {}).items():
        ois[kind] = float(tau)
    pas = dict(thresholds.pas)
    for scenario, tau in overrides.get("pas", {}).items():
        pas[scenario] = float(tau)
    tcs = thresholds.tcs_rules
    if "tcs_rules" in overrides:
        valid = {f.name for f in fields(TcsRuleParams)}
        bad = set(overrides["tcs_rules"]) - valid
        if bad:
            raise SchemaError(f"unknown tcs_rules keys: {sorted(bad)}")
        tcs = replace(tcs, **{k: v for k, v in overrides["tcs_rules"].items()})
    fallback = thresholds.fallback
    if "fallback" in overrides:
        fb = overrides["fallback"]
        base = fallback or FallbackDefaults(
            mss=MssThreshold(base=DEFAULT_MSS_BASE),
            ois_length=DEFAULT_OIS_LENGTH_TAU,
            ois_angle=DEFAULT_OIS_ANGLE_TAU,
            pas=DEFAULT_PAS_TAU,
        )
        fallback = FallbackDefaults(
            mss=_mss_from_doc(fb["mss"]) if "mss" in fb else base.mss,
            ois_length=float(fb.get("ois_length", base.ois_length)),
            ois_angle=float(fb.get("ois_angle", base.ois_angle)),
            pas=float(fb.get("pas", base.pas)),
        )
    provenance = dict(thresholds.provenance)
    provenance["overridden"] = sorted(overrides)
    return ThresholdSet(
        mss=mss, ois=ois, pas=pas, tcs_rules=tcs, fallback=fallback, provenance=provenance
    )


# ---------------------------------------------------------------------------
# File format


def _mss_from_doc(doc: Any) -> MssThreshold:
    if isinstance(doc, dict):
        return MssThreshold(
            base=float(doc["base"]), amplitude_coeff=float(doc.get("amplitude_coeff", 0.0))
        )
    return MssThreshold(base=float(doc))


def _mss_to_doc(entry: MssThreshold) -> dict[str, float]:
    return {"base": entry.base, "amplitude_coeff": entry.amplitude_coeff}


def thresholds_to_dict(thresholds: ThresholdSet) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "schema_version": THRESHOLDS_SCHEMA_VERSION,
        "mss": {s: _mss_to_doc(t) for s, t in sorted(thresholds.mss.items())},
        "ois": dict(sorted(thresholds.ois.items())),
        "pas": dict(sorted(thresholds.pas.items())),
        "tcs_rules": {
            "cover_fraction": thresholds.tcs_rules.cover_fraction,
            "boundary_margin_fraction": thresholds.tcs_rules.boundary_margin_fraction,
            "depth_window": thresholds.tcs_rules.depth_window,
            "min_area_fraction": thresholds.tcs_rules.min_area_fraction,
        },
        "provenance": thresholds.provenance,
    }
    if thresholds.fallback is not None:
        doc["fallback"] = {
            "mss": _mss_to_doc(thresholds.fallback.mss),
            "ois_length": thresholds.fallback.ois_length,
            "ois_angle": thresholds.fallback.ois_angle,
            "pas": thresholds.fallback.pas,
        }
    return doc


def thresholds_from_dict(doc: dict[str, Any]) -> ThresholdSet:
    if not isinstance(doc, dict):
        raise SchemaError("threshold document must be a JSON object")
    if doc.get("schema_version") != THRESHOLDS_SCHEMA_VERSION:
        raise SchemaError(f"unsupported threshold schema_version {doc.get('schema_version')!r}")
    try:
        tcs_doc = doc.get("tcs_rules", {})
        fb = doc.get("fallback")
        return ThresholdSet(
            mss={s: _mss_from_doc(t) for s, t in doc.get("mss", {}).items()},
            ois={k: float(v) for k, v in doc.get("ois", {}).items()},
            pas={s: float(v) for s, v in doc.get("pas", {}).items()},
            tcs_rules=TcsRuleParams(**tcs_doc),
            fallback=None
            if fb is None
            else FallbackDefaults(
                mss=_mss_from_doc(fb["mss"]),
                ois_length=float(fb["ois_length"]),
                ois_angle=float(fb["ois_angle"]),
                pas=float(fb["pas"]),
            ),
            provenance=doc.get("provenance", {}),
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed threshold document: {exc!r}") from exc


def save_thresholds(thresholds: ThresholdSet, path: str | Path) -> Path:
    path = Path(path)
    text = json.dumps(thresholds_to_dict(thresholds), sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def load_thresholds(path: str | Path) -> ThresholdSet:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    return thresholds_from_dict(doc)
