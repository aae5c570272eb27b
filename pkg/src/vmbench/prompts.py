"""Prompt-suite pipeline: structured metadata, combinatorial sampling, and
the staged candidate flow (sampled -> generated -> verified -> llm_validated
-> accepted/rejected) with a full audit trail per record.

Generator and judge backends are injected; the deterministic stubs below
keep the pipeline runnable and testable offline.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Protocol, Sequence

from .bundle import MOVEMENT_MODES
from .errors import ExhaustedSpace, GeneratorFailure, JudgeFailure, SchemaError

SUBJECT_CATEGORIES = ("human", "animal", "object")
ENTITY_COUNTS = ("1", "2", "n")  # single, pair, group
MIN_WORDS = 10
MAX_WORDS = 60
DEFAULT_ACCEPT_THRESHOLD = 0.7

STATES = ("sampled", "generated", "verified", "llm_validated", "accepted", "rejected")
_ALLOWED_TRANSITIONS: dict[str, set[str]] = {
    "sampled": {"generated", "rejected"},
    "generated": {"generated", "verified", "rejected"},  # self-loop = regeneration
    "verified": {"llm_validated", "rejected"},
    "llm_validated": {"accepted", "rejected"},
    "accepted": set(),
    "rejected": set(),
}


@dataclass(frozen=True)
class Subject:
    name: str
    category: str
    entity_count: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("subject name must be non-empty")
        if self.category not in SUBJECT_CATEGORIES:
            raise ValueError(f"unknown subject category {self.category!r}")
        if self.entity_count not in ENTITY_COUNTS:
            raise ValueError(f"unknown entity count {self.entity_count!r}")


@dataclass(frozen=True)
class Place:
    name: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("place name must be non-empty")


@dataclass(frozen=True)
class Action:
    name: str
    applicable: tuple[str, ...]  # subject categories this action fits
    movement_mode: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("action name must be non-empty")
        if not self.applicable or any(c not in SUBJECT_CATEGORIES for c in self.applicable):
            raise ValueError(f"action {self.name!r}: applicable must be subject categories")
        if self.movement_mode not in MOVEMENT_MODES:
            raise ValueError(f"action {self.name!r}: unknown movement mode {self.movement_mode!r}")


@dataclass(frozen=True)
class MetadataSet:
    subject: Subject
    place: Place
    action: Action


@dataclass
class MetadataLibrary:
    subjects: tuple[Subject, ...]
    places: tuple[Place, ...]
    actions: tuple[Action, ...]

    def __post_init__(self) -> None:
        self.subjects = tuple(self.subjects)
        self.places = tuple(self.places)
        self.actions = tuple(self.actions)
        for label, items in (
            ("subject", [s.name for s in self.subjects]),
            ("place", [p.name for p in self.places]),
            ("action", [a.name for a in self.actions]),
        ):
            if len(set(items)) != len(items):
                raise ValueError(f"duplicate {label} name in library")

    def admissible_sets(self) -> list[MetadataSet]:
        """All subject x place x action combos where the action fits the
        subject's category, in library order."""
        out = []
        for subject in self.subjects:
            for place in self.places:
                for action in self.actions:
                    if subject.category in action.applicable:
                        out.append(MetadataSet(subject=subject, place=place, action=action))
        return out


def sample_metadata_sets(library: MetadataLibrary, n: int, seed: int) -> list[MetadataSet]:
    """Draw n distinct admissible combos, deterministic in (library, seed)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    space = library.admissible_sets()
    if n > len(space):
        raise ExhaustedSpace(f"requested {n} sets, only {len(space)} admissible combos exist")
    rng = random.Random(seed)
    return rng.sample(space, n)


# ---------------------------------------------------------------------------
# Prompt records and the staged pipeline


@dataclass
class PromptRecord:
    prompt_id: str
    subject: Subject
    place: Place
    action: Action
    state: str = "sampled"
    text: str | None = None
    plausibility: float | None = None
    human_override: str | None = None  # review verdict: "accepted" | "rejected"
    history: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.state not in STATES:
            raise ValueError(f"unknown state {self.state!r}")
        if not self.history:
            self.history = [(self.state, "created")]

    @property
    def movement_mode(self) -> str:
        return self.action.movement_mode

    @property
    def word_count(self) -> int:
        return len(self.text.split()) if self.text else 0

    @property
    def effective_state(self) -> str:
        return self.human_override if self.human_override is not None else self.state

    def advance(self, new_state: str, note: str = "") -> None:
        if new_state not in _ALLOWED_TRANSITIONS.get(self.state, set()):
            raise ValueError(f"illegal transition {self.state!r} -> {new_state!r}")
        self.state = new_state
        self.history.append((new_state, note))


class PromptGenerator(Protocol):
    def generate(self, mset: MetadataSet) -> str: ...

    def verify(self, text: str, mset: MetadataSet) -> bool: ...


class PlausibilityJudge(Protocol):
    def judge(self, text: str) -> float: ...


def run_pipeline(
    sets: Sequence[MetadataSet],
    generator: PromptGenerator,
    judge: PlausibilityJudge,
    accept_threshold: float = DEFAULT_ACCEPT_THRESHOLD,
    id_prefix: str = "mmpg",
) -> list[PromptRecord]:
    """Drive every metadata set through the staged flow.

    One regeneration attempt is allowed after a failed consistency check;
    backend failures and out-of-bounds word counts reject the record, never
    abort the run. Every decision lands in the record's history.
    """
    if not 0.0 <= accept_threshold <= 1.0:
        raise ValueError("accept_threshold must be in [0, 1]")
    records = []
    for i, mset in enumerate(sets):
        rec = PromptRecord(
            prompt_id=f"{id_prefix}-{i:05d}",
            subject=mset.subject,
            place=mset.place,
            action=mset.action,
        )
        records.append(rec)
        verified = False
        for attempt in (1, 2):
            try:
                text = generator.generate(mset)
            except GeneratorFailure as exc:
                rec.advance("rejected", f"generator failed on attempt {attempt}: {exc}")
                break
            rec.text = text
            rec.advance("generated", f"attempt {attempt}")
            if generator.verify(text, mset):
                verified = True
                break
            if attempt == 2:
                rec.advance("rejected", "consistency check failed after regeneration")
        if not verified:
            continue
        rec.advance("verified", "metadata consistency check passed")
        if not MIN_WORDS <= rec.word_count <= MAX_WORDS:
            rec.advance(
                "rejected", f"word count {rec.word_count} outside {MIN_WORDS}..{MAX_WORDS}"
            )
            continue
        try:
            score = float(judge.judge(rec.text))
        except JudgeFailure as exc:
            rec.advance("rejected", f"judge failed: {exc}")
            continue
        rec.plausibility = score
        rec.advance("llm_validated", f"plausibility {score:.3f}")
        if score >= accept_threshold:
            rec.advance("accepted", "")
        else:
            rec.advance("rejected", f"plausibility {score:.3f} below {accept_threshold}")
    return records


def apply_review(records: Iterable[PromptRecord], verdicts: dict[str, str]) -> None:
    """Overlay human review verdicts ('accepted'/'rejected') by prompt_id."""
    by_id = {rec.prompt_id: rec for rec in records}
    for prompt_id, verdict in verdicts.items():
        if verdict not in ("accepted", "rejected"):
            raise ValueError(f"verdict for {prompt_id!r} must be accepted/rejected")
        if prompt_id not in by_id:
            raise KeyError(f"unknown prompt_id {prompt_id!r} in review verdicts")
        by_id[prompt_id].human_override = verdict


# ---------------------------------------------------------------------------
# Deterministic stub backends

_FILLER = (
    "moving with steady pace and clear rhythm while the camera holds a wide "
    "view of the unfolding scene under even natural light"
).split()

_COUNT_PHRASES = {"1": "A {name}", "2": "Two {name}s", "n": "A group of {name}s"}


@dataclass
class TemplateGenerator:
    """Fills a fixed template to an exact word count.

    flaky_once lists subject names whose first generation omits the place
    (so verification fails once and the regeneration path runs).
    """

    target_words: int = 18
    flaky_once: frozenset[str] = frozenset()
    _attempts: dict[str, int] = field(default_factory=dict)

    def generate(self, mset: MetadataSet) -> str:
        key = f"{mset.subject.name}|{mset.place.name}|{mset.action.name}"
        self._attempts[key] = self._attempts.get(key, 0) + 1
        entity = _COUNT_PHRASES[mset.subject.entity_count].format(name=mset.subject.name)
        if mset.subject.name in self.flaky_once and self._attempts[key] == 1:
            core = f"{entity} {mset.action.name} somewhere out of view"
        else:
            core = f"{entity} {mset.action.name} at the {mset.place.name}"
        words = core.split()
        if len(words) > self.target_words:
            raise GeneratorFailure(
                f"template needs {len(words)} words, target is {self.target_words}"
            )
        pad = self.target_words - len(words)
        filler = [_FILLER[i % len(_FILLER)] for i in range(pad)]
        return " ".join(words + filler)

    def verify(self, text: str, mset: MetadataSet) -> bool:
        lowered = text.lower()
        return all(
            name.lower() in lowered
            for name in (mset.subject.name, mset.place.name, mset.action.name)
        )


@dataclass(frozen=True)
class ConstantJudge:
    """Returns the same plausibility for every candidate."""

    score: float = 0.9

    def judge(self, text: str) -> float:
        return self.score


# ---------------------------------------------------------------------------
# Suite statistics


def suite_statistics(records: Sequence[PromptRecord]) -> dict[str, Any]:
    """Coverage and acceptance counts; category buckets cover accepted
    records (by effective state, so review overrides count)."""
    by_state: dict[str, int] = {}
    for rec in records:
        by_state[rec.state] = by_state.get(rec.state, 0) + 1
    accepted = [rec for rec in records if rec.effective_state == "accepted"]
    by_mode: dict[str, int] = {}
    by_category: dict[str, int] = {}
    by_count: dict[str, int] = {}
    triples = set()
    for rec in accepted:
        by_mode[rec.movement_mode] = by_mode.get(rec.movement_mode, 0) + 1
        by_category[rec.subject.category] = by_category.get(rec.subject.category, 0) + 1
        by_count[rec.subject.entity_count] = by_count.get(rec.subject.entity_count, 0) + 1
        triples.add((rec.subject.name, rec.place.name, rec.action.name))
    word_counts = [rec.word_count for rec in accepted if rec.text]
    return {
        "total": len(records),
        "by_state": dict(sorted(by_state.items())),
        "accepted": len(accepted),
        "by_movement_mode": dict(sorted(by_mode.items())),
        "by_subject_category": dict(sorted(by_category.items())),
        "by_entity_count": dict(sorted(by_count.items())),
        "distinct_metadata_triples": len(triples),
        "word_count": {
            "min": min(word_counts) if word_counts else None,
            "max": max(word_counts) if word_counts else None,
            "mean": sum(word_counts) / len(word_counts) if word_counts else None,
        },
    }


# ---------------------------------------------------------------------------
# Serialization


def _subject_to_doc(s: Subject) -> dict[str, str]:
    return {"name": s.name, "category": s.category, "entity_count": s.entity_count}


def library_to_dict(library: MetadataLibrary) -> dict[str, Any]:
    return {
        "subjects": [_subject_to_doc(s) for s in library.subjects],
        "places": [{"name": p.name} for p in library.places],
        "actions": [
            {"name": a.name, "applicable": list(a.applicable), "movement_mode": a.movement_mode}
            for a in library.actions
        ],
    }


def library_from_dict(doc: dict[str, Any]) -> MetadataLibrary:
    try:
        return MetadataLibrary(
            subjects=tuple(
                Subject(name=s["name"], category=s["category"], entity_count=s["entity_count"])
                for s in doc["subjects"]
            ),
            places=tuple(Place(name=p["name"]) for p in doc["places"]),
            actions=tuple(
                Action(
                    name=a["name"],
                    applicable=tuple(a["applicable"]),
                    movement_mode=a["movement_mode"],
                )
                for a in doc["actions"]
            ),
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed metadata library: {exc!r}") from exc


def save_metadata_library(library: MetadataLibrary, path: str | Path) -> Path:
    path = Path(path)
    text = json.dumps(library_to_dict(library), sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def load_metadata_library(path: str | Path) -> MetadataLibrary:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    return library_from_dict(doc)


def record_to_dict(rec: PromptRecord) -> dict[str, Any]:
    return {
        "prompt_id": rec.prompt_id,
        "subject": _subject_to_doc(rec.subject),
        "place": {"name": rec.place.name},
        "action": {
            "name": rec.action.name,
            "applicable": list(rec.action.applicable),
            "movement_mode": rec.action.movement_mode,
        },
        "state": rec.state,
        "text": rec.text,
        "plausibility": rec.plausibility,
        "human_override": rec.human_override,
        "history": [[state, note] for state, note in rec.history],
    }


def record_from_dict(doc: dict[str, Any]) -> PromptRecord:
    try:
        return PromptRecord(
            prompt_id=doc["prompt_id"],
            subject=Subject(**doc["subject"]),
            place=Place(**doc["place"]),
            action=Action(
                name=doc["action"]["name"],
                applicable=tuple(doc["action"]["applicable"]),
                movement_mode=doc["action"]["movement_mode"],
            ),
            state=doc["state"],
            text=doc.get("text"),
            plausibility=doc.get("plausibility"),
            human_override=doc.get("human_override"),
            history=[(state, note) for state, note in doc.get("history", [])],
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed prompt record: {exc!r}") from exc


def save_prompt_records(records: Iterable[PromptRecord], path: str | Path) -> Path:
    path = Path(path)
    lines = [json.dumps(record_to_dict(rec), sort_keys=True) for rec in records]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path


def load_prompt_records(path: str | Path) -> list[PromptRecord]:
    path = Path(path)
    records = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        records.append(record_from_dict(doc))
    return records


def import_prompt_suite(path: str | Path) -> list[PromptRecord]:
    """Load a released prompt suite (JSONL of id/text/mode/tags) as accepted
    records with an 'imported' audit trail."""
    path = Path(path)
    records = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            subject = Subject(
                name=doc["subject"],
                category=doc.get("subject_category", "object"),
                entity_count=doc.get("entity_count", "1"),
            )
            action = Action(
                name=doc["action"],
                applicable=(subject.category,),
                movement_mode=doc["movement_mode"],
            )
            rec = PromptRecord(
                prompt_id=doc["prompt_id"],
                subject=subject,
                place=Place(name=doc["place"]),
                action=action,
                text=doc["text"],
            )
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise SchemaError(f"{path}:{lineno}: malformed suite row: {exc!r}") from exc
        for state in ("generated", "verified", "llm_validated", "accepted"):
            rec.advance(state, "imported")
        records.append(rec)
    return records


def demo_library() -> MetadataLibrary:
    """Small built-in library covering every mode, category and count."""
    return MetadataLibrary(
        subjects=(
            Subject(name="dancer", category="human", entity_count="1"),
            Subject(name="runner", category="human", entity_count="2"),
            Subject(name="horse", category="animal", entity_count="1"),
            Subject(name="starling", category="animal", entity_count="n"),
            Subject(name="kite", category="object", entity_count="1"),
            Subject(name="pendulum", category="object", entity_count="2"),
        ),
        places=(
            Place(name="windswept beach"),
            Place(name="city square"),
            Place(name="mountain meadow"),
            Place(name="workshop"),
        ),
        actions=(
            Action(name="leaps across", applicable=("human", "animal"), movement_mode="biological_motion"),
            Action(name="spins around", applicable=("human", "object"), movement_mode="mechanical_motion"),
            Action(name="drifts over", applicable=("object",), movement_mode="fluid_dynamics"),
            Action(name="swirls beneath storm clouds at", applicable=("animal", "object"), movement_mode="weather_phenomena"),
            Action(name="flocks above", applicable=("animal",), movement_mode="collective_behavior"),
            Action(name="collides with a cart near", applicable=("human", "object"), movement_mode="energy_transfer"),
        ),
    )
