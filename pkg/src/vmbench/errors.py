"""Exception types shared across the workbench.

Value-domain violations (a probability that does not sum to one, a rating
outside 1..5) raise plain ValueError; the classes here cover structural and
workflow failures that callers are expected to catch individually.
"""


class VMBenchError(Exception):
    """Base class for workbench-specific failures."""


class SchemaError(VMBenchError):
    """Bundle or schema document is structurally malformed."""


class SchemaMismatch(VMBenchError):
    """Keypoint data does not fit the skeleton schema it names."""


class MissingThreshold(VMBenchError):
    """No threshold entry and no fallback for the requested key."""


class EmptyEvidence(VMBenchError):
    """Metric has zero observed evidence cells for this video."""


class NoActiveSubject(VMBenchError):
    """No active trajectory covers the prompted subject."""


class DuplicateRating(VMBenchError):
    """Same (video, dimension, annotator) rated more than once."""


class MixedDimensionPackage(VMBenchError):
    """One annotation package id carries more than one dimension."""


class DegenerateInput(VMBenchError):
    """Statistic undefined for this input (e.g. a constant vector)."""


class MissingScore(VMBenchError):
    """A grouped video lacks a required human or metric score."""


class JoinError(VMBenchError):
    """Video ids present on one side of a join but not the other."""


class ExhaustedSpace(VMBenchError):
    """Requested more metadata sets than admissible combinations exist."""


class GeneratorFailure(VMBenchError):
    """Prompt generator backend failed to produce a candidate."""


class JudgeFailure(VMBenchError):
    """Plausibility judge backend failed to score a candidate."""
