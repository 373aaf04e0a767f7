"""Exception hierarchy.

Every error raised by the library derives from :class:`DivseqError`.
Configuration problems derive from :class:`ConfigError` so the CLI can map
them to exit code 2; everything else maps to exit code 1.
"""


class DivseqError(Exception):
    """Base class for all library errors."""


class ConfigError(DivseqError, ValueError):
    """Invalid decode configuration or flag combination."""


class NonDivisibleBeam(ConfigError):
    """Beam width is not an exact multiple of the group count."""


class NegativeStrength(ConfigError):
    """A penalty strength (diversity, rank, or MMI) is negative."""


class BadTemperature(ConfigError):
    """Cumulative-diversity temperature is not strictly positive."""


class ZeroLength(ConfigError):
    """Maximum decode length is below one."""


class BadN(ConfigError):
    """n-gram size is below one."""


class DuplicateToken(DivseqError, ValueError):
    """Vocabulary input contains a repeated token string."""


class EmptyTokenList(DivseqError, ValueError):
    """Vocabulary input is empty."""


class InvalidTokenId(DivseqError, ValueError):
    """Token id outside the vocabulary's id range."""


class PrefixAfterEOS(DivseqError, ValueError):
    """A scoring prefix continues past an end-of-sequence token."""


class EmptyCorpus(DivseqError, ValueError):
    """Training corpus contains no lines."""


class BadOrder(ConfigError):
    """Language-model order is below one."""


class FormatVersionMismatch(DivseqError, ValueError):
    """Serialized model uses an unsupported format version."""


class CorruptPayload(DivseqError, ValueError):
    """Serialized model is truncated, mangled, or fails its checksum."""


class VocabMismatch(DivseqError, ValueError):
    """Model vocabulary differs from the one expected by the caller."""


class InconsistentDimension(DivseqError, ValueError):
    """Embedding file rows disagree on vector dimension."""


class EmptyFile(DivseqError, ValueError):
    """Embedding file contains no rows."""


class NonNumericComponent(DivseqError, ValueError):
    """Embedding vector component failed to parse as a float."""


class LengthMismatch(DivseqError, ValueError):
    """Penalty vectors of differing lengths cannot be aggregated."""


class RowLengthMismatch(DivseqError, ValueError):
    """Scorer rows do not line up with the live hypotheses of a beam."""


class EmptyState(DivseqError, ValueError):
    """A beam step was requested on a state with no hypotheses."""


class SearchSpaceTooLarge(DivseqError, ValueError):
    """Exhaustive enumeration refused: |V|**T exceeds the guard."""


class EmptyCandidate(DivseqError, ValueError):
    """Metric called with an empty candidate sequence."""


class NoReferences(DivseqError, ValueError):
    """Metric called with no usable reference sequences."""


class EmptyList(DivseqError, ValueError):
    """Metric called with an empty hypothesis list."""


class InputMismatch(DivseqError, ValueError):
    """Hypothesis and reference files do not align by input id."""
