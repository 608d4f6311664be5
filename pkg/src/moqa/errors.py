"""Exception hierarchy shared across the pipeline."""


class MoqaError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(MoqaError):
    """A record file violates the line-delimited schema."""

    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class DuplicateIdError(MoqaError):
    def __init__(self, duplicate_id):
        self.duplicate_id = duplicate_id
        super().__init__(f"duplicate id: {duplicate_id!r}")


class RaggedTableError(MoqaError):
    """A table row length does not match the header length."""


class IndexFormatError(MoqaError):
    """Base for index file format problems."""


class BadMagicError(IndexFormatError):
    pass


class VersionMismatchError(IndexFormatError):
    pass


class TruncatedIndexError(IndexFormatError):
    pass


class DimensionMismatchError(MoqaError):
    pass


class ZeroVectorError(MoqaError):
    """A zero vector is not admissible under the cosine metric."""


class ZeroQueryError(MoqaError):
    """A zero query vector is not admissible under the cosine metric."""


class UnboundSlotError(MoqaError):
    def __init__(self, slot_name):
        self.slot_name = slot_name
        super().__init__(f"unbound prompt slot: {{{slot_name}}}")


class TransportError(MoqaError):
    """Network-level failure after retries were exhausted."""


class BackendRefusalError(MoqaError):
    """Backend returned a non-2xx response; body is preserved."""

    def __init__(self, status_code, body):
        self.status_code = status_code
        self.body = body
        super().__init__(f"backend refused with status {status_code}: {body[:500]}")


class ReplayMissError(MoqaError):
    """Replay cache has no entry for the requested fingerprint."""

    def __init__(self, fingerprint):
        self.fingerprint = fingerprint
        super().__init__(f"replay cache miss for fingerprint {fingerprint}")


class ConfigError(MoqaError):
    pass


class EvalAlignmentError(MoqaError):
    """Prediction and gold files do not cover the same question ids."""

    def __init__(self, missing_ids):
        self.missing_ids = list(missing_ids)
        super().__init__(f"qid mismatch, missing: {', '.join(self.missing_ids)}")
