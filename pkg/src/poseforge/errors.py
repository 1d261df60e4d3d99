"""Exception hierarchy shared across the package."""

from __future__ import annotations


class PoseForgeError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PoseForgeError):
    """Malformed input document. The message names the offending path."""


class EmptyPoseError(ParseError):
    """Document contained no people."""


class EmptySequenceError(ParseError):
    """Directory or NDJSON file contained no frames."""


class ValidationError(PoseForgeError):
    """A domain invariant was violated; message names frame/joint where known."""


class ContractError(PoseForgeError):
    """Mismatched shapes between cooperating inputs (topology vs ratios, etc.)."""


class UnusableReferenceError(PoseForgeError):
    """The reference pose contains no measurable limbs (or no base joint)."""


class MissingJointError(PoseForgeError):
    """An operation required a keypoint that is MISSING."""


class GeneratorError(PoseForgeError):
    """A kickstart generator adapter failed; carries the bundle manifest."""

    def __init__(self, adapter_name: str, manifest: dict, cause: str):
        self.adapter_name = adapter_name
        self.manifest = manifest
        super().__init__(f"generator adapter '{adapter_name}' failed: {cause}")
