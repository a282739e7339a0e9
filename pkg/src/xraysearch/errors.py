"""Exception types raised across the package.

Everything derives from XraySearchError so callers (notably the CLI) can
catch one base class and map it to a nonzero exit code.
"""


class XraySearchError(Exception):
    """Base class for all errors raised by this package."""


class MalformedCode(XraySearchError):
    """A class-code string violates the TTTT-DDD-AAA-BBB shape or alphabet."""


class TaxonomyGap(XraySearchError):
    """A tree taxonomy has no node for a prefix reached by a truth code."""


class MalformedTaxonomy(XraySearchError):
    """A taxonomy file could not be parsed."""


class MalformedManifest(XraySearchError):
    """A corpus manifest row is invalid (bad CSV, bad code, duplicate id)."""


class DecodeError(XraySearchError):
    """An image file could not be decoded."""


class DegenerateImage(XraySearchError):
    """An image has zero area."""


class DimensionMismatch(XraySearchError):
    """Vector or matrix dimensions do not agree."""


class InvalidDimensions(XraySearchError):
    """Layer dimensions are not positive."""


class InvalidArchitecture(XraySearchError):
    """A stack layer-size list is not strictly decreasing or too short."""


class DuplicateId(XraySearchError):
    """Two records share a record id."""


class EmptyIndex(XraySearchError):
    """A query was issued against an index with no records."""


class CorruptModel(XraySearchError):
    """A model file has a bad magic, is truncated, or fails its checksum."""


class CorruptIndex(XraySearchError):
    """An index file has a bad magic, is truncated, or fails its checksum."""
