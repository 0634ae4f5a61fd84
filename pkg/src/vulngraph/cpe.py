"""CPE 2.3 formatted-string parsing, binding, matching and version ordering.

Every asset and system under test is identified by a CPE 2.3 name of the form

    cpe:2.3:part:vendor:product:version:update:edition:language:sw_edition:target_sw:target_hw:other

i.e. the literal prefix plus eleven attribute fields, colon separated, with
backslash escaping for characters that are not letters, digits, ``.``, ``_``
or ``-``.  Only the formatted-string binding is supported (no 2.2 URI form).

Attribute values are one of:

* ``ANY``    -- the ``*`` wildcard,
* ``NA``     -- the explicit ``-`` (not applicable),
* a literal  -- stored decoded and lower-cased (names are case-insensitive).

Unescaped ``*``/``?`` inside a literal are rejected: the toolkit matches
names exactly or via whole-attribute wildcards, never via embedded globs.

Locally minted names (for assets without a published CPE) are ordinary names,
conventionally under vendor ``local``; nothing here treats them specially.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields


class _Logical:
    """Singleton marker for the two logical attribute values."""

    __slots__ = ("_name",)

    def __init__(self, name: str):
        self._name = name

    def __repr__(self):
        return self._name

    def __deepcopy__(self, memo):
        return self

    def __copy__(self):
        return self


ANY = _Logical("ANY")
NA = _Logical("NA")

#: Attribute value: a logical marker or a decoded literal string.
AttrValue = _Logical | str

_ATTRIBUTES = (
    "part",
    "vendor",
    "product",
    "version",
    "update",
    "edition",
    "language",
    "sw_edition",
    "target_sw",
    "target_hw",
    "other",
)

_PARTS = ("a", "o", "h")

# Characters that may appear unescaped in a formatted-string field.
_UNRESERVED = re.compile(r"[a-z0-9._-]")

# Characters an escape sequence may carry: punctuation only (escaping a
# letter, digit or whitespace is meaningless and rejected).
_ESCAPABLE = set("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~")


@dataclass(frozen=True)
class WellFormedName:
    """The eleven attributes of a CPE 2.3 name.

    ``part`` is ``a`` (application), ``o`` (operating system) or ``h``
    (hardware); it may be ``ANY`` in a match pattern but never ``NA``.
    """

    part: AttrValue
    vendor: AttrValue
    product: AttrValue
    version: AttrValue = ANY
    update: AttrValue = ANY
    edition: AttrValue = ANY
    language: AttrValue = ANY
    sw_edition: AttrValue = ANY
    target_sw: AttrValue = ANY
    target_hw: AttrValue = ANY
    other: AttrValue = ANY

    def attribute(self, name: str) -> AttrValue:
        return getattr(self, name)

    def is_concrete(self) -> bool:
        """True when part, vendor and product are all literal."""
        return all(isinstance(getattr(self, a), str) for a in ("part", "vendor", "product"))

    def __str__(self):
        return bind_formatted(self)


ATTRIBUTE_NAMES = _ATTRIBUTES


def _split_fields(s: str):
    """Split on unescaped colons, keeping the byte offset of each field."""
    out = []
    start = 0
    i = 0
    while i < len(s):
        c = s[i]
        if c == "\\":
            i += 2
            continue
        if c == ":":
            out.append((start, s[start:i]))
            start = i + 1
        i += 1
    out.append((start, s[start:]))
    return out


def _decode_field(raw: str, offset: int) -> AttrValue:
    from .errors import MalformedCpe

    if raw == "*":
        return ANY
    if raw == "-":
        return NA
    if raw == "":
        raise MalformedCpe("empty attribute field", offset)
    out = []
    i = 0
    lowered = raw.lower()
    while i < len(lowered):
        c = lowered[i]
        if c == "\\":
            if i + 1 >= len(lowered):
                raise MalformedCpe("dangling escape", offset + i)
            nxt = lowered[i + 1]
            if nxt not in _ESCAPABLE:
                raise MalformedCpe(f"illegal escape '\\{nxt}'", offset + i)
            out.append(nxt)
            i += 2
            continue
        if not _UNRESERVED.fullmatch(c):
            raise MalformedCpe(f"unescaped character {c!r}", offset + i)
        out.append(c)
        i += 1
    return "".join(out)


def parse_formatted(s: str) -> WellFormedName:
    """Parse a CPE 2.3 formatted string into a :class:`WellFormedName`.

    Raises :class:`~vulngraph.errors.MalformedCpe` (carrying the byte offset)
    on a bad prefix, wrong field count, illegal part value, empty field or
    illegal escape sequence.
    """
    from .errors import MalformedCpe

    pieces = _split_fields(s)
    if len(pieces) != 13:
        raise MalformedCpe(f"expected 13 colon-separated fields, got {len(pieces)}", 0)
    if pieces[0][1].lower() != "cpe":
        raise MalformedCpe("missing 'cpe' prefix", 0)
    if pieces[1][1] != "2.3":
        raise MalformedCpe(f"unsupported CPE version {pieces[1][1]!r}", pieces[1][0])

    values = {}
    for name, (offset, raw) in zip(_ATTRIBUTES, pieces[2:]):
        values[name] = _decode_field(raw, offset)

    part = values["part"]
    if part is NA or (isinstance(part, str) and part not in _PARTS):
        raise MalformedCpe(f"illegal part {pieces[2][1]!r}", pieces[2][0])
    return WellFormedName(**values)


def _encode_value(value: AttrValue) -> str:
    if value is ANY:
        return "*"
    if value is NA:
        return "-"
    if value == "-":
        return "\\-"  # a bare hyphen field would read back as NA
    out = []
    for c in value:
        if _UNRESERVED.fullmatch(c):
            out.append(c)
        else:
            out.append("\\" + c)
    return "".join(out)


def bind_formatted(w: WellFormedName) -> str:
    """Bind a WFN to its canonical lower-case formatted string.

    Inverse of :func:`parse_formatted`: ``parse_formatted(bind_formatted(w))``
    equals ``w`` for every valid WFN.
    """
    encoded = ":".join(_encode_value(getattr(w, a)) for a in _ATTRIBUTES)
    return f"cpe:2.3:{encoded}"


def matches(candidate: WellFormedName, pattern: WellFormedName) -> bool:
    """True when every pattern attribute subsumes the candidate's.

    Per attribute: ``ANY`` matches anything, ``NA`` matches only ``NA``, and a
    literal matches only the equal literal (values are already lower-cased).
    The candidate is expected to be concrete in part/vendor/product.
    """
    for name in _ATTRIBUTES:
        pat = getattr(pattern, name)
        if pat is ANY:
            continue
        cand = getattr(candidate, name)
        if pat is NA:
            if cand is not NA:
                return False
        elif cand != pat:
            return False
    return True


_TOKEN_RE = re.compile(r"[0-9]+|[a-z]+", re.IGNORECASE)


def version_key(text: str) -> tuple:
    """Sortable key for a version string.

    The string is cut into maximal digit runs and letter runs (punctuation
    only separates).  Digit runs compare numerically and order before letter
    runs; letter runs compare lexicographically; a key that is a strict
    prefix of another orders first.  So ``8.0.6001 < 8.0.6002 < 8.1`` and
    ``1.0 < 1.0rc1`` (the alphanumeric-after-numeric rule).
    """
    key = []
    for tok in _TOKEN_RE.findall(text):
        if tok.isdigit():
            key.append((0, int(tok), ""))
        else:
            key.append((1, 0, tok.lower()))
    return tuple(key)


def compare_versions(a: str, b: str) -> int:
    """Total order over version strings: -1, 0 or 1."""
    ka, kb = version_key(a), version_key(b)
    if ka < kb:
        return -1
    if ka > kb:
        return 1
    return 0


def to_dict(w: WellFormedName) -> dict:
    """JSON-friendly form: the bound string (single source of truth)."""
    return {"cpe": bind_formatted(w)}


# Attribute iteration helper used by tests and matching truth tables.
def attribute_values(w: WellFormedName):
    for f in fields(w):
        yield f.name, getattr(w, f.name)
