"""Grounded-caption tag grammars.

Three dialects bind caption phrases to segmentation tracks:

* ``INLINE_SEG`` -- ``<p>phrase</p><SEG>``; bindings are ordinal, the
  i-th ``<SEG>`` in textual order referencing the i-th mask track.
* ``ID_SEG`` -- ``<p> phrase </p> [SEG:x]`` with an explicit integer id;
  several ``[SEG:x]`` tags after one phrase produce one span per id.
* ``BRACKET`` -- ``[phrase](id)`` or ``[phrase](id1,id2)``; multiple ids
  share the phrase offsets.

Parsing strips tags and normalizes whitespace runs to single spaces, so
character offsets always address the plain text. Malformed input is
rejected, never repaired; the dialect is an explicit parameter, never
sniffed from the text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum

from .errors import BadSegId, DanglingSeg, NestedTag, UnbalancedTag

__all__ = [
    "Dialect",
    "SegBinding",
    "PhraseSpan",
    "GroundedCaption",
    "parse",
    "serialize",
    "strip_tags",
    "with_explicit_ids",
]


class Dialect(str, Enum):
    INLINE_SEG = "INLINE_SEG"
    ID_SEG = "ID_SEG"
    BRACKET = "BRACKET"


ORDINAL = "ordinal"
EXPLICIT = "explicit"


@dataclass(frozen=True)
class SegBinding:
    """Link from a phrase to a mask track, by occurrence order or by id."""

    kind: str
    id: int

    def __post_init__(self):
        if self.kind not in (ORDINAL, EXPLICIT):
            raise ValueError(f"unknown binding kind {self.kind!r}")
        if self.id < 0:
            raise ValueError(f"binding id must be non-negative, got {self.id}")

    @classmethod
    def ordinal(cls, index: int) -> "SegBinding":
        return cls(ORDINAL, index)

    @classmethod
    def explicit(cls, id: int) -> "SegBinding":
        return cls(EXPLICIT, id)


@dataclass(frozen=True)
class PhraseSpan:
    """Half-open character range [start, end) into the plain caption."""

    start: int
    end: int
    surface: str
    binding: SegBinding


@dataclass(frozen=True)
class GroundedCaption:
    plain: str
    spans: tuple[PhraseSpan, ...]
    dialect: Dialect

    def binding_ids(self) -> list[int]:
        return [s.binding.id for s in self.spans]


_P_OPEN = "<p>"
_P_CLOSE = "</p>"
_SEG_INLINE = "<SEG>"
_SEG_ID_PREFIX = "[SEG:"
_ID_TAG = re.compile(r"\[SEG:([^\]]*)\]")


class _PlainBuilder:
    """Accumulates normalized plain text and hands out phrase offsets."""

    def __init__(self):
        self._parts: list[str] = []
        self._length = 0
        self._pending_space = False

    def add_text(self, raw: str) -> None:
        i = 0
        n = len(raw)
        while i < n:
            if raw[i].isspace():
                if self._length:
                    self._pending_space = True
                i += 1
            else:
                j = i
                while j < n and not raw[j].isspace():
                    j += 1
                self._emit(raw[i:j])
                i = j

    def _emit(self, word: str) -> None:
        if self._pending_space:
            self._parts.append(" ")
            self._length += 1
            self._pending_space = False
        self._parts.append(word)
        self._length += len(word)

    def add_phrase(self, surface: str) -> tuple[int, int]:
        if self._pending_space:
            self._parts.append(" ")
            self._length += 1
            self._pending_space = False
        start = self._length
        self._parts.append(surface)
        self._length += len(surface)
        return start, self._length

    def text(self) -> str:
        return "".join(self._parts)


def _normalize_phrase(raw: str) -> str:
    return " ".join(raw.split())


def _parse_p_dialect(text: str, dialect: Dialect) -> GroundedCaption:
    builder = _PlainBuilder()
    spans: list[PhraseSpan] = []
    ordinal_count = 0
    i = 0
    n = len(text)
    seg_token = _SEG_INLINE if dialect is Dialect.INLINE_SEG else _SEG_ID_PREFIX

    while i < n:
        p_open = text.find(_P_OPEN, i)
        p_close = text.find(_P_CLOSE, i)
        seg_at = text.find(seg_token, i)
        marks = [m for m in (p_open, p_close, seg_at) if m != -1]
        if not marks:
            builder.add_text(text[i:])
            break
        first = min(marks)
        if first == p_close:
            raise UnbalancedTag(f"'</p>' at offset {p_close} has no matching '<p>'")
        if first == seg_at:
            raise DanglingSeg(
                f"segmentation tag at offset {seg_at} has no preceding phrase"
            )

        builder.add_text(text[i:p_open])
        body_start = p_open + len(_P_OPEN)
        close = text.find(_P_CLOSE, body_start)
        reopen = text.find(_P_OPEN, body_start)
        if reopen != -1 and (close == -1 or reopen < close):
            raise NestedTag(f"'<p>' reopened at offset {reopen} before being closed")
        if close == -1:
            raise UnbalancedTag(f"'<p>' at offset {p_open} is never closed")
        body = text[body_start:close]
        if seg_token in body:
            raise NestedTag("segmentation tag inside a phrase")
        phrase = _normalize_phrase(body)
        if not phrase:
            raise DanglingSeg(f"empty phrase at offset {p_open}")

        # one or more seg tags may follow, separated by optional whitespace
        bindings: list[SegBinding] = []
        i = close + len(_P_CLOSE)
        while True:
            k = i
            while k < n and text[k].isspace():
                k += 1
            if dialect is Dialect.INLINE_SEG and text.startswith(_SEG_INLINE, k):
                bindings.append(SegBinding.ordinal(ordinal_count))
                ordinal_count += 1
                i = k + len(_SEG_INLINE)
            elif dialect is Dialect.ID_SEG and text.startswith(_SEG_ID_PREFIX, k):
                m = _ID_TAG.match(text, k)
                if m is None:
                    raise BadSegId(f"unterminated '[SEG:' tag at offset {k}")
                id_text = m.group(1).strip()
                if not id_text.isdigit():
                    raise BadSegId(f"segmentation id {id_text!r} is not a non-negative integer")
                bindings.append(SegBinding.explicit(int(id_text)))
                i = m.end()
            else:
                break
        if not bindings:
            raise DanglingSeg(f"phrase {phrase!r} has no segmentation tag")
        start, end = builder.add_phrase(phrase)
        spans.extend(PhraseSpan(start, end, phrase, b) for b in bindings)

    return GroundedCaption(builder.text(), tuple(spans), dialect)


def _parse_bracket(text: str) -> GroundedCaption:
    builder = _PlainBuilder()
    spans: list[PhraseSpan] = []
    i = 0
    n = len(text)
    while i < n:
        open_at = text.find("[", i)
        close_at = text.find("]", i)
        if close_at != -1 and (open_at == -1 or close_at < open_at):
            raise UnbalancedTag(f"']' at offset {close_at} has no matching '['")
        if open_at == -1:
            builder.add_text(text[i:])
            break
        builder.add_text(text[i:open_at])
        reopen = text.find("[", open_at + 1)
        close = text.find("]", open_at + 1)
        if close == -1:
            raise UnbalancedTag(f"'[' at offset {open_at} is never closed")
        if reopen != -1 and reopen < close:
            raise NestedTag(f"'[' reopened at offset {reopen} before being closed")
        phrase = _normalize_phrase(text[open_at + 1:close])
        if not phrase:
            raise DanglingSeg(f"empty phrase at offset {open_at}")
        after = close + 1
        if after >= n or text[after] != "(":
            raise DanglingSeg(f"phrase {phrase!r} is not followed by '(ids)'")
        paren_close = text.find(")", after + 1)
        if paren_close == -1:
            raise BadSegId(f"unterminated id list after phrase {phrase!r}")
        ids: list[int] = []
        for piece in text[after + 1:paren_close].split(","):
            piece = piece.strip()
            if not piece.isdigit():
                raise BadSegId(f"object id {piece!r} is not a non-negative integer")
            ids.append(int(piece))
        if not ids:
            raise BadSegId(f"empty id list after phrase {phrase!r}")
        start, end = builder.add_phrase(phrase)
        spans.extend(
            PhraseSpan(start, end, phrase, SegBinding.explicit(oid)) for oid in ids
        )
        i = paren_close + 1
    return GroundedCaption(builder.text(), tuple(spans), Dialect.BRACKET)


def parse(text: str, dialect: Dialect) -> GroundedCaption:
    """Parse tagged caption text into plain text plus bound phrase spans."""
    dialect = Dialect(dialect)
    if dialect is Dialect.BRACKET:
        return _parse_bracket(text)
    return _parse_p_dialect(text, dialect)


def strip_tags(text: str, dialect: Dialect) -> str:
    """Plain caption text with all grounding tags removed."""
    return parse(text, dialect).plain


def _grouped_spans(caption: GroundedCaption):
    """Yield (start, end, surface, [bindings]) with shared-offset spans merged."""
    group: list[PhraseSpan] = []
    for span in caption.spans:
        if group and (span.start, span.end) == (group[0].start, group[0].end):
            group.append(span)
            continue
        if group:
            yield group[0].start, group[0].end, group[0].surface, [s.binding for s in group]
        group = [span]
    if group:
        yield group[0].start, group[0].end, group[0].surface, [s.binding for s in group]


def serialize(caption: GroundedCaption, dialect: Dialect) -> str:
    """Render a caption in the requested dialect.

    Ordinal bindings convert to explicit ids by span order, so the output
    reparses to the same structure up to that relabeling.
    """
    dialect = Dialect(dialect)
    out: list[str] = []
    cursor = 0
    for start, end, surface, bindings in _grouped_spans(caption):
        out.append(caption.plain[cursor:start])
        if dialect is Dialect.INLINE_SEG:
            out.append(f"{_P_OPEN}{surface}{_P_CLOSE}")
            out.append(_SEG_INLINE * len(bindings))
        elif dialect is Dialect.ID_SEG:
            out.append(f"{_P_OPEN} {surface} {_P_CLOSE}")
            out.extend(f" [SEG:{b.id}]" for b in bindings)
        else:
            ids = ",".join(str(b.id) for b in bindings)
            out.append(f"[{surface}]({ids})")
        cursor = end
    out.append(caption.plain[cursor:])
    return "".join(out)


def with_explicit_ids(caption: GroundedCaption) -> GroundedCaption:
    """Relabel ordinal bindings as explicit ids assigned by span order."""
    if all(s.binding.kind == EXPLICIT for s in caption.spans):
        return caption
    spans = tuple(
        replace(s, binding=SegBinding.explicit(s.binding.id)) for s in caption.spans
    )
    return replace(caption, spans=spans)
