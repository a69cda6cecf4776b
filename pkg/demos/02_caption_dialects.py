"""
Grounded-caption dialects
=========================

Three tag grammars bind caption phrases to segmentation tracks: inline
ordinal tags, explicit-id tags, and bracket notation. Parsing strips the
tags, normalizes whitespace, and yields character-exact phrase spans.
"""
from videoground import Dialect, parse, serialize, strip_tags

print("Grounded-caption dialects")
print("=" * 40)

###############################################################################
# Inline tags: the i-th <SEG> refers to the i-th predicted mask track.

inline = "<p>An adult woman in brown</p><SEG> is talking to another <p>adult man wearing jacket</p><SEG>"
caption = parse(inline, Dialect.INLINE_SEG)
print(f"plain text: {caption.plain!r}")
for span in caption.spans:
    print(f"  [{span.start:2d},{span.end:2d}) {span.surface!r} -> {span.binding.kind} {span.binding.id}")

###############################################################################
# Explicit ids: [SEG:x] names the object; the same id may appear under
# several phrases when one object is mentioned twice.

id_seg = (
    "A <p> weight </p> [SEG:1] lifter is in a <p> gym </p> [SEG:2] , "
    "and <p> he </p> [SEG:1] lifts a <p> barbell </p> [SEG:0]"
)
caption = parse(id_seg, Dialect.ID_SEG)
print(f"\nplain text: {caption.plain!r}")
print(f"binding ids in order: {caption.binding_ids()}")
print(f"tag-stripped: {strip_tags(id_seg, Dialect.ID_SEG)!r}")

###############################################################################
# Bracket notation, as produced by the relation-driven annotation stream.
# A phrase may carry several ids at once.

bracket = "there is a [white rabbit](0) leaning on an [adult](1) by the water"
caption = parse(bracket, Dialect.BRACKET)
print(f"\nplain text: {caption.plain!r}")

###############################################################################
# Dialects convert into each other; ordinal bindings become explicit ids
# assigned by span order.

converted = serialize(caption, Dialect.ID_SEG)
print(f"as explicit-id text: {converted!r}")
print(f"round-trips: {parse(converted, Dialect.ID_SEG).plain == caption.plain}")
