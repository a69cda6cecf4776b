"""Caption quality metrics: METEOR, CIDEr, and the LLM-judged CLAIR score.

All metrics operate on tag-stripped text, tokenized as lowercased words
with punctuation split into separate tokens. METEOR here uses the exact
and stem matching stages only (stemming via the classic suffix-stripping
algorithm); no synonym lexicon is consulted, which is a documented
divergence from the full metric.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter

from .errors import (
    ChatFailure,
    CorpusTooSmall,
    JudgeUnavailable,
    UnparseableJudgeReply,
)

__all__ = [
    "tokenize",
    "porter_stem",
    "meteor",
    "cider",
    "cider_per_item",
    "clair_score",
    "CLAIR_JUDGE_TEMPLATE",
]

_TOKEN = re.compile(r"\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens with punctuation separated out."""
    return _TOKEN.findall(text.lower())


# ---------------------------------------------------------------- stemming
#
# The 1980 suffix-stripping algorithm; within each rule step the longest
# matching suffix wins and, if its condition fails, the step applies
# nothing.

_VOWELS = frozenset("aeiou")


def _is_cons(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_cons(word, i - 1)
    return True


def _measure(stem: str) -> int:
    m = 0
    i = 0
    n = len(stem)
    while i < n and _is_cons(stem, i):
        i += 1
    while i < n:
        while i < n and not _is_cons(stem, i):
            i += 1
        if i >= n:
            break
        m += 1
        while i < n and _is_cons(stem, i):
            i += 1
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_cons(stem, i) for i in range(len(stem)))


def _ends_double_cons(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_cons(word, len(word) - 1)
    )


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    n = len(word)
    return (
        _is_cons(word, n - 3)
        and not _is_cons(word, n - 2)
        and _is_cons(word, n - 1)
        and word[-1] not in "wxy"
    )


def _apply_longest(word: str, rules, min_measure: int) -> str:
    best = None
    for suffix, repl in rules:
        if word.endswith(suffix) and (best is None or len(suffix) > len(best[0])):
            best = (suffix, repl)
    if best is None:
        return word
    stem = word[: len(word) - len(best[0])]
    if _measure(stem) > min_measure:
        return stem + best[1]
    return word


_STEP2 = [
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
]

_STEP3 = [
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
]

_STEP4 = [
    ("al", ""), ("ance", ""), ("ence", ""), ("er", ""), ("ic", ""),
    ("able", ""), ("ible", ""), ("ant", ""), ("ement", ""), ("ment", ""),
    ("ent", ""), ("ion", ""), ("ou", ""), ("ism", ""), ("ate", ""),
    ("iti", ""), ("ous", ""), ("ive", ""), ("ize", ""),
]


def porter_stem(word: str) -> str:
    if len(word) <= 2:
        return word
    w = word

    # step 1a
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif not w.endswith("ss") and w.endswith("s"):
        w = w[:-1]

    # step 1b
    fix_up = False
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    elif w.endswith("ed") and _has_vowel(w[:-2]):
        w = w[:-2]
        fix_up = True
    elif w.endswith("ing") and _has_vowel(w[:-3]):
        w = w[:-3]
        fix_up = True
    if fix_up:
        if w.endswith(("at", "bl", "iz")):
            w += "e"
        elif _ends_double_cons(w) and w[-1] not in "lsz":
            w = w[:-1]
        elif _measure(w) == 1 and _ends_cvc(w):
            w += "e"

    # step 1c
    if w.endswith("y") and _has_vowel(w[:-1]):
        w = w[:-1] + "i"

    w = _apply_longest(w, _STEP2, 0)
    w = _apply_longest(w, _STEP3, 0)

    # step 4: plain deletions at m > 1, with the s/t guard on "ion"
    best = None
    for suffix, _ in _STEP4:
        if w.endswith(suffix) and (best is None or len(suffix) > len(best)):
            best = suffix
    if best is not None:
        stem = w[: len(w) - len(best)]
        if _measure(stem) > 1 and (best != "ion" or stem.endswith(("s", "t"))):
            w = stem

    # step 5a
    if w.endswith("e"):
        stem = w[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            w = stem
    # step 5b
    if _measure(w) > 1 and _ends_double_cons(w) and w.endswith("l"):
        w = w[:-1]
    return w


# ------------------------------------------------------------------ METEOR

def _align(cand: list[str], ref: list[str]) -> list[tuple[int, int]]:
    """Two-stage unigram alignment: exact words, then stems.

    Within each stage the reference position continuing the previous match
    is preferred, keeping fragmentation minimal; remaining ties take the
    leftmost free reference word.
    """
    assigned: list[int | None] = [None] * len(cand)
    ref_used = [False] * len(ref)
    for key in (lambda word: word, porter_stem):
        ckeys = [key(word) for word in cand]
        rkeys = [key(word) for word in ref]
        prev_ri = -1
        for ci in range(len(cand)):
            if assigned[ci] is not None:
                prev_ri = assigned[ci]
                continue
            choice = None
            follow = prev_ri + 1
            if follow < len(ref) and not ref_used[follow] and rkeys[follow] == ckeys[ci]:
                choice = follow
            else:
                for ri in range(len(ref)):
                    if not ref_used[ri] and rkeys[ri] == ckeys[ci]:
                        choice = ri
                        break
            if choice is not None:
                assigned[ci] = choice
                ref_used[choice] = True
                prev_ri = choice
    return [(ci, ri) for ci, ri in enumerate(assigned) if ri is not None]


def _chunks(pairs: list[tuple[int, int]]) -> int:
    count = 0
    prev = None
    for ci, ri in pairs:
        if prev is None or ci != prev[0] + 1 or ri != prev[1] + 1:
            count += 1
        prev = (ci, ri)
    return count


def _meteor_single(cand: list[str], ref: list[str]) -> float:
    if not cand or not ref:
        return 0.0
    pairs = _align(cand, ref)
    matches = len(pairs)
    if matches == 0:
        return 0.0
    precision = matches / len(cand)
    recall = matches / len(ref)
    f_mean = 10 * precision * recall / (recall + 9 * precision)
    penalty = 0.5 * (_chunks(pairs) / matches) ** 3
    return f_mean * (1 - penalty)


def meteor(candidate: str, references: list[str]) -> float:
    """Unigram-alignment score with fragmentation penalty, max over references."""
    cand = tokenize(candidate)
    return max((_meteor_single(cand, tokenize(r)) for r in references), default=0.0)


# ------------------------------------------------------------------- CIDEr

_MAX_NGRAM = 4


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _tfidf_vector(tokens: list[str], idf_n: dict, default_idf: float, n: int):
    counts = _ngram_counts(tokens, n)
    vec = {g: c * idf_n.get(g, default_idf) for g, c in counts.items()}
    norm = math.sqrt(sum(v * v for v in vec.values()))
    return vec, norm


def _clipped_cosine(cvec, cnorm, rvec, rnorm) -> float:
    if cnorm == 0 or rnorm == 0:
        return 0.0
    num = sum(min(v, rvec[g]) * rvec[g] for g, v in cvec.items() if g in rvec)
    return num / (cnorm * rnorm)


def cider_per_item(pairs: list[tuple[str, list[str]]]) -> list[float]:
    """Per-item consensus scores on the 0..10 scale.

    ``pairs`` is the whole corpus of (candidate, references); document
    frequencies come from the reference sets, so at least two items are
    required for the idf to carry any contrast.
    """
    if len(pairs) < 2:
        raise CorpusTooSmall(
            f"consensus scoring needs at least 2 items, got {len(pairs)}"
        )
    corpus_size = len(pairs)
    ref_tokens = [[tokenize(r) for r in refs] for _, refs in pairs]
    cand_tokens = [tokenize(c) for c, _ in pairs]

    df: list[Counter] = [Counter() for _ in range(_MAX_NGRAM)]
    for refs in ref_tokens:
        for n in range(1, _MAX_NGRAM + 1):
            seen = set()
            for ref in refs:
                seen.update(_ngram_counts(ref, n))
            for g in seen:
                df[n - 1][g] += 1

    idf = [
        {g: math.log(corpus_size / max(d, 1)) for g, d in df[n].items()}
        for n in range(_MAX_NGRAM)
    ]
    default_idf = math.log(corpus_size)  # n-grams unseen in any reference set

    scores = []
    for cand, refs in zip(cand_tokens, ref_tokens):
        per_n = []
        for n in range(1, _MAX_NGRAM + 1):
            cvec, cnorm = _tfidf_vector(cand, idf[n - 1], default_idf, n)
            sims = []
            for ref in refs:
                rvec, rnorm = _tfidf_vector(ref, idf[n - 1], default_idf, n)
                sims.append(_clipped_cosine(cvec, cnorm, rvec, rnorm))
            per_n.append(10.0 * sum(sims) / len(sims) if sims else 0.0)
        scores.append(sum(per_n) / len(per_n))
    return scores


def cider(pairs: list[tuple[str, list[str]]]) -> float:
    """Corpus-mean consensus score (0..10)."""
    scores = cider_per_item(pairs)
    return sum(scores) / len(scores)


# ------------------------------------------------------------------- CLAIR

CLAIR_JUDGE_TEMPLATE = """\
You are comparing a candidate caption against reference captions for the same video.

Candidate caption:
{candidate}

Reference captions:
{references}

On a scale of 0 to 100, how likely is it that the candidate caption and the reference captions describe the same video? Consider the objects mentioned, their attributes, the actions performed, and the overall scene. Respond in JSON format with two keys: "score" (an integer from 0 to 100) and "reason" (one short sentence)."""


def render_clair_prompt(candidate: str, references: list[str]) -> str:
    return CLAIR_JUDGE_TEMPLATE.replace("{candidate}", candidate).replace(
        "{references}", "\n".join(references)
    )


def _extract_score(reply: str):
    text = reply.strip()
    for candidate in (text, text[text.find("{"):text.rfind("}") + 1]):
        if not candidate:
            continue
        try:
            obj = json.loads(candidate)
        except (ValueError, TypeError):
            continue
        if isinstance(obj, dict) and isinstance(obj.get("score"), (int, float)):
            score = float(obj["score"])
            if 0 <= score <= 100:
                return score
    return None


def clair_score(candidate: str, references: list[str], judge,
                max_parse_retries: int = 2) -> float:
    """Judge-rated 0..100 similarity of a candidate to its references.

    Deterministic decoding is requested; malformed replies are retried up
    to ``max_parse_retries`` extra times before giving up.
    """
    prompt = render_clair_prompt(candidate, references)
    for _ in range(max_parse_retries + 1):
        try:
            reply = judge.chat(prompt, temperature=0.0)
        except ChatFailure as exc:
            raise JudgeUnavailable(f"judge endpoint failed: {exc}") from exc
        score = _extract_score(reply)
        if score is not None:
            return score
    raise UnparseableJudgeReply(
        f"no numeric score after {max_parse_retries + 1} attempts"
    )
