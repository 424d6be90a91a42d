"""Text-side preparation for the positional and counting metrics.

Captions are matched against a configurable set of positional words
(longest phrase first, case-insensitive, on token boundaries), mismatched
twins are built by antonym substitution, and counting candidates are
found through a small number-word lexicon. Ground-truth count annotation
remains a human step.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .artifacts import iter_jsonl
from .errors import FormatError, UnmappedWordError, ValidationError

DEFAULT_POSITIONAL_WORDS = (
    "above", "right", "far", "outside", "between", "below", "on top of",
    "bottom", "left", "inside", "in front of", "behind", "on", "near", "under",
)

# "between" has no usable antonym and is kept for matching statistics only.
DEFAULT_ANTONYMS = {
    "above": "below",
    "below": "above",
    "left": "right",
    "right": "left",
    "in front of": "behind",
    "behind": "in front of",
    "inside": "outside",
    "outside": "inside",
    "near": "far",
    "far": "near",
    "on top of": "under",
    "under": "on top of",
    "top": "bottom",
    "bottom": "top",
    "on": "under",
    "over": "under",
}

DEFAULT_NUMBER_LEXICON = {
    "a": 1, "an": 1,
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
    **{str(i): i for i in range(1, 11)},
}

_TOKEN_RE = re.compile(r"\w+(?:'\w+)*")


@dataclass(frozen=True)
class WordSetConfig:
    """Positional word set, antonym map, and optional class keyword lists.

    Matching always tries longer phrases first regardless of list order,
    so "on" never fires inside "on top of".
    """

    words: tuple[str, ...] = DEFAULT_POSITIONAL_WORDS
    antonym_map: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_ANTONYMS))
    class_keywords: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for word, antonym in self.antonym_map.items():
            if not antonym or not antonym.strip():
                raise ValidationError(f"antonym for {word!r} is empty")

    @classmethod
    def from_json(cls, path: str) -> "WordSetConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"cannot read word set {path!r}: {exc}") from exc
        return cls(
            words=tuple(raw.get("words", DEFAULT_POSITIONAL_WORDS)),
            antonym_map=dict(raw.get("antonym_map", DEFAULT_ANTONYMS)),
            class_keywords={cls_: tuple(kws) for cls_, kws in raw.get("class_keywords", {}).items()},
        )

    def content_hash(self) -> str:
        payload = json.dumps(
            {"words": list(self.words), "antonym_map": self.antonym_map},
            sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _tokens(text: str) -> list[tuple[str, int, int]]:
    return [(m.group(0).lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def _phrase_tokens(phrase: str) -> tuple[str, ...]:
    return tuple(tok for tok, _, _ in _tokens(phrase))


def _find_phrase(tokens, phrase: tuple[str, ...], consumed=None) -> Iterator[int]:
    """Yield start token indices of unconsumed occurrences of the phrase."""
    k = len(phrase)
    i = 0
    while i + k <= len(tokens):
        window = tuple(tok for tok, _, _ in tokens[i:i + k])
        free = consumed is None or not any(consumed[i:i + k])
        if window == phrase and free:
            yield i
            i += k
        else:
            i += 1


def match_positional_words(caption: str, config: WordSetConfig | None = None) -> list[str]:
    """Return the distinct configured positional words present in the caption.

    Longest phrases match first and consume their spans, so sub-phrases of
    an already matched phrase do not fire. Output follows word-set order.
    """
    config = config or WordSetConfig()
    tokens = _tokens(caption)
    consumed = [False] * len(tokens)
    order = sorted(range(len(config.words)),
                   key=lambda i: (-len(_phrase_tokens(config.words[i])), i))
    matched = set()
    for idx in order:
        word = config.words[idx]
        phrase = _phrase_tokens(word)
        for start in _find_phrase(tokens, phrase, consumed):
            for j in range(start, start + len(phrase)):
                consumed[j] = True
            matched.add(word)
    return [w for w in config.words if w in matched]


def make_mismatched_caption(caption: str, word: str,
                            config: WordSetConfig | None = None) -> str:
    """Replace the first occurrence of the word with its antonym.

    Every other character of the caption is preserved byte for byte.
    """
    config = config or WordSetConfig()
    if word not in config.antonym_map:
        raise UnmappedWordError(f"no antonym configured for {word!r}")
    tokens = _tokens(caption)
    phrase = _phrase_tokens(word)
    for start in _find_phrase(tokens, phrase):
        begin = tokens[start][1]
        end = tokens[start + len(phrase) - 1][2]
        return caption[:begin] + config.antonym_map[word] + caption[end:]
    raise ValidationError(f"word {word!r} does not occur in caption {caption!r}")


@dataclass(frozen=True)
class PaPair:
    caption_id: str
    matched: str
    mismatched: str


@dataclass(frozen=True)
class PaSets:
    """Matched/mismatched caption pairs grouped by positional word."""

    sets: dict[str, list[PaPair]]
    unmapped: dict[str, int]

    @property
    def counts(self) -> dict[str, int]:
        return {word: len(pairs) for word, pairs in self.sets.items()}


def build_pa_caption_sets(captions: Iterable[tuple[str, str]],
                          config: WordSetConfig | None = None) -> PaSets:
    """Build one matched/mismatched pair per caption per mappable matched word.

    Matched words without an antonym are tallied in ``unmapped`` as a
    coverage warning rather than failing the run.
    """
    config = config or WordSetConfig()
    sets: dict[str, list[PaPair]] = {}
    unmapped: dict[str, int] = {}
    for caption_id, text in captions:
        for word in match_positional_words(text, config):
            if word not in config.antonym_map:
                unmapped[word] = unmapped.get(word, 0) + 1
                continue
            pair = PaPair(caption_id=str(caption_id), matched=text,
                          mismatched=make_mismatched_caption(text, word, config))
            sets.setdefault(word, []).append(pair)
    return PaSets(sets=sets, unmapped=unmapped)


def filter_counting_captions(captions: Iterable[tuple[str, str]],
                             number_lexicon: dict[str, int] | None = None):
    """Yield captions with at least one number-word hit plus the parsed spans."""
    lexicon = DEFAULT_NUMBER_LEXICON if number_lexicon is None else number_lexicon
    for caption_id, text in captions:
        hits = [
            {"word": tok, "value": lexicon[tok], "start": start, "end": end}
            for tok, start, end in _tokens(text) if tok in lexicon
        ]
        if hits:
            yield {"id": str(caption_id), "text": text, "hits": hits}


def map_caption_to_classes(caption: str, config: WordSetConfig | None = None) -> list[str]:
    """Return classes whose keyword list intersects the caption tokens.

    Matching is case-insensitive with plural-s folding on the final token
    of each keyword ("horses" matches keyword "horse").
    """
    config = config or WordSetConfig()
    tokens = _tokens(caption)
    folded = [(tok, tok[:-1] if tok.endswith("s") else tok) for tok, _, _ in tokens]
    matched = []
    for cls, keywords in config.class_keywords.items():
        for keyword in keywords:
            phrase = _phrase_tokens(keyword)
            if not phrase:
                continue
            k = len(phrase)
            for i in range(len(folded) - k + 1):
                head_ok = all(folded[i + j][0] == phrase[j] for j in range(k - 1))
                last_raw, last_folded = folded[i + k - 1]
                if head_ok and (last_raw == phrase[-1] or last_folded == phrase[-1]):
                    matched.append(cls)
                    break
            if matched and matched[-1] == cls:
                break
    return matched


def load_captions(path: str) -> Iterator[tuple[str, str]]:
    """Stream (id, text) pairs from a .jsonl caption file."""
    for line_no, obj in iter_jsonl(path):
        if "id" not in obj or "text" not in obj:
            raise ValidationError("caption record needs keys 'id' and 'text'", line=line_no)
        yield str(obj["id"]), str(obj["text"])
