import string

import pytest

from t2ieval.captions import (DEFAULT_ANTONYMS, DEFAULT_NUMBER_LEXICON, DEFAULT_POSITIONAL_WORDS,
                              WordSetConfig, build_pa_caption_sets, filter_counting_captions,
                              load_captions, make_mismatched_caption, map_caption_to_classes,
                              match_positional_words)
from t2ieval.errors import UnmappedWordError, ValidationError


class TestMatchPositionalWords:
    def test_multiword_phrase(self):
        assert match_positional_words("A man is in front of the blue car") == ["in front of"]

    def test_longest_match_wins(self):
        assert match_positional_words("the cup on top of the shelf") == ["on top of"]

    def test_no_positional_words(self):
        assert match_positional_words("a red bird") == []

    def test_case_insensitive(self):
        lower = match_positional_words("the cat is under the table")
        assert match_positional_words("The Cat IS UNDER the Table") == lower == ["under"]

    def test_multiple_words_in_word_set_order(self):
        got = match_positional_words("a dog on the left near a tree")
        assert got == ["left", "on", "near"]
        assert [DEFAULT_POSITIONAL_WORDS.index(w) for w in got] == sorted(
            DEFAULT_POSITIONAL_WORDS.index(w) for w in got)

    def test_consumed_span_plus_free_occurrence(self):
        # "on" inside "on top of" is consumed, but the free "on" still matches.
        got = match_positional_words("the cup on top of the box on the shelf")
        assert got == ["on top of", "on"]

    def test_token_boundaries(self):
        assert match_positional_words("the onlooker moved onward") == []

    def test_word_set_is_the_documented_fifteen(self):
        assert len(DEFAULT_POSITIONAL_WORDS) == 15
        assert "between" in DEFAULT_POSITIONAL_WORDS
        assert "on top of" in DEFAULT_POSITIONAL_WORDS


class TestMakeMismatchedCaption:
    def test_front_to_behind(self):
        got = make_mismatched_caption("A man is in front of the blue car", "in front of")
        assert got == "A man is behind the blue car"

    def test_above_to_below(self):
        assert make_mismatched_caption("cat above the box", "above") == "cat below the box"

    def test_unmapped_word(self):
        with pytest.raises(UnmappedWordError):
            make_mismatched_caption("cat near the box", "between")

    def test_word_not_in_caption(self):
        with pytest.raises(ValidationError, match="does not occur"):
            make_mismatched_caption("cat near the box", "above")

    def test_first_occurrence_only(self):
        got = make_mismatched_caption("left box left shelf", "left")
        assert got == "right box left shelf"

    def test_surrounding_bytes_preserved(self):
        got = make_mismatched_caption("A dog,  ON the mat!", "on")
        assert got == "A dog,  under the mat!"

    def test_involution_over_symmetric_pairs(self):
        pairs = [(w, a) for w, a in DEFAULT_ANTONYMS.items()
                 if DEFAULT_ANTONYMS.get(a) == w and w < a]
        assert len(pairs) >= 6
        for word, antonym in pairs:
            caption = f"the cat {word} the box"
            swapped = make_mismatched_caption(caption, word)
            assert make_mismatched_caption(swapped, antonym) == caption


class TestBuildPaSets:
    CAPTIONS = [
        ("c1", "A man is in front of the blue car"),
        ("c2", "the cup on top of the shelf"),
        ("c3", "a bird above the cage between two trees"),
        ("c4", "a red bird"),
        ("c5", "the dog on the left"),
    ]

    def test_empty_stream(self):
        result = build_pa_caption_sets([])
        assert result.sets == {} and result.unmapped == {}

    def test_enumeration_fixture(self):
        result = build_pa_caption_sets(self.CAPTIONS)
        assert result.counts == {"in front of": 1, "on top of": 1, "above": 1,
                                 "on": 1, "left": 1}
        assert result.unmapped == {"between": 1}
        assert result.sets["above"][0].mismatched == "a bird below the cage between two trees"
        assert result.sets["on"][0].caption_id == "c5"

    def test_caption_in_multiple_word_sets(self):
        result = build_pa_caption_sets([("x", "the ball is on the left")])
        assert set(result.sets) == {"on", "left"}

    def test_pair_count_matches_mappable_matches(self):
        result = build_pa_caption_sets(self.CAPTIONS)
        expected = sum(
            1
            for _, text in self.CAPTIONS
            for w in match_positional_words(text)
            if w in DEFAULT_ANTONYMS
        )
        assert sum(result.counts.values()) == expected == 5


def scan_oracle(text, lexicon):
    """Regex-free token scan used to cross-check the counting filter."""
    hits = []
    for raw in text.lower().split():
        tok = raw.strip(string.punctuation)
        if tok in lexicon:
            hits.append((tok, lexicon[tok]))
    return hits


class TestFilterCountingCaptions:
    def test_hand_cases(self):
        out = list(filter_counting_captions([("a", "two dogs on a couch"),
                                             ("b", "the dog runs")]))
        assert len(out) == 1
        assert out[0]["id"] == "a"
        assert [(h["word"], h["value"]) for h in out[0]["hits"]] == [("two", 2), ("a", 1)]

    def test_digit_tokens(self):
        out = list(filter_counting_captions([("x", "3 cats and 10 dogs")]))
        assert [(h["word"], h["value"]) for h in out[0]["hits"]] == [("3", 3), ("10", 10)]

    def test_twenty_caption_fixture_matches_scan_oracle(self, rng):
        nouns = ["dog", "cat", "table", "person", "kite", "car"]
        numbers = ["one", "two", "three", "seven", "4", "a"]
        fillers = ["the", "big", "runs", "sleeping", "red"]
        captions = []
        for i in range(20):
            words = [str(rng.choice(fillers)) for _ in range(4)]
            if rng.integers(0, 2):
                words.insert(int(rng.integers(0, 4)), str(rng.choice(numbers)))
            words.append(str(rng.choice(nouns)))
            captions.append((str(i), " ".join(words)))
        got = {c["id"]: [(h["word"], h["value"]) for h in c["hits"]]
               for c in filter_counting_captions(captions)}
        expected = {cid: scan_oracle(text, DEFAULT_NUMBER_LEXICON)
                    for cid, text in captions if scan_oracle(text, DEFAULT_NUMBER_LEXICON)}
        assert got == expected


class TestMapCaptionToClasses:
    CONFIG = WordSetConfig(class_keywords={
        "person": ("man", "woman", "people"),
        "horse": ("horse",),
        "dining table": ("table", "dining table"),
    })

    def test_keyword_scan(self):
        assert map_caption_to_classes("a man rides a horse", self.CONFIG) == ["person", "horse"]

    def test_empty_config(self):
        assert map_caption_to_classes("a man rides a horse", WordSetConfig()) == []

    def test_plural_folding(self):
        assert map_caption_to_classes("three horses", self.CONFIG) == ["horse"]

    def test_case_insensitive(self):
        assert map_caption_to_classes("A WOMAN at the Table", self.CONFIG) == ["person", "dining table"]


class TestWordSetConfig:
    def test_from_json_round_trip(self, tmp_path):
        path = tmp_path / "ws.json"
        path.write_text('{"words": ["left", "right"], "antonym_map": {"left": "right", "right": "left"}}')
        config = WordSetConfig.from_json(str(path))
        assert config.words == ("left", "right")
        assert config.content_hash() != WordSetConfig().content_hash()

    def test_empty_antonym_rejected(self):
        with pytest.raises(ValidationError):
            WordSetConfig(antonym_map={"left": " "})

    def test_load_captions(self, tmp_path):
        path = tmp_path / "caps.jsonl"
        path.write_text('{"id": "1", "text": "hello"}\n{"id": "2", "text": "world"}\n')
        assert list(load_captions(str(path))) == [("1", "hello"), ("2", "world")]
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "1"}\n')
        with pytest.raises(ValidationError, match="line 1"):
            list(load_captions(str(bad)))
