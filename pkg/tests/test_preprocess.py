import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sentibench.preprocess import (SlangParseError, TextPreprocessor, case_fold, cleanse,
                                   default_slang_dict, load_slang_dict, normalize_slang,
                                   parse_slang_lines, preprocess_text, run_pipeline,
                                   tokenize_filter)

SLANG = {"bgt": "banget"}


@pytest.mark.parametrize("text,expected", [("MANTAP Banget", "mantap banget"), ("", ""),
                                           ("Bagus123", "bagus123")])
def test_case_fold(text, expected):
    assert case_fold(text) == expected


def test_cleanse_rules_by_hand():
    out = cleanse("bagus bgt! cek https://toko.id @seller #promo 123")
    assert out.split() == ["bagus", "bgt", "cek"]
    assert cleanse("<b>ok</b>") == "ok"
    assert cleanse("mantap") == "mantap"


def test_cleanse_never_merges_words():
    assert cleanse("bagus,mantap").split() == ["bagus", "mantap"]
    assert cleanse("rusak…parah").split() == ["rusak", "parah"]
    assert cleanse("a@b").split() == ["a"]


def test_normalize_slang_examples():
    assert normalize_slang(["bagus", "bgt"], SLANG) == ["bagus", "banget"]
    assert normalize_slang([], SLANG) == []
    assert normalize_slang(["banget"], SLANG) == ["banget"]


def test_tokenize_filter_examples():
    assert tokenize_filter("a ok banget") == ["ok", "banget"]
    assert tokenize_filter("  mantap   sekali ") == ["mantap", "sekali"]
    assert tokenize_filter("") == []


def test_run_pipeline_examples():
    doc = run_pipeline("Bagus BGT!!! https://x.co", SLANG, 1)
    assert doc.tokens == ("bagus", "banget") and doc.label == 1
    assert run_pipeline("", SLANG, 0).tokens == ()
    assert run_pipeline("ok ok ok", {}, 1).tokens == ("ok", "ok", "ok")


def test_slang_runs_before_length_filter():
    # a one-letter key expands; filtering first would have dropped it
    slang = {"g": "tidak"}
    assert preprocess_text("g suka", slang) == ["tidak", "suka"]
    assert [t for t in normalize_slang(tokenize_filter("g suka"), slang)] == ["suka"]


def test_slang_value_can_be_filtered():
    assert preprocess_text("mantap x", {"x": "y"}) == ["mantap"]


def test_slang_file_parsing(tmp_path):
    p = tmp_path / "s.tsv"
    p.write_text("bgt\tbanget\n", encoding="utf-8")
    assert dict(load_slang_dict(p)) == {"bgt": "banget"}
    empty = tmp_path / "e.tsv"
    empty.write_text("", encoding="utf-8")
    assert dict(load_slang_dict(empty)) == {}
    assert dict(parse_slang_lines(["BGT\tBanget"])) == {"bgt": "banget"}
    assert dict(parse_slang_lines(["# comment", "", "a\tb", "a\tc"])) == {"a": "c"}


@pytest.mark.parametrize("line", ["nokey", "a\tb\tc", "\tb", "a b\tc"])
def test_slang_parse_errors_carry_line_number(line):
    with pytest.raises(SlangParseError) as exc:
        parse_slang_lines(["ok\toke", line])
    assert exc.value.lineno == 2


def test_default_dictionary_is_single_pass_safe():
    slang = default_slang_dict()
    assert slang["bgt"] == "banget"
    assert not set(slang.values()) & set(slang)


def test_transformer_wraps_pipeline():
    pre = TextPreprocessor(slang=SLANG).fit(["x"])
    assert pre.transform(["Bagus BGT"]) == [["bagus", "banget"]]


_text = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=80)


@settings(max_examples=200, deadline=None)
@given(_text)
def test_tokens_are_clean(text):
    slang = default_slang_dict()
    tokens = preprocess_text(text, slang)
    for t in tokens:
        assert len(t) >= 2 and t == t.lower()
        assert not any(c.isspace() or c.isdigit() for c in t)
    # cleaning already-clean text is a fixed point
    assert preprocess_text(" ".join(tokens), slang) == tokens
