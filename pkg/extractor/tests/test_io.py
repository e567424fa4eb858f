import pytest

from misinfonet_extractor.io import CorpusError, read_corpus, write_corpus


def test_roundtrip(tmp_path):
    docs = [{"id": "a", "text": "naïve café", "label": "x"},
            {"id": "b", "text": "plain", "label": "y"}]
    p = tmp_path / "c.jsonl"
    write_corpus(p, docs)
    assert read_corpus(p) == docs


def test_blank_lines_skipped(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text('{"id": "a", "text": "t", "label": "x"}\n\n'
                 '{"id": "b", "text": "u", "label": "y"}\n')
    assert len(read_corpus(p)) == 2


def test_invalid_json_line_numbered(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text('{"id": "a", "text": "t", "label": "x"}\nnot json\n')
    with pytest.raises(CorpusError, match="line 2"):
        read_corpus(p)


def test_missing_field_named(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text('{"id": "a", "text": "t"}\n')
    with pytest.raises(CorpusError, match=r"line 1.*label"):
        read_corpus(p)


def test_non_object_line(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text('[1, 2]\n')
    with pytest.raises(CorpusError, match="expected an object"):
        read_corpus(p)


def test_ids_coerced_to_str(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text('{"id": 7, "text": "t", "label": "x"}\n')
    assert read_corpus(p)[0]["id"] == "7"
