import pytest

from graphmem import prompts
from graphmem.errors import ParseError
from graphmem.parsing import fenced_lines, parse_item_lines, parse_thesis_line, parse_triplet_line


def test_all_templates_render():
    values = dict(
        text="t", existing="e", new="n", question="q", context="c", no_answer_token="[NO_ANSWER]",
        gold="g", prediction="p",
    )
    for name in prompts.NAMES:
        system, user = prompts.load(name).render(**values)
        assert system and user.startswith("TASK:")


def test_template_override_directory(tmp_path):
    (tmp_path / "judge.txt").write_text("### system\nS\n### user\nTASK: custom $question\n")
    assert prompts.load("judge", str(tmp_path)).render(question="q")[1] == "TASK: custom q"


def test_missing_placeholder_raises():
    with pytest.raises(KeyError):
        prompts.load("answer").render(question="q")


def test_fenced_lines():
    assert fenced_lines("prose\n```\na\n\n b \n```\nmore") == ["a", "b"]
    assert fenced_lines("```text\nx\n```") == ["x"]
    assert fenced_lines("nothing here ``````") == []
    with pytest.raises(ParseError):
        fenced_lines("I think the answer is a painting.")


def test_parse_triplet_line():
    assert parse_triplet_line("(Mona Lisa | creator | Leonardo da Vinci)") == ("Mona Lisa", "creator", "Leonardo da Vinci")
    assert parse_triplet_line("- a | b | c") == ("a", "b", "c")
    assert parse_triplet_line("just words") is None
    assert parse_triplet_line("a | | c") is None


def test_parse_thesis_line():
    assert parse_thesis_line("X is Y :: [X; Y; X]") == ("X is Y", ["X", "Y"])
    assert parse_thesis_line("no entities :: []") == ("no entities", [])
    assert parse_thesis_line("missing separator") is None


def test_parse_item_lines_dedups_and_strips_bullets():
    assert parse_item_lines(["- Apple", "2. k30u", '"Apple"']) == ["Apple", "k30u"]
