"""Metrics, judging, batch evaluation and dataset preparation."""

from .judge import JudgeResult, judge, parse_label
from .metrics import exact_match, normalize_answer
from .preprocess import PreprocessResult, preprocess_corpus
from .runner import EvalRecord, EvalReport, Question, read_questions, read_report, run_eval
from .splitter import Fragment, reconstruct, split_text

__all__ = [
    "EvalRecord",
    "EvalReport",
    "Fragment",
    "JudgeResult",
    "PreprocessResult",
    "Question",
    "exact_match",
    "judge",
    "normalize_answer",
    "parse_label",
    "preprocess_corpus",
    "read_questions",
    "read_report",
    "reconstruct",
    "run_eval",
    "split_text",
]
