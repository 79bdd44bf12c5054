"""Keyword sentiment archive, forecasts and LLM-written reports.

Structured results come back as plain dicts and lists.
"""
import json
import os
from pathlib import Path

from . import _core
from ._core import Lexicon, OracleError, classify, combine_score, score_text, tokenize

__all__ = [
    "Lexicon",
    "OracleError",
    "classify",
    "combine_score",
    "compare_models",
    "data_path",
    "default_lexicon",
    "forecast",
    "generate_report",
    "records",
    "run_cli",
    "score_text",
    "tokenize",
]


def data_path(*parts):
    """Bundled data file: the installed package copy, else $ORACLELOOM_SOURCE_DIR/data."""
    packaged = Path(__file__).parent / "data"
    if packaged.is_dir():
        return packaged.joinpath(*parts)
    root = os.environ.get("ORACLELOOM_SOURCE_DIR")
    if root:
        return Path(root, "data", *parts)
    raise FileNotFoundError("bundled data not installed and ORACLELOOM_SOURCE_DIR is unset")


def default_lexicon():
    return Lexicon.load(str(data_path("lexicon", "en_sentiment.tsv")))


def forecast(values, model="auto", horizon=3, start="2000-01-01"):
    return json.loads(_core.forecast_json(list(values), model, horizon, start))


def compare_models(values, holdout, start="2000-01-01"):
    return json.loads(_core.compare_models_json(list(values), holdout, start))


def records(data_dir, keyword, start, end, fill="none"):
    return json.loads(_core.records_json(str(data_dir), keyword, start, end, fill))


def generate_report(keyword, kind="present", **options):
    """Runs the pipeline and writes artifacts under <data_dir>/reports/<id>/.

    Options: start, end, url, now, config, data_dir, fixtures, lexicon,
    stopwords, provider. Lexicon and stopwords default to the bundled files.
    """
    options = {k: (str(v) if isinstance(v, os.PathLike) else v) for k, v in options.items()}
    options.setdefault("lexicon", str(data_path("lexicon", "en_sentiment.tsv")))
    options.setdefault("stopwords", str(data_path("lexicon", "stopwords_en.txt")))
    return json.loads(_core.generate_report_json(keyword, kind, **options))


def run_cli(*args):
    """Runs one CLI command in-process; returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])
