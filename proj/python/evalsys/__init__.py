"""Teaching-staff evaluation core: banks, scoring, sessions and reports."""

import json

from ._evalsys import (
    EvalError,
    QuestionBank,
    Server,
    Service,
    default_bank,
    load_bank,
    load_bank_file,
    mark_from_mean,
    score_item,
)
from . import _evalsys

__all__ = [
    "EvalError",
    "QuestionBank",
    "Server",
    "Service",
    "default_bank",
    "load_bank",
    "load_bank_file",
    "mark_from_mean",
    "questionnaire_report",
    "score_item",
    "simulate",
]


def questionnaire_report(answers, bank):
    """Per-competence means and marks for one complete questionnaire."""
    return json.loads(_evalsys._questionnaire_report(list(answers), bank))


def simulate(seed, cohort, model="uniform", host="127.0.0.1", port=8080):
    """Drive a synthetic cohort through a running HTTP service."""
    return json.loads(_evalsys._simulate(seed, cohort, model, host, port))


def _decode(name):
    def method(self, *args, **kwargs):
        return json.loads(getattr(self, name)(*args, **kwargs))

    method.__name__ = name.lstrip("_")
    return method


Service.teachers = _decode("_teachers")
Service.set_state = _decode("_set_state")
Service.state = _decode("_state")
Service.current_question = _decode("_current_question")
Service.results = _decode("_results")
Service.unit_report = _decode("_unit_report")
Service.integrity = lambda self: self._integrity()
