from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from enactive.cli import builtin_document  # noqa: E402
from enactive.documents import parse_document  # noqa: E402
from enactive.formalism import Environment, Vocabulary, derive_language  # noqa: E402
from helpers import ACCEPTANCE_LINES  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def five():
    """f1={0,1}, f2={1,2}, f3={2,3}: five statements."""
    vocab = Vocabulary.from_states(Environment(4), [[0, 1], [1, 2], [2, 3]])
    return derive_language(vocab)


@pytest.fixture(scope="session")
def prop3_doc():
    return parse_document(builtin_document("prop3"), "<prop3>")


@pytest.fixture(scope="session")
def prop3(prop3_doc):
    return prop3_doc.language


@pytest.fixture(scope="session")
def alpha(prop3_doc):
    return prop3_doc.tasks["alpha"]
