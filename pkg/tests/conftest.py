from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from syncst.corpus import CorpusConfig, generate

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

PAPER = Path(__file__).resolve().parents[1] / "paper.md"


@pytest.fixture(scope="session")
def paper_text():
    if not PAPER.exists():
        pytest.skip("paper.md not available")
    # the source wraps lines; compare on single-spaced text
    return " ".join(PAPER.read_text().split())


@pytest.fixture(scope="session")
def small_corpus():
    return generate(CorpusConfig(n_utts=6, tokens_range=(4, 8), seed=11))


@pytest.fixture(scope="session")
def clean_corpus():
    """Noise-free frames: the prototype model should decode these perfectly."""
    return generate(CorpusConfig(n_utts=6, tokens_range=(3, 6), noise=0.0, silence_prob=0.5, seed=4))


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance(request):
    """Criterion number -> (PASS/FAIL, one-line detail), printed at the end of the run."""
    return request.config.stash.setdefault(ACCEPTANCE, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        status, detail = results[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {detail}")
