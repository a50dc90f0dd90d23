import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import splatseg as ss

_CRITERIA: dict[int, tuple[str, bool, str]] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    """Stash one acceptance-criterion verdict for the terminal summary."""
    _CRITERIA[number] = (title, bool(passed), detail)


@pytest.fixture(scope="session", autouse=True)
def _jit_warmup():
    ss.warmup()


@pytest.fixture(scope="session")
def standard_fixture():
    """The packaged synthetic scene: (spec, scene, gt labels, views, masks)."""
    spec = ss.standard_spec()
    scene, gt = ss.generate_scene(spec)
    views = ss.generate_orbit(spec)
    masks = ss.generate_gt_masks(scene, gt, views)
    return spec, scene, gt, views, masks


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed, detail = _CRITERIA[number]
        verdict = "PASS" if passed else "FAIL"
        suffix = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"criterion {number}: {verdict} - {title}{suffix}")
