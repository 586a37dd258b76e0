from __future__ import annotations

import numpy as np
import pytest

from sgtrack.appearance import Frame

# filled by test_acceptance.py, printed once at the end of the session
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def solid_frame(width: int, height: int, color=(40, 140, 60), patches=()) -> Frame:
    """Flat background with ``(x0, y0, x1, y1, rgb)`` rectangles painted in order."""
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:] = color
    for x0, y0, x1, y1, rgb in patches:
        img[y0:y1, x0:x1] = rgb
    return Frame(img)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
