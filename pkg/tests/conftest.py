import pytest

from pulsecut.synth import SynthSpec, generate


@pytest.fixture(scope="session")
def clean_recording():
    """30 s, 75 bpm, 300 ms systole, +/-10% diastole jitter."""
    return generate(SynthSpec(hr_bpm=75, systole_ms=300, diastole_jitter_frac=0.10,
                              duration_s=30, seed=7))


def pytest_terminal_summary(terminalreporter):
    from helpers import REPORT
    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(REPORT, key=str):
        ok, detail = REPORT[key]
        status = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
        terminalreporter.write_line(f"criterion {key}: {status}  {detail}")
