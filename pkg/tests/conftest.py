import numpy as np
import pytest

from foa_enhance.dsp import AudioBuffer
from foa_enhance.signals import speech_like

RATE = 16000

_acceptance = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def speech():
    return speech_like(3.0, RATE, np.random.default_rng(7))


def noise_at_snr(clean: np.ndarray, noise: np.ndarray, snr_db: float) -> np.ndarray:
    noise = noise[:clean.size]
    return noise * np.sqrt(np.sum(clean ** 2) / (np.sum(noise ** 2) * 10 ** (snr_db / 10)))


def buf(x, rate=RATE) -> AudioBuffer:
    return AudioBuffer(np.asarray(x, dtype=float), rate)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for marker, value in report.user_properties:
        if marker == "criterion":
            _acceptance.append((value, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in _acceptance:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
