import numpy as np
import pytest

from gaitsynth import mocap
from gaitsynth.walker import (ConfounderConfig, default_identity, generate_sequence,
                              synthesize_kinematics, walker_skeleton)


def world_positions(identity, speed=5.0, duration=1.2, fps=25.0):
    clip = synthesize_kinematics(identity, speed, duration, fps)
    return mocap.forward_kinematics_positions(clip.skeleton, clip.rotations, clip.root_translation)


@pytest.fixture(scope="session")
def identity():
    return default_identity("fixture")


@pytest.fixture(scope="session")
def rest_positions(identity):
    return walker_skeleton(identity).rest_positions()


@pytest.fixture(scope="session")
def walk_positions(identity):
    return world_positions(identity)


@pytest.fixture(scope="session")
def clean_sequence(identity):
    """Four seconds of noise-free walking at 5 km/h, 25 fps."""
    return generate_sequence(identity, ConfounderConfig(), 4.0, 25.0, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance verdicts, printed once at the end of the run
ACCEPTANCE = {}


def record(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
