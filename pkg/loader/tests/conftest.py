"""Fixtures: datasets produced by the generator CLI, nothing imported from it."""

import subprocess
import sys

import pytest


def run_cli(*args: str) -> str:
    proc = subprocess.run(
        [sys.executable, "-m", "evshape", *args],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, f"evshape {' '.join(args)}\n{proc.stderr}"
    return proc.stdout


@pytest.fixture(scope="session")
def cli():
    return run_cli


@pytest.fixture(scope="session")
def dataset_root(tmp_path_factory):
    """Sixteen drifting squares, separate seeds, indexed."""
    root = tmp_path_factory.mktemp("dataset")
    run_cli(
        "generate",
        "--out", str(root),
        "--count", "16",
        "--seed", "100",
        "--set", "width=32",
        "--set", "height=32",
        "--set", "length=16",
        "--set", "warmup=8",
        "--set", "translate.enabled=true",
        "--set", "translate.velocity_start=[0.3,0.15]",
    )
    return root


@pytest.fixture(scope="session")
def const_velocity_root(tmp_path_factory):
    """One recording whose center moves on an exactly representable line."""
    root = tmp_path_factory.mktemp("constvel")
    run_cli(
        "generate",
        "--out", str(root),
        "--count", "1",
        "--seed", "7",
        "--set", "width=48",
        "--set", "height=32",
        "--set", "length=24",
        "--set", "warmup=4",
        "--set", "translate.enabled=true",
        "--set", "translate.start=[12,16]",
        "--set", "translate.velocity_start=[0.5,-0.125]",
        "--set", "translate.velocity_delta=0",
    )
    return root


@pytest.fixture(scope="session")
def static_root(tmp_path_factory):
    """One recording with nothing moving, so zero events."""
    root = tmp_path_factory.mktemp("static")
    run_cli(
        "generate",
        "--out", str(root),
        "--count", "1",
        "--seed", "3",
        "--set", "width=16",
        "--set", "height=16",
        "--set", "length=8",
        "--set", "warmup=2",
    )
    return root


@pytest.fixture(scope="session")
def small_pair_root(tmp_path_factory):
    """Two tiny recordings, used as a template for corruption tests."""
    root = tmp_path_factory.mktemp("pair")
    run_cli(
        "generate",
        "--out", str(root),
        "--count", "2",
        "--seed", "50",
        "--set", "width=24",
        "--set", "height=24",
        "--set", "length=8",
        "--set", "warmup=4",
        "--set", "translate.enabled=true",
        "--set", "translate.velocity_start=[0.5,0.25]",
    )
    return root
