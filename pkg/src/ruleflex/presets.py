"""Bundled demo inputs: the remote-triage problem statement and paths to the
packaged expert rules and replay fixture bundles."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

DEMO_DOMAIN = "Medical"

DEMO_OBJECTIVE = (
    "Classify COVID-19 patient's health status for developing pandemic intervention "
    "monitoring system to help clinicians determine if patient should receive medical "
    "attention. The classification must be as follows: GREEN, AMBER, RED."
)


def data_path(*parts: str) -> Path:
    root = resources.files("ruleflex") / "data"
    return Path(str(root.joinpath(*parts)))


def expert_rules_path() -> Path:
    return data_path("expert_rules.dsl")


def fixture_bundle_path(name: str) -> Path:
    """Bundled replay fixture directories, one per simulated model."""
    path = data_path("fixtures", name)
    if not path.is_dir():
        names = sorted(p.name for p in data_path("fixtures").iterdir())
        raise FileNotFoundError(f"no fixture bundle {name!r}; bundled: {names}")
    return path
