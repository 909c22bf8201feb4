#!/usr/bin/env python3
"""
🧮 spikelab - Package Setup

Usage:
    pip install -e .          # Editable install with the `spikelab` command
    spikelab thresholds --prior bernoulli:0.02
"""

from pathlib import Path

from setuptools import find_packages, setup

project_root = Path(__file__).parent


def read_requirements():
    """Runtime requirements from requirements.txt (test tools excluded)."""
    requirements = []
    for line in (project_root / "requirements.txt").read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line and not line.startswith("pytest"):
            requirements.append(line)
    return requirements


setup(
    name="spikelab",
    version="0.1.0",
    description="Rank-one spiked Wigner estimation: replica potential, state evolution, AMP and spatial coupling",
    long_description=(project_root / "README.md").read_text(encoding="utf-8"),
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    python_requires=">=3.9",
    install_requires=read_requirements(),
    extras_require={"test": ["pytest>=8.0.0"]},
    entry_points={"console_scripts": ["spikelab=spikelab.cli:main"]},
)
