"""Fixture programs with data and a note on the expected behaviour."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

HERE = Path(__file__).parent


@dataclass(frozen=True)
class Fixture:
    name: str
    source: str
    data: dict
    note: str

    @property
    def path(self) -> Path:
        return HERE / f"{self.name}.slic"

    @property
    def data_path(self) -> Path:
        return HERE / f"{self.name}.json"

    def program(self):
        from ..frontend import parse

        return parse(self.source)


def load(name: str) -> Fixture:
    src = (HERE / f"{name}.slic").read_text()
    data = json.loads((HERE / f"{name}.json").read_text())
    note = (HERE / f"{name}.md").read_text()
    return Fixture(name, src, data, note)


def corpus() -> dict[str, Fixture]:
    return {p.stem: load(p.stem) for p in sorted(HERE.glob("*.slic"))}


def hmm_source(n: int) -> str:
    """Unrolled binary HMM with n hidden states z1..zn and observations y1..yn."""
    lines = ["data real<lower=0, upper=1>[2] alpha;", "data real<lower=0, upper=1>[2] beta;"]
    lines += [f"data int<lower=0, upper=1> y{i};" for i in range(1, n + 1)]
    lines.append("int<lower=0, upper=1> z1 ~ bernoulli(alpha[1]);")
    for i in range(2, n + 1):
        lines.append(f"int<lower=0, upper=1> z{i} ~ bernoulli(alpha[z{i - 1} + 1]);")
    for i in range(1, n + 1):
        lines.append(f"y{i} ~ bernoulli(beta[z{i} + 1]);")
    return "\n".join(lines) + "\n"


def hmm_data(n: int, alpha=(0.3, 0.8), beta=(0.2, 0.9), ys=None) -> dict:
    ys = ys if ys is not None else [(i * 7 + 3) % 2 for i in range(n)]
    out = {"alpha": list(alpha), "beta": list(beta)}
    out.update({f"y{i + 1}": int(v) for i, v in enumerate(ys)})
    return out
