#!/usr/bin/env python3
"""Regenerate the frozen demo word-vector table shipped with the package.

Words are grouped into coarse semantic clusters; every word's vector is its
cluster centre plus a small seeded perturbation, so connectives of the same
family score high cosine similarity while unrelated words do not.  The output
is deterministic: rerunning this script reproduces the committed file
byte-for-byte.

Usage: python3 tools/make_demo_vectors.py [out_path]
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

DIMENSION = 24
NOISE = 0.22
SEED = 7

CLUSTERS: dict[str, str] = {
    "causal": (
        "because since given therefore thus hence consequently so result"
    ),
    "additive": (
        "moreover furthermore indeed fact addition additionally besides also"
    ),
    "contrast": (
        "although though even if however conversely nevertheless nonetheless"
        " contrast instead rather yet still but hand"
    ),
    "temporal": "as then meanwhile afterwards finally first when while after",
    "stance": "opinion think believe conclusion sum overall say argue",
    "exemplify": "example instance words specifically particular",
    "function": (
        "the a an of to in on at by for with that this these those is are was"
        " were be have has will can it its we they i my their and not no all"
        " up other out into from between more every some"
    ),
    "climate": (
        "carbon taxes emissions climate change clean energy solar panel"
        " rooftop generation grid environment environmental ecological nature"
        " green"
    ),
    "economy": (
        "economy cost costs prices bills income tax cash payments coins"
        " budgets strain strains demand rates upfront"
    ),
    "transport": (
        "rail train routes sleeper carriages flights night overnight bike"
        " bikes docking stations pavement city council parks spaces"
    ),
    "school": (
        "schools students uniform requirements dress code expression outlet"
        " gaps self"
    ),
    "commerce": (
        "shops networks terminals queue till developers operators services"
        " staffing offices scheme mandates buildings"
    ),
    "weather": "rains soaked field picnic cancelled stay home weekend",
    "actions": (
        "introduce abolish adopt reject keep drop accept refuse expand cut"
        " extend scrap embrace fight protect act helps needs works fail lose"
        " died cover replace swallow fit add grew rose fell slows softens"
        " cuts"
    ),
    "beings": (
        "people humanity plants animals great number small short"
        " common visible harmless scarce shared public new unable rarely"
        " alone further last mile order haul fraction load space laws must"
        " should"
    ),
}


def build() -> list[tuple[str, np.ndarray]]:
    rng = np.random.default_rng(SEED)
    rows: list[tuple[str, np.ndarray]] = []
    seen: set[str] = set()
    for words in CLUSTERS.values():
        centre = rng.normal(0.0, 1.0, DIMENSION)
        for word in words.split():
            if word in seen:
                raise SystemExit(f"duplicate word across clusters: {word!r}")
            seen.add(word)
            rows.append((word, centre + rng.normal(0.0, NOISE, DIMENSION)))
    return rows


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent.parent / "src" / "dmaug" / "data" / "demo_vectors.txt"
    )
    rows = build()
    lines = [f"{len(rows)} {DIMENSION}"]
    for word, vec in rows:
        lines.append(word + " " + " ".join(f"{x:.5f}" for x in vec))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} vectors of dimension {DIMENSION} to {out}")


if __name__ == "__main__":
    main()
