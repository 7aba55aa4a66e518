"""Regenerate the JSON fixtures in src/flexvol/data."""

from __future__ import annotations

from pathlib import Path

from flexvol import io
from flexvol.flexion import bricard_octahedron, octahedron_complex, quadrilateral
from flexvol.gram import HypersurfaceId, Space
from flexvol.loops import basepoint, circuit
from flexvol.polyhedra import EdgeLengthSet

import numpy as np

DATA = Path(__file__).resolve().parents[1] / "src" / "flexvol" / "data"


def write(name: str, obj) -> None:
    (DATA / name).write_text(io.dumps(obj))


def loops(n: int, space: Space, labels: list[str]) -> dict:
    base = basepoint(n, space)
    rng = np.random.default_rng(0)
    out = []
    for lab in labels:
        c = circuit(HypersurfaceId.parse(lab), base, space, rng=rng)
        item = io.path_to_json(c.path, space)
        out.append({"label": c.label, "waypoints": item["waypoints"],
                    "samples_per_segment": item["samples_per_segment"]})
    return {"n": n, "space": space.value, "loops": out}


def main() -> None:
    DATA.mkdir(exist_ok=True)
    k = octahedron_complex()
    write("octahedron.json", io.complex_to_json(k))

    k, p = bricard_octahedron(seed=0)
    write("bricard_octahedron.json", {"complex": io.complex_to_json(k), **io.configuration_to_json(p)})
    write("bricard_lengths.json", io.lengths_to_json(EdgeLengthSet.from_configuration(k, p)))

    k, p = quadrilateral()
    write("quadrilateral.json", {"complex": io.complex_to_json(k), **io.configuration_to_json(p)})
    write("quadrilateral_complex.json", io.complex_to_json(k))
    write("quadrilateral_lengths.json", io.lengths_to_json(EdgeLengthSet.from_configuration(k, p)))

    write("loops_n1.json", loops(1, Space.HYPERBOLIC, ["H{0,1}+", "H{0,1}-"]))
    write("loops_n2.json", loops(2, Space.HYPERBOLIC, ["H{0,1,2}", "H{0,1}+", "H{0,1}-"]))
    write("loops_n3.json", loops(3, Space.HYPERBOLIC, ["H{0,1,2,3}", "H{0,1,2}", "H{0,1}+", "H{0,1}-"]))


if __name__ == "__main__":
    main()
