"""Regenerates the supercell fixtures in this directory."""
import json
import math
import random
from pathlib import Path

HERE = Path(__file__).parent


def dump(name, box, atoms):
    doc = {"box": box, "atoms": atoms}
    (HERE / name).write_text(json.dumps(doc, indent=1) + "\n")


def toy_cube():
    # 3x3x3 grid in the unit cube; atom 1 sits at (5/6, 1/6, 1/6).
    atoms = []
    for k in range(3):
        for j in range(3):
            for i in (2, 1, 0):
                pos = [(i + 0.5) / 3, (j + 0.5) / 3, (k + 0.5) / 3]
                atoms.append({"id": len(atoms) + 1, "type": "A" if (i + j + k) % 2 == 0 else "B", "pos": pos})
    dump("toy_cube.json", [1.0, 1.0, 1.0], atoms)


def fcc32():
    basis = [(0, 0, 0), (0.5, 0.5, 0), (0.5, 0, 0.5), (0, 0.5, 0.5)]
    labels = ["Ni", "Cr", "Co", "Fe"]
    atoms = []
    for cx in range(2):
        for cy in range(2):
            for cz in range(2):
                for b in basis:
                    pos = [cx + b[0], cy + b[1], cz + b[2]]
                    atoms.append({"id": len(atoms) + 1, "type": labels[len(atoms) % 4], "pos": pos})
    dump("fcc32.json", [2.0, 2.0, 2.0], atoms)


def hea24(name="hea24.json", moments=False):
    # Close-packed layers stacked ABC along z, nearest-neighbor distance 1.
    labels = ["Ni", "Cr", "Co", "Fe"]
    dz = math.sqrt(2.0 / 3.0)
    box = [1.0, math.sqrt(3.0), 12 * dz]
    atoms = []
    for layer in range(12):
        sx, sy = (layer % 3) * 0.5, (layer % 3) * math.sqrt(3.0) / 6
        for px, py in ((0.0, 0.0), (0.5, math.sqrt(3.0) / 2)):
            pos = [(px + sx) % box[0], (py + sy) % box[1], layer * dz]
            atoms.append({"id": len(atoms) + 1, "type": labels[len(atoms) % 4], "pos": pos})
    if moments:
        rng = random.Random(24)
        for a in atoms:
            a["moment"] = round(rng.gauss(1.0 if a["type"] != "Cr" else -0.5, 0.3), 6)
    dump(name, box, atoms)
    if moments:
        rows = ["id,type,x,y,z,moment"]
        rows += [f"{a['id']},{a['type']},{a['pos'][0]!r},{a['pos'][1]!r},{a['pos'][2]!r},{a['moment']}" for a in atoms]
        (HERE / name.replace(".json", ".csv")).write_text("\n".join(rows) + "\n")


def small_inputs():
    rng = random.Random(6)
    rows = [[rng.gauss(0.0, 1.0) for _ in range(6)] for _ in range(12)]
    s = [[sum(r[i] * r[j] for r in rows) for j in range(6)] for i in range(6)]
    (HERE / "s6.csv").write_text("\n".join(",".join(f"{v:.17g}" for v in row) for row in s) + "\n")
    cfg = lambda d: (json.dumps(d, indent=1) + "\n")
    (HERE / "estimate.json").write_text(cfg({
        "seed": 2, "format": "csv",
        "solver": {"k_max": 20},
        "neighbors": {"mode": "first-shell"},
        "estimate": {"cell": "hea24_moments.json", "beta_mode": "car"}}))
    (HERE / "starved.json").write_text(cfg({
        "solver": {"k_max": 1, "l_max": 1},
        "estimate": {"cell": "hea24_moments.json"}}))
    (HERE / "bad_key.json").write_text(cfg({"solver": {"kmax": 3}}))


if __name__ == "__main__":
    toy_cube()
    fcc32()
    hea24()
    hea24("hea24_moments.json", moments=True)
    small_inputs()
