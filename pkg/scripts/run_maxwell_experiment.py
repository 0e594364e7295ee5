#!/usr/bin/env python3
"""
Maxwell eigenvalues on [0, π]², p = 4: problematic mesh vs exactly refined mesh.

Run from project root: python scripts/run_maxwell_experiment.py [--out results/maxwell.csv]

The problematic mesh has four separated problematic pairs; the exact mesh comes
from refining the same supports with exact_refine. The problematic mesh should
show exactly four extra zero eigenvalues and some spurious nonzero ones.
"""

import argparse
import sys
from itertools import zip_longest
from pathlib import Path

# Allow importing hdr (project root in path)
sys.path.insert(0, ".")

from hdr.core.constants import MAXWELL_SIDE
from hdr.core.enums import BasisVariant, ScalarMode
from hdr.core.logging_config import setup_logging
from hdr.services.derham import build_complex, cohomology
from hdr.services.mesh_io import document_to_domains, load_document, refine_domains, write_csv
from hdr.services.solvers import assemble, solve_maxwell, spurious_eigenvalues

DATA = Path("data")


def run(out: Path, count: int) -> None:
    problematic = document_to_domains(load_document(DATA / "maxwell_problematic.json"))
    marked_doc = load_document(DATA / "maxwell_marked.json")
    exact, summary = refine_domains(document_to_domains(marked_doc), marked_doc.marks(), exact=True)
    print(f"exact_refine: L* = {summary.max_level}, corners = {summary.corners}")

    results = {}
    for name, domains in (("problematic", problematic), ("exact", exact)):
        h1 = cohomology(build_complex(domains, BasisVariant.THB, ScalarMode.FLOAT, verify=False)).h1
        system = assemble(domains, BasisVariant.THB, side=MAXWELL_SIDE)
        eig = solve_maxwell(system)
        spurious = spurious_eigenvalues(eig.nonzero[: 4 * count])
        results[name] = eig
        extra = eig.zero_count - system.dofs[0]
        print(f"{name:12s} h1 = {h1}  zeros = {eig.zero_count}  extra zeros = {extra}  dim H0 = {system.dofs[0]}")
        print(f"{'':12s} first nonzero = {eig.nonzero[:count].round(6).tolist()}")
        print(f"{'':12s} spurious (first {4 * count}) = {spurious.round(4).tolist()}")

    rows = zip_longest(
        range(1, 4 * count + 1),
        results["problematic"].nonzero[: 4 * count],
        results["exact"].nonzero[: 4 * count],
        fillvalue="",
    )
    write_csv(out, ["index", "problematic", "exact"], rows)
    print(f"wrote {out}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", type=Path, default=Path("results/maxwell.csv"))
    parser.add_argument("--count", type=int, default=8, help="Nonzero eigenvalues to print.")
    args = parser.parse_args()
    setup_logging()
    run(args.out, args.count)
