"""Rerun a reference battery and print reference and obtained values side by side.

Run with ``python demos/reproduce_tables.py [I|II|III] [points]``. The
default is Table II on a 10 x 10 grid, which takes a few minutes; the
reduced 20 x 20 grid used for the acceptance checks is ``points=20``.
"""
import sys

from ionkernel import benchmarks as bm

table = sys.argv[1] if len(sys.argv) > 1 else "II"
points = int(sys.argv[2]) if len(sys.argv) > 2 else 10
report = bm.reproduce_table(table, "reduced", points, out_dir=f"results/demo_table{table}")
print(bm.render_markdown(report))
