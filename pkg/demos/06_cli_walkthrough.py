"""End-to-end CLI session: prepare -> train -> evaluate -> recommend -> sweep.

Drives the `localrec` command through its Python entry point in a temp
directory, the same flow a shell session would use.
"""

import tempfile
from pathlib import Path

from localrec.cli import main
from localrec.synthetic import generate_blocked_log, write_interactions_csv

workdir = Path(tempfile.mkdtemp(prefix="localrec-cli-"))
data = workdir / "interactions.csv"
write_interactions_csv(generate_blocked_log(n_users=120, n_items=60, seed=5), data)

out = workdir / "run"
common = [
    "--out", str(out),
    "--seed", "5",
    "--set", f"data.path={data}",
    "--set", "data.columns=user,item,timestamp",
    "--set", "model.q=4",
    "--set", "model.embedding_dim=8",
    "--set", "kernel.h_t=1.2",
    "--set", "kernel.h_w=0.5",
    "--set", "eval.n_values=10,20",
]

for argv in (
    ["prepare", *common],
    ["train", *common],
    ["evaluate", *common],
    ["recommend", *common, "--users", "u0,u1", "--n", "5"],
    ["ablate-anchors", *common, "--strategies", "coverage,random", "--q", "4"],
    ["sweep", *common, "--param", "h_w", "--values", "0.3,0.5,0.7"],
):
    print(f"\n$ localrec {' '.join(argv[:1] + ['...'])}")
    status = main(argv)
    assert status == 0, f"command failed: {argv[0]}"

print(f"\nartifacts under {out}:")
for path in sorted(out.rglob("*")):
    if path.is_file():
        print(f"  {path.relative_to(out)}")
