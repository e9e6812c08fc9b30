"""Runs each report-producing subcommand on small inputs and validates the
output against the JSON schemas in docs/schema."""
import json
import pathlib
import subprocess
import sys

import jsonschema


def main() -> int:
    cli, schema_dir, work = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    work.mkdir(parents=True, exist_ok=True)
    xor = work / "xor.csv"
    gauss = work / "gauss.csv"
    subprocess.run([cli, "synth", "xor", "--noise", "2", "--per-cell", "20", "--seed", "5", "--out", str(xor)], check=True)
    subprocess.run([cli, "synth", "gaussian", "--rows", "120", "--rho", "0.6", "--seed", "2", "--out", str(gauss)], check=True)
    cases = [
        ("select", ["select", "--data", str(xor), "--beta", "0.1"]),
        ("select", ["select", "--data", str(gauss), "--method", "jmi"]),
        ("audit", ["audit", "--data", str(xor)]),
        ("audit", ["audit", "--data", str(gauss), "--beta", "0.1", "--ur-source", "clf"]),
        ("ur", ["ur", "--data", str(xor)]),
        ("ur", ["ur", "--data", str(gauss), "--ur-source", "clf"]),
        ("eval", ["eval", "--data", str(xor), "--runs", "2", "--knn-max", "7", "--beta", "0.2"]),
        ("mi", ["mi", "--data", str(xor), "--x", "X1,X2"]),
        ("mi", ["mi", "--data", str(gauss), "--x", "x", "--y", "y"]),
        ("mi", ["mi", "--data", str(xor), "--x", "X1", "--given", "X2"]),
    ]
    failures = 0
    for i, (kind, args) in enumerate(cases):
        out = work / f"{i}_{kind}.json"
        subprocess.run([cli, *args, "--out", str(out)], check=True)
        schema = json.loads((schema_dir / f"{kind}.json").read_text())
        try:
            jsonschema.validate(json.loads(out.read_text()), schema)
            print(f"ok   {kind}: {' '.join(args[1:])}")
        except jsonschema.ValidationError as e:
            failures += 1
            print(f"FAIL {kind}: {' '.join(args[1:])}: {e.message} at {list(e.absolute_path)}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
