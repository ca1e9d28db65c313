"""Runs each CLI subcommand and validates its JSON report against the published schema."""
import argparse
import json
import pathlib
import subprocess
import sys

import jsonschema


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True)
    ap.add_argument("--data", required=True)
    ap.add_argument("--schema", required=True)
    ap.add_argument("--work", required=True)
    args = ap.parse_args()

    work = pathlib.Path(args.work)
    work.mkdir(parents=True, exist_ok=True)
    schema = json.loads(pathlib.Path(args.schema).read_text())
    validator = jsonschema.Draft202012Validator(schema)
    data = ["--x", f"{args.data}/synthetic_x.csv", "--y", f"{args.data}/synthetic_y.csv",
            "--header", "--log", "--center-x", "--standardize-y"]
    runs = {
        "fit": ["fit", *data, "--rank", "3"],
        "fit_soft": ["fit", *data, "--soft", "5.0"],
        "dof_exact": ["dof", *data, "--rank", "3", "--method", "exact"],
        "dof_mc": ["dof", *data, "--rank", "3", "--method", "mc", "--reps", "5"],
        "dof_perturb": ["dof", *data, "--adaptive", "5.0", "--method", "perturb", "--reps", "5"],
        "select": ["select", *data, "--criterion", "gcv", "--df", "exact"],
        "select_lambda": ["select", *data, "--criterion", "cp", "--sigma2", "0.3", "--path", "soft"],
        "simulate_dof": ["simulate", "--preset", "setting1-desk", "--reps", "5"],
        "simulate_pred": ["simulate", "--preset", "ld", "--reps", "3"],
        "eval": ["eval", *data, "--splits", "3", "--criteria", "gcv", "bic"],
    }
    failures = 0
    for name, argv in runs.items():
        out = work / f"{name}.json"
        proc = subprocess.run([args.cli, *argv, "--out", str(out), "--csv", str(work / f"{name}.csv")],
                              capture_output=True, text=True)
        if proc.returncode != 0:
            print(f"FAIL {name}: exit {proc.returncode}: {proc.stderr.strip()}")
            failures += 1
            continue
        report = json.loads(out.read_text())
        errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
        for e in errors[:5]:
            print(f"FAIL {name}: {'/'.join(map(str, e.path))}: {e.message}")
        failures += bool(errors)
        if not errors:
            print(f"ok   {name} ({report['kind']})")

    # The schema must reject a corrupted report.
    bad = json.loads((work / "eval.json").read_text())
    bad["data"]["splits"][0]["outcomes"][0]["mspe"] = -1.0
    if validator.is_valid(bad):
        print("FAIL schema accepted a negative MSPE")
        failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
