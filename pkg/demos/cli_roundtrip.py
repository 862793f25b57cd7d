"""Drive the command line end to end from a generated problem file.

Writes a JSON description, validates it, solves it with a trace, and reads
back the solution artifacts, all through the same entry point the installed
`scensplit` script uses.
"""
import json
import pathlib
import tempfile

from scensplit.cli import main

doc = {
    "stages": [1, 1],
    "scenarios": [
        {"labels": [0, 0], "probability": 0.5},
        {"labels": [1, 0], "probability": 0.3},
        {"labels": [1, 1], "probability": 0.2},
    ],
    "operators": [
        {"type": "grad_separable_quadratic", "q": [1.0, 1.0], "c": [0.0, 0.2]},
        {"type": "grad_separable_quadratic", "q": [1.0, 2.0], "c": [1.0, 0.8]},
        {"type": "diagonal_affine", "a": [1.0, 0.5], "b": [-0.2, 0.1]},
    ],
    "constraints": [
        {"type": "box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]},
        {"type": "box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]},
        {"type": "whole_space"},
    ],
}

with tempfile.TemporaryDirectory() as tmp:
    base = pathlib.Path(tmp)
    problem_path = base / "problem.json"
    problem_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

    print("== validate ==")
    main(["validate", str(problem_path)])

    print("\n== solve ==")
    solution_path = base / "solution.json"
    trace_path = base / "trace.csv"
    code = main(
        [
            "solve",
            str(problem_path),
            "--tol",
            "1e-9",
            "--solution-out",
            str(solution_path),
            "--trace-out",
            str(trace_path),
            "--trace-every",
            "20",
        ]
    )
    print(f"exit code: {code}")

    print("\n== artifacts ==")
    payload = json.loads(solution_path.read_text(encoding="utf-8"))
    print("solution keys:", sorted(payload))
    print("first-stage decision:", payload["scenarios"][0]["x"][0])
    print("trace:")
    print(trace_path.read_text(encoding="utf-8"))
