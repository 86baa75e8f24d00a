"""Child-side wrapper: loads one candidate file and serves it over stdin/stdout.

Usage: python runner.py <candidate.py> <component_id>

Each request line is a JSON object with an ``op`` field; every reply is one
JSON line. Candidate errors are reported as {"error": ...}, never raised.
"""

import json
import math
import sys
import traceback

# op -> (function the candidate must define, reply key)
OPS = {
    "learning_rate": ("adjust_learning_rate", "learning_rate"),
    "steps": ("optimization_steps", "steps"),
    "utility": ("utility", "utility"),
}


def _send(obj):
    sys.stdout.write(json.dumps(obj, separators=(",", ":")) + "\n")
    sys.stdout.flush()


def _scalar(value):
    return float(value)


def _handle(namespace, request):
    op = request.pop("op")
    fn_name, key = OPS[op]
    fn = namespace.get(fn_name)
    if fn is None:
        raise NameError(f"candidate does not define {fn_name}()")
    if op == "utility":
        import numpy as np

        points = request.pop("points")
        mu = np.array([p["mu"] for p in points], dtype=float)
        sigma = np.array([p["sigma"] for p in points], dtype=float)
        out = fn(mu=mu, sigma=sigma, **request)
        return {key: [float(u) for u in np.asarray(out, dtype=float).ravel()]}
    value = _scalar(fn(**request))
    if op == "steps" and math.isfinite(value):
        value = int(round(value))
    return {key: value}


def main(argv):
    path, component = argv[1], argv[2]
    with open(path, encoding="utf-8") as fh:
        source = fh.read()
    namespace = {"__name__": "candidate"}
    try:
        exec(compile(source, path, "exec"), namespace)
    except BaseException:
        traceback.print_exc()
        return 1
    _send({"op": "hello", "component": component})
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        if request.get("op") == "bye":
            return 0
        try:
            reply = _handle(namespace, request)
        except Exception as exc:
            traceback.print_exc()
            reply = {"error": f"{type(exc).__name__}: {exc}"}
        _send(reply)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
