"""Runs an original and a rewritten Python file on the same inputs and
compares results and printed/logged output.

torch.compile is replaced by the identity so both versions run eagerly; the
comparison is about source-level semantics, not about the compiler.

Usage: exec_oracle.py ORIGINAL TRANSFORMED SPEC_JSON

SPEC_JSON is a path or an inline JSON object with keys:
  callable   attribute of the module to call (function or module instance)
  inputs     list of Python expressions, each evaluating to an argument tuple
  seed       torch seed applied before import and before each input (default 0)
  order      "exact" or "multiset" comparison of side-effect lines
  rtol, atol tensor tolerances
  cover      if-statement lines of ORIGINAL that must see both outcomes

Prints a JSON verdict; exit status 0 when equivalent, 1 otherwise.
"""

import contextlib
import importlib.util
import io
import json
import logging
import sys
from collections import Counter

import torch


def _identity_compile(fn=None, **_kwargs):
    if fn is None:
        return lambda f: f
    return fn


def load_module(path, name, seed):
    torch.manual_seed(seed)
    spec = importlib.util.spec_from_file_location(name, path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


class BranchRecorder:
    """Records, for chosen if-lines, whether the next line run in the same
    frame was the line after the if (taken) or something else."""

    def __init__(self, path, lines):
        self.path = path
        self.lines = set(lines)
        self.pending = {}
        self.outcomes = {line: set() for line in lines}

    def __call__(self, frame, event, arg):
        if frame.f_code.co_filename != self.path:
            return None
        return self._local

    def _local(self, frame, event, arg):
        if event != "line":
            return self._local
        key = id(frame)
        if key in self.pending:
            if_line = self.pending.pop(key)
            self.outcomes[if_line].add(frame.f_lineno == if_line + 1)
        if frame.f_lineno in self.lines:
            self.pending[key] = frame.f_lineno
        return self._local


def run_all(module, spec, recorder=None):
    target = getattr(module, spec["callable"])
    results, effects = [], []
    logger = logging.getLogger()
    for expr in spec["inputs"]:
        torch.manual_seed(spec.get("seed", 0))
        args = eval(expr, {"torch": torch})
        buf = io.StringIO()
        handler = logging.StreamHandler(buf)
        handler.setFormatter(logging.Formatter("%(levelname)s:%(name)s:%(message)s"))
        logger.addHandler(handler)
        try:
            with contextlib.redirect_stdout(buf):
                if recorder is not None:
                    sys.settrace(recorder)
                try:
                    with torch.no_grad():
                        out = target(*args)
                finally:
                    sys.settrace(None)
        finally:
            logger.removeHandler(handler)
        results.append(out)
        effects.append(buf.getvalue().splitlines())
    return results, effects


def same_value(a, b, rtol, atol, where, problems):
    if isinstance(a, (tuple, list)) or isinstance(b, (tuple, list)):
        if not isinstance(a, (tuple, list)) or not isinstance(b, (tuple, list)) or len(a) != len(b):
            problems.append(f"{where}: structure differs")
            return
        for i, (x, y) in enumerate(zip(a, b)):
            same_value(x, y, rtol, atol, f"{where}[{i}]", problems)
        return
    if isinstance(a, torch.Tensor) or isinstance(b, torch.Tensor):
        ta, tb = torch.as_tensor(a), torch.as_tensor(b)
        if ta.shape != tb.shape:
            problems.append(f"{where}: shape {tuple(ta.shape)} vs {tuple(tb.shape)}")
            return
        if ta.dtype.is_floating_point or tb.dtype.is_floating_point:
            ok = torch.allclose(ta.double(), tb.double(), rtol=rtol, atol=atol, equal_nan=True)
        else:
            ok = torch.equal(ta, tb.to(ta.dtype))
        if not ok:
            problems.append(f"{where}: values differ")
        return
    if a != b:
        problems.append(f"{where}: {a!r} != {b!r}")


def main(argv):
    if len(argv) != 4:
        print(__doc__, file=sys.stderr)
        return 2
    original, transformed, spec_arg = argv[1:]
    spec = json.loads(spec_arg) if spec_arg.lstrip().startswith("{") else json.load(open(spec_arg))
    seed = spec.get("seed", 0)
    rtol = spec.get("rtol", 1e-6)
    atol = spec.get("atol", 0.0)
    logging.getLogger().setLevel(logging.DEBUG)
    torch.compile = _identity_compile

    # Same module name for both so `logging.getLogger(__name__)` output matches.
    mod_a = load_module(original, "gm_subject", seed)
    mod_b = load_module(transformed, "gm_subject", seed)
    recorder = BranchRecorder(mod_a.__file__, spec.get("cover", []))
    res_a, eff_a = run_all(mod_a, spec, recorder)
    res_b, eff_b = run_all(mod_b, spec)

    problems = []
    for i, (a, b) in enumerate(zip(res_a, res_b)):
        same_value(a, b, rtol, atol, f"input {i}", problems)
    for i, (a, b) in enumerate(zip(eff_a, eff_b)):
        if spec.get("order", "exact") == "exact":
            if a != b:
                problems.append(f"input {i}: output lines differ: {a} vs {b}")
        elif Counter(a) != Counter(b):
            problems.append(f"input {i}: output multisets differ: {a} vs {b}")
    for line, seen in recorder.outcomes.items():
        if seen != {True, False}:
            problems.append(f"line {line}: branch outcomes seen {sorted(seen)}, need both")

    verdict = {
        "equivalent": not problems,
        "inputs": len(spec["inputs"]),
        "problems": problems,
        "effects": eff_a,
    }
    print(json.dumps(verdict))
    return 0 if not problems else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv))
