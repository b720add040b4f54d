"""Collects one line per acceptance criterion; printed in the pytest summary."""

RESULTS = {}


def report(k, passed, detail):
    line = f"criterion {k:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS[k] = line
    print(line)
    return passed
