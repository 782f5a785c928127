"""Shared record of acceptance verdicts, printed at the end of the session."""

RESULTS = {}


def report(number, passed, detail):
    line = f"ACCEPTANCE {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    return passed
