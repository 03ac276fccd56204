"""Collects one status line per acceptance criterion for the terminal summary."""

LINES = []


def record(number, status, text, capsys=None):
    line = f"[criterion {number}] {status}: {text}"
    LINES.append(line)
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    return line
