"""Shared buffer for the acceptance-gate summary lines; emptied into the
pytest terminal summary by a conftest hook."""

LINES: list[str] = []


def report(num: int, ok: bool, text: str) -> None:
    line = f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'}  {text}"
    LINES.append(line)
    print(line)
