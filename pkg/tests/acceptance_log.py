"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

LINES: list[str] = []


def report(cid: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] {cid}: {detail}"
    LINES.append(line)
    print(line)
    return ok
