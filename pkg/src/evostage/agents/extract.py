from __future__ import annotations

import ast
import re

FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.S)
STAGE_MARKER = re.compile(r"^#\s*-+\s*stage\s+(\d+)\s*-+\s*$", re.I | re.M)


class ExtractionError(ValueError):
    pass


def _looks_like_code(text: str) -> bool:
    try:
        ast.parse(text)
    except SyntaxError:
        return False
    return True


def extract_code(text: str) -> str:
    """First fenced block, or the whole reply if it parses as code on its own."""
    m = FENCE.search(text)
    if m:
        body = m.group(1)
        if body.strip():
            return body.rstrip() + "\n"
        raise ExtractionError("no code block: the fenced block is empty")
    stripped = text.strip()
    if stripped and "\n\n\n" not in stripped and _looks_like_code(stripped):
        return stripped + "\n"
    raise ExtractionError("no code block")


def split_stages(source: str, num_stages: int) -> list[str]:
    """Split a one-shot multi-stage reply on '# --- stage i ---' marker lines."""
    marks = list(STAGE_MARKER.finditer(source))
    found = [int(m.group(1)) for m in marks]
    if found != list(range(num_stages)):
        raise ExtractionError(f"expected stage markers 0..{num_stages - 1}, found {found}")
    parts = []
    for i, m in enumerate(marks):
        end = marks[i + 1].start() if i + 1 < len(marks) else len(source)
        body = source[m.end():end].strip("\n")
        if not body.strip():
            raise ExtractionError(f"stage {i} is empty")
        parts.append(body.rstrip() + "\n")
    return parts


def join_stages(fragments: list[str]) -> str:
    return "".join(f"# --- stage {i} ---\n{src.rstrip()}\n" for i, src in enumerate(fragments))
