"""Tolerant extraction of JSON objects from model replies.

Judge and filter models routinely wrap their JSON in prose or markdown
code fences; scanning for the first decodable object handles both
without caring about the wrapping.
"""

from __future__ import annotations

import json
from typing import Any


class JsonExtractError(ValueError):
    pass


def extract_json_object(text: str) -> dict[str, Any]:
    """Return the first well-formed JSON object embedded in ``text``.

    Raises:
        JsonExtractError: no decodable JSON object exists in the text.
    """
    decoder = json.JSONDecoder()
    index = text.find("{")
    while index != -1:
        try:
            obj, _ = decoder.raw_decode(text, index)
        except ValueError:
            index = text.find("{", index + 1)
            continue
        if isinstance(obj, dict):
            return obj
        index = text.find("{", index + 1)
    raise JsonExtractError("no JSON object found in reply")
