"""Strict parsing of model spec documents (TOML or JSON).

One document describes one model.  Unknown keys are hard errors so a typo in a
rate definition cannot silently produce a different chain.
"""

from __future__ import annotations

import ast
import json
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Callable, Union

from .errors import ModelSpecError
from .model import (RateRow, SingleBirthModel, build_tabulated,
                    model_birth_death, model_constant_column,
                    model_uniform_catastrophe)

_KINDS = ("tabulated", "uniform_catastrophe", "constant_column", "birth_death", "expression")

_ALLOWED_KEYS = {
    "tabulated": {"kind", "label", "rows"},
    "uniform_catastrophe": {"kind", "label", "a", "b", "q01"},
    "constant_column": {"kind", "label", "q_i0", "up", "horizon"},
    "birth_death": {"kind", "label", "up", "down", "horizon"},
    "expression": {"kind", "label", "up", "down", "down_offset", "horizon"},
}

_BINOPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b,
           ast.Mult: lambda a, b: a * b, ast.Div: lambda a, b: a / b,
           ast.Pow: lambda a, b: a ** b}


def compile_rate_expression(text: str) -> Callable[[int], float]:
    """Compile an arithmetic expression in the variable i.

    Grammar: +, -, *, /, ^ (power), integer literals, and ``i``.  Nothing else
    parses, by construction.
    """
    source = text.replace("^", "**")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ModelSpecError(f"cannot parse rate expression {text!r}: {exc}") from None

    def check(node: ast.AST) -> None:
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            check(node.operand)
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ModelSpecError(f"literal {node.value!r} is not a number in {text!r}")
        elif isinstance(node, ast.Name):
            if node.id != "i":
                raise ModelSpecError(f"unknown variable {node.id!r} in {text!r}; only 'i' is allowed")
        else:
            raise ModelSpecError(f"construct {type(node).__name__} is not allowed in {text!r}")

    check(tree)

    def evaluate(node: ast.AST, i: int) -> float:
        if isinstance(node, ast.Expression):
            return evaluate(node.body, i)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](evaluate(node.left, i), evaluate(node.right, i))
        if isinstance(node, ast.UnaryOp):
            v = evaluate(node.operand, i)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Constant):
            return float(node.value)
        return float(i)   # ast.Name 'i'

    def fn(i: int) -> float:
        try:
            value = evaluate(tree, i)
        except ZeroDivisionError:
            raise ModelSpecError(f"expression {text!r} divides by zero at i = {i}") from None
        if not math.isfinite(value):
            raise ModelSpecError(f"expression {text!r} is not finite at i = {i}")
        return value

    fn.source = text
    return fn


def _rate_or_expression(value, what: str) -> Callable[[int], float]:
    if isinstance(value, bool):
        raise ModelSpecError(f"{what} must be a number or expression, got {value!r}")
    if isinstance(value, (int, float)):
        const = float(value)
        fn = lambda i: const  # noqa: E731
        fn.source = repr(value)
        return fn
    if isinstance(value, str):
        return compile_rate_expression(value)
    raise ModelSpecError(f"{what} must be a number or expression string, got {type(value).__name__}")


def _number(doc: dict, key: str) -> float:
    if key not in doc:
        raise ModelSpecError(f"missing required key {key!r}")
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ModelSpecError(f"key {key!r} must be a number, got {v!r}")
    return float(v)


def load_model_file(path: Union[str, Path]):
    """Parse a spec file; format chosen by extension (.toml / .json)."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ModelSpecError(f"cannot read {path}: {exc}") from None
    if path.suffix == ".json":
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ModelSpecError(f"invalid JSON in {path}: {exc}") from None
    else:
        try:
            doc = tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ModelSpecError(f"invalid TOML in {path}: {exc}") from None
    return build_model(doc)


def build_model(doc) -> tuple[SingleBirthModel, dict]:
    """Validate a spec document and return (model, normalized echo)."""
    if not isinstance(doc, dict):
        raise ModelSpecError("model spec must be a table/object at top level")
    kind = doc.get("kind")
    if kind not in _KINDS:
        raise ModelSpecError(f"kind must be one of {_KINDS}, got {kind!r}")
    unknown = set(doc) - _ALLOWED_KEYS[kind]
    if unknown:
        raise ModelSpecError(f"unknown keys for kind {kind!r}: {sorted(unknown)}")
    label = doc.get("label", kind)
    if not isinstance(label, str):
        raise ModelSpecError("label must be a string")

    if kind == "tabulated":
        rows_doc = doc.get("rows")
        if not isinstance(rows_doc, list) or not rows_doc:
            raise ModelSpecError("tabulated spec needs a non-empty rows array")
        rows = []
        for idx, r in enumerate(rows_doc):
            if not isinstance(r, dict) or set(r) - {"up", "down"}:
                raise ModelSpecError(f"row {idx} must contain only 'up' and 'down'")
            down_doc = r.get("down", {})
            if not isinstance(down_doc, dict):
                raise ModelSpecError(f"row {idx}: down must be a table of state -> rate")
            try:
                down = {int(j): float(v) for j, v in down_doc.items()}
            except (TypeError, ValueError):
                raise ModelSpecError(f"row {idx}: down keys must be integers, values numbers") from None
            rows.append(RateRow(up=float(r.get("up", 0.0)), down=down))
        model = build_tabulated(rows, label=label)
        echo = {"kind": kind, "label": label,
                "rows": [{"up": row.up, "down": {str(j): v for j, v in sorted(row.down.items())}}
                         for row in rows]}
        return model, echo

    horizon = doc.get("horizon")
    if horizon is not None and (isinstance(horizon, bool) or not isinstance(horizon, int) or horizon < 0):
        raise ModelSpecError("horizon must be a nonnegative integer")

    if kind == "uniform_catastrophe":
        a, b, q01 = _number(doc, "a"), _number(doc, "b"), _number(doc, "q01")
        model = model_uniform_catastrophe(a, b, q01)
        return model, {"kind": kind, "label": label, "a": a, "b": b, "q01": q01}

    if kind == "constant_column":
        if "q_i0" not in doc or "up" not in doc:
            raise ModelSpecError("constant_column spec needs q_i0 and up")
        q_i0 = _rate_or_expression(doc["q_i0"], "q_i0")
        up = _rate_or_expression(doc["up"], "up")
        model = model_constant_column(q_i0, up, label=label)
        model.horizon = horizon
        return model, {"kind": kind, "label": label, "q_i0": q_i0.source, "up": up.source}

    if kind == "birth_death":
        if "up" not in doc or "down" not in doc:
            raise ModelSpecError("birth_death spec needs up and down")
        up = _rate_or_expression(doc["up"], "up")
        down = _rate_or_expression(doc["down"], "down")
        model = model_birth_death(up, down, label=label)
        model.horizon = horizon
        return model, {"kind": kind, "label": label, "up": up.source, "down": down.source}

    # kind == "expression": an up expression plus down rates given either at
    # fixed target states (down = {j: expr in i}) or at fixed offsets below i
    # (down_offset = {k: expr in i}, meaning a rate from i to i-k).
    if "up" not in doc:
        raise ModelSpecError("expression spec needs an up expression")
    up = _rate_or_expression(doc["up"], "up")
    down_doc = doc.get("down", {})
    off_doc = doc.get("down_offset", {})
    if not isinstance(down_doc, dict) or not isinstance(off_doc, dict):
        raise ModelSpecError("down and down_offset must be tables of expressions")
    down_fns = {}
    for j, expr in down_doc.items():
        try:
            down_fns[int(j)] = _rate_or_expression(expr, f"down[{j}]")
        except ValueError:
            raise ModelSpecError(f"down key {j!r} must be an integer state") from None
    off_fns = {}
    for k, expr in off_doc.items():
        try:
            kk = int(k)
        except ValueError:
            raise ModelSpecError(f"down_offset key {k!r} must be an integer offset") from None
        if kk < 1:
            raise ModelSpecError("down_offset keys must be >= 1")
        off_fns[kk] = _rate_or_expression(expr, f"down_offset[{k}]")

    def rate_fn(i: int) -> RateRow:
        down = {}
        for j, fn in down_fns.items():
            if j < i:
                r = fn(i)
                if r > 0:
                    down[j] = r
        for k, fn in off_fns.items():
            if i - k >= 0:
                r = fn(i)
                if r > 0:
                    down[i - k] = down.get(i - k, 0.0) + r
        return RateRow(up=up(i), down=down)

    model = SingleBirthModel(rate_function=rate_fn, declared_horizon=horizon, label=label)
    echo = {"kind": kind, "label": label, "up": up.source,
            "down": {str(j): fn.source for j, fn in sorted(down_fns.items())},
            "down_offset": {str(k): fn.source for k, fn in sorted(off_fns.items())}}
    return model, echo
