"""Versioned policy serialization: kind tag plus parameters or table."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..model import DomainError
from .gradient import NeuralPolicy, PgNetwork
from .heuristics import HEURISTIC_KINDS, HeuristicPolicy
from .qlearning import QTablePolicy

FORMAT_VERSION = 1


def _key_to_jsonable(key):
    if isinstance(key, tuple):
        return [_key_to_jsonable(k) for k in key]
    return key


def _key_from_jsonable(doc):
    if isinstance(doc, list):
        return tuple(_key_from_jsonable(k) for k in doc)
    return doc


def policy_to_dict(policy) -> dict:
    if isinstance(policy, HeuristicPolicy):
        return {"format_version": FORMAT_VERSION, "kind": policy.kind}
    if isinstance(policy, QTablePolicy):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "tabular_q",
            "action_size": policy.action_size,
            "instance": policy.instance_name,
            "table": [
                [_key_to_jsonable(key), values.tolist()]
                for key, values in sorted(policy.table.items(), key=lambda kv: repr(kv[0]))
            ],
        }
    if isinstance(policy, NeuralPolicy):
        net = policy.net
        return {
            "format_version": FORMAT_VERSION,
            "kind": "neural",
            "input_dim": net.input_dim,
            "action_dim": net.action_dim,
            "hidden": list(net.hidden),
            "instance": policy.instance_name,
            "instance_dims": list(policy.instance_dims),
            "params": [p.tolist() for p in net.params],
        }
    raise DomainError(f"cannot serialize policy {policy!r}")


def policy_from_dict(doc: dict):
    version = doc.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise DomainError(f"unsupported policy format_version {version}")
    kind = doc.get("kind")
    if kind in HEURISTIC_KINDS:
        return HeuristicPolicy(kind)
    if kind == "tabular_q":
        table = {
            _key_from_jsonable(key): np.array(values, dtype=float)
            for key, values in doc["table"]
        }
        return QTablePolicy(table, int(doc["action_size"]), doc.get("instance", ""))
    if kind == "neural":
        net = PgNetwork.__new__(PgNetwork)
        net.input_dim = int(doc["input_dim"])
        net.action_dim = int(doc["action_dim"])
        net.hidden = tuple(doc["hidden"])
        net.params = [np.array(p, dtype=float) for p in doc["params"]]
        return NeuralPolicy(
            net,
            tuple(doc["instance_dims"]),
            doc.get("instance", ""),
        )
    raise DomainError(f"unknown policy kind {kind!r}")


def save_policy(policy, path: str | Path) -> None:
    Path(path).write_text(json.dumps(policy_to_dict(policy), sort_keys=True) + "\n")


def load_policy(path: str | Path):
    return policy_from_dict(json.loads(Path(path).read_text()))


def curve_to_csv(curve: list[tuple[int, float, float]]) -> str:
    lines = ["episode,return,makespan"]
    for episode, ret, makespan in curve:
        lines.append(f"{episode},{ret:.6f},{makespan:.6f}")
    return "\n".join(lines) + "\n"
