"""Graph dataset files: one json object per line, {"id", "n", "edges"}."""

from __future__ import annotations

import json

from .graphs import Graph


def graph_to_record(g: Graph) -> dict:
    return {"id": g.graph_id, "n": g.num_vertices,
            "edges": [[int(u), int(v)] for u, v in g.edges]}


def record_to_graph(rec: dict) -> Graph:
    try:
        return Graph(int(rec["n"]), rec["edges"], graph_id=str(rec["id"]))
    except KeyError as e:
        raise ValueError(f"dataset record missing key {e}") from None


def save_dataset(path, graphs: list[Graph]) -> None:
    with open(path, "w") as fh:
        for g in graphs:
            fh.write(json.dumps(graph_to_record(g)) + "\n")


def load_dataset(path) -> list[Graph]:
    out = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{line_no}: bad json ({e.msg})") from None
            out.append(record_to_graph(rec))
    return out
