"""Regenerate the shipped graph and scenario files.

    python scenarios/generate.py
"""
from pathlib import Path

import yaml

from weaksync.networks import layered_network, large_network_pair, six_bicomponent_network, thirty_node_network

HERE = Path(__file__).resolve().parent


def scenario(name, graph, t_final, seed, sample_interval=0.1):
    return {
        "name": name,
        "graph": f"graphs/{graph}",
        "model": {"A": "models/triple_A.txt", "B": "models/triple_B.txt"},
        "initial": {"seed": seed, "rho0": 0.0},
        "time": {"t_final": t_final, "sample_interval": sample_interval},
        "integrator": {"rtol": 1e-8, "atol": 1e-10},
        "analysis": {"zeta_tol": 1e-3, "sync_tol": 1e-2, "growth_tol": 1e-3, "window": 0.1},
    }


def main():
    (HERE / "graphs").mkdir(exist_ok=True)
    (HERE / "models").mkdir(exist_ok=True)
    (HERE / "models" / "triple_A.txt").write_text("0 1 0\n0 0 1\n0 0 0\n")
    (HERE / "models" / "triple_B.txt").write_text("0\n0\n1\n")
    (HERE / "models" / "scalar_A.txt").write_text("0\n")
    (HERE / "models" / "scalar_B.txt").write_text("1\n")
    (HERE / "models" / "unstabilizable_A.txt").write_text("1 0\n0 1\n")
    (HERE / "models" / "unstabilizable_B.txt").write_text("1\n0\n")

    pair = large_network_pair()
    graphs = {
        "large_spanning_tree.txt": (pair.connected.graph, "68 agents with a directed spanning tree"),
        "large_broken_links.txt": (
            pair.broken.graph,
            f"68 agents after removing links {list(pair.bridges)}: basic 30/8/4, non-basic 10/6/10",
        ),
        "thirty_broken_links.txt": (thirty_node_network().graph, "30 agents: basic 10/6/4, non-basic 4/6"),
        "six_bicomponents.txt": (six_bicomponent_network().graph, "6 bicomponents, 3 basic"),
        "sixteen_weak.txt": (layered_network((6, 4, 2), (2, 2), seed=0).graph, "16 agents: basic 6/4/2, non-basic 2/2"),
    }
    for fname, (g, comment) in graphs.items():
        (HERE / "graphs" / fname).write_text(f"# {comment}\n" + g.to_text())

    scenarios = {
        "large_spanning_tree.yaml": scenario("large_spanning_tree", "large_spanning_tree.txt", 200.0, 11),
        "large_broken_links.yaml": scenario("large_broken_links", "large_broken_links.txt", 100.0, 11),
        "thirty_broken_links.yaml": scenario("thirty_broken_links", "thirty_broken_links.txt", 100.0, 5),
        "sixteen_weak.yaml": scenario("sixteen_weak", "sixteen_weak.txt", 50.0, 3),
    }
    for fname, doc in scenarios.items():
        (HERE / fname).write_text(yaml.safe_dump(doc, sort_keys=False))


if __name__ == "__main__":
    main()
