"""Writes malformed/<kind>_<case>.json plus malformed/manifest.json.

Each fixture is a golden document with one defect; the manifest records the error class and
document path an importer must report for it. Run from this directory after make_golden.py.
"""

import copy
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))


def load(case, kind):
    with open(os.path.join(HERE, "golden", case, kind + ".json"), encoding="utf-8") as f:
        return json.load(f)


def dump(doc):
    return json.dumps(doc, indent=2) + "\n"


FIXTURES = []


def fixture(kind, case, code, path, text):
    FIXTURES.append({"file": f"{kind}_{case}.json", "kind": kind, "code": code, "path": path, "text": text})


def mutated(kind, golden, code, path, case, fn):
    doc = copy.deepcopy(load(golden, kind))
    fn(doc)
    fixture(kind, case, code, path, dump(doc))


# -- topology (pair: alice, bob, bsm.alice.bob) ------------------------------
fixture("topology", "truncated", "ParseError", "$", dump(load("pair", "topology"))[:120])
mutated("topology", "pair", "SchemaError", "edges", "missing_edges", lambda d: d.pop("edges"))
mutated("topology", "pair", "SchemaError", "nodes[0].color", "extra_node_field",
        lambda d: d["nodes"][0].update(color="red"))
mutated("topology", "pair", "SchemaError", "format", "future_format", lambda d: d.update(format=2))
mutated("topology", "pair", "SchemaError", "nodes[0].type", "unknown_node_type",
        lambda d: d["nodes"][0].update(type="Detector"))
mutated("topology", "pair", "SchemaError", "edges[0].distance_m", "string_distance",
        lambda d: d["edges"][0].update(distance_m="far"))
mutated("topology", "pair", "SchemaError", "cc_latency_ps", "matrix_too_big",
        lambda d: d.update(cc_latency_ps=[[0] * 4 for _ in range(4)]))
mutated("topology", "pair", "SchemaError", "qc_tdm[1]", "ragged_tdm", lambda d: d["qc_tdm"][1].pop())
mutated("topology", "pair", "SchemaError", "qc_tdm[0][1]", "fractional_tdm",
        lambda d: d["qc_tdm"][0].__setitem__(1, 1.5))
mutated("topology", "pair", "InvariantViolation", "nodes[1].name", "duplicate_name",
        lambda d: d["nodes"][1].update(name="alice"))
mutated("topology", "pair", "InvariantViolation", "cc_latency_ps[0][1]", "asymmetric_latency",
        lambda d: d["cc_latency_ps"][0].__setitem__(1, 5))
mutated("topology", "pair", "InvariantViolation", "edges[1].b", "dangling_endpoint",
        lambda d: d["edges"][1].update(b="ghost"))
mutated("topology", "pair", "InvariantViolation", "edges[0].distance_m", "negative_distance",
        lambda d: d["edges"][0].update(distance_m=-1.0))


def direct_router_edge(d):
    d["nodes"].pop()
    d["edges"] = [{"a": "alice", "b": "bob", "distance_m": 1.0, "attenuation_db_km": 0.2}]
    d["cc_latency_ps"] = [[0, 0], [0, 0]]
    d["qc_tdm"] = [[0, 0], [0, 0]]


mutated("topology", "pair", "InvariantViolation", "edges[0]", "direct_router_edge", direct_router_edge)

# -- templates (defaults: memory, detector, router, bsm) ----------------------
fixture("templates", "not_json", "ParseError", "$", "{\"format\": 1, \"templates\": [\n")
mutated("templates", "line4", "SchemaError", "templates[0].params.fidelity", "missing_param",
        lambda d: d["templates"][0]["params"].pop("fidelity"))
mutated("templates", "line4", "SchemaError", "templates[1].type", "unknown_template_type",
        lambda d: d["templates"][1].update(type="Laser"))
mutated("templates", "line4", "SchemaError", "templates", "templates_not_array",
        lambda d: d.update(templates={}))
mutated("templates", "line4", "DanglingReference", "templates[2].params.memory_template", "dangling_memory",
        lambda d: d["templates"][2]["params"].update(memory_template="ghost"))
mutated("templates", "line4", "CyclicReference", "templates[2].params.memory_template", "self_reference",
        lambda d: d["templates"][2]["params"].update(memory_template="default_router"))
mutated("templates", "line4", "ShapeMismatch", "templates[2].params.memory_template", "router_points_at_detector",
        lambda d: d["templates"][2]["params"].update(memory_template="default_detector"))
mutated("templates", "line4", "ShapeMismatch", "templates[0].params.efficiency", "efficiency_above_one",
        lambda d: d["templates"][0]["params"].update(efficiency=1.5))
mutated("templates", "line4", "DuplicateName", "templates[3].id", "duplicate_id",
        lambda d: d["templates"][3].update(id="default_memory"))

# -- simulation ----------------------------------------------------------------
fixture("simulation", "trailing_garbage", "ParseError", "$", dump(load("line4", "simulation")) + "}\n")
mutated("simulation", "line4", "SchemaError", "duration_s", "negative_duration", lambda d: d.update(duration_s=-10.0))
mutated("simulation", "line4", "SchemaError", "seed", "missing_seed", lambda d: d.pop("seed"))
mutated("simulation", "line4", "SchemaError", "memories_per_request", "zero_memories",
        lambda d: d.update(memories_per_request=0))
mutated("simulation", "line4", "SchemaError", "target_fidelity", "fidelity_above_one",
        lambda d: d.update(target_fidelity=1.5))
mutated("simulation", "line4", "SchemaError", "name", "unsafe_name", lambda d: d.update(name="../escape"))
mutated("simulation", "line4", "SchemaError", "seed", "fractional_seed", lambda d: d.update(seed=4.5))

if __name__ == "__main__":
    out = os.path.join(HERE, "malformed")
    os.makedirs(out, exist_ok=True)
    manifest = []
    for fx in FIXTURES:
        with open(os.path.join(out, fx["file"]), "w", encoding="utf-8", newline="\n") as f:
            f.write(fx["text"])
        manifest.append({k: fx[k] for k in ("file", "kind", "code", "path")})
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(manifest, indent=2) + "\n")
