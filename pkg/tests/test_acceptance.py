"""Acceptance suite: one test per criterion, each logging a pass/fail line.

The lines are printed in the pytest terminal summary, or to stdout when the
file is run directly (``python tests/test_acceptance.py``).
"""

import os
import time
import zlib
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE
from strategies import random_simplifiable
from tnormloss.autodiff import forward, grad_check, kink_margin
from tnormloss.cli import run
from tnormloss.compiler import GroundingContext, compile_loss, kb_loss, verify_simplification
from tnormloss.data import (
    citation_kb_text,
    learnable_symbols,
    load_dataset,
    synth_relational,
    to_grounding_context,
)
from tnormloss.generators import (
    AXIOM_TEST_GRID,
    Lukasiewicz,
    Product,
    SchweizerSklar,
    biresiduum,
    check_axioms,
    material_impl,
    oracle,
    parse_generator,
    residual_neg,
    residuum,
    tconorm,
    tnorm,
    weak_conj,
    weak_disj,
)
from tnormloss.logic import parse_formula, parse_kb
from tnormloss.models import GivenPredicate, MlpPredicateGroup
from tnormloss.training import ExperimentConfig, loss_and_grad, run_experiment, transductive_split

GOLDEN = Path(__file__).parent / "golden"

# desk-scale synthetic relational data shared by criteria 6 and 7
SYNTH = {"n_per_class": 50, "classes": 3, "d": 40, "intra_edge_p": 0.05,
         "inter_edge_p": 0.005, "noise": 0.5}
SEEDS = range(5)


def record(name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.append((name, "PASS" if ok else "FAIL", detail))
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


# 1 -----------------------------------------------------------------------------

def test_c1_axiom_suite():
    t0 = time.perf_counter()
    worst, failed = {}, []
    for spec in AXIOM_TEST_GRID:
        rows = check_axioms(parse_generator(spec), n=21)
        worst[spec] = max(v for _, v, _ in rows)
        failed += [(spec, a) for a, _, ok in rows if not ok]
    elapsed = time.perf_counter() - t0
    ok = not failed and elapsed < 5.0
    record("1 t-norm axioms (21x21 grid)", ok,
           f"{len(AXIOM_TEST_GRID)} generators x 5 axioms, worst violation "
           f"{max(worst.values()):.2e}, {elapsed:.2f}s, failures={failed}")
    assert ok


# 2 -----------------------------------------------------------------------------

def test_c2_oracle_equivalence():
    t = np.linspace(0.0, 1.0, 21)
    x, y = (a.ravel() for a in np.meshgrid(t, t, indexing="ij"))
    ops = {
        "tnorm": tnorm, "residuum": residuum, "biresiduum": biresiduum, "tconorm": tconorm,
        "material_impl": material_impl,
        "residual_neg": lambda g, a, b: residual_neg(g, a),
        "weak_conj": lambda g, a, b: weak_conj(a, b),
        "weak_disj": lambda g, a, b: weak_disj(a, b),
    }
    worst = 0.0
    for logic, g in (("lukasiewicz", Lukasiewicz()), ("product", Product())):
        for name, fn in ops.items():
            worst = max(worst, float(np.abs(fn(g, x, y) - oracle(logic, name, x, y)).max()))
    ss1 = float(np.abs(tnorm(SchweizerSklar(1.0), x, y) - oracle("lukasiewicz", "tnorm", x, y)).max())
    ok = worst <= 1e-9 and ss1 <= 1e-9
    record("2 oracle equivalence", ok,
           f"max |generated - closed form| = {worst:.2e} (luk, prod; {len(ops)} connectives), "
           f"SS(1) vs T_L = {ss1:.2e}")
    assert ok


# 3 -----------------------------------------------------------------------------

def test_c3_simplification_property():
    rng = np.random.default_rng(2024)
    gens = ["luk", "prod", "ss:-1.0", "ss:0.5", "frank:2.0"]
    worst, pinv, atoms_only = 0.0, 0, True
    for _ in range(50):
        f = random_simplifiable(rng, max_depth=4)
        n = int(rng.integers(2, 9))
        ctx = GroundingContext({"D": [f"d{i}" for i in range(n)]}, {}, {})
        for spec in gens:
            rep = verify_simplification(f, parse_generator(spec), ctx, trials=3,
                                        seed=int(rng.integers(1 << 30)))
            worst = max(worst, rep.max_abs_diff)
            pinv += rep.genpinv_nodes
            atoms_only &= rep.geneval_on_atoms_only

    f2 = parse_formula("forall x in D: p1(x) & p2(x) => p3(x)")
    ctx3 = GroundingContext({"D": ["a", "b", "c"]}, {}, {})
    golden = compile_loss(f2, SchweizerSklar(-1.0), ctx3).listing() == (GOLDEN / "implication_rule.txt").read_text()
    closed = 0.0
    for spec in ("prod", "ss:-1.0", "frank:2.0"):
        g = parse_generator(spec)
        tab = {s: rng.uniform(0.05, 0.95, 3) for s in ("p1", "p2", "p3")}
        want = np.sum(np.maximum(0.0, g(tab["p3"]) - g(tab["p1"]) - g(tab["p2"])))
        closed = max(closed, abs(forward(compile_loss(f2, g, ctx3), tab).output - want))
    ok = worst <= 1e-9 and pinv == 0 and atoms_only and golden and closed <= 1e-9
    record("3 simplification property", ok,
           f"50 formulas x {len(gens)} generators: max |loss - g(truth)| = {worst:.2e}, "
           f"genpinv nodes = {pinv}; golden listing match = {golden}, closed form err = {closed:.1e}")
    assert ok


# 4 -----------------------------------------------------------------------------

def test_c4_cross_entropy():
    ds = synth_relational(20, 4, 16, 0.0, 0.0, 0.3, 1)
    tr, _ = transductive_split(ds.labels, 0.5, 0)
    kb = parse_kb(citation_kb_text(ds.classes, manifold=False))
    ctx = to_grounding_context(ds, kb, supervised=[ds.ids[i] for i in tr])
    graph = kb_loss(kb, Product(), ctx)
    worst = 0.0
    for seed in range(5):
        grp = MlpPredicateGroup(learnable_symbols(ds), 16, [12], "Docs")
        grp.init_params(seed)
        probs = grp(ds.features)
        ce = -np.sum(np.log(probs[tr, ds.labels[tr]]))
        loss, _ = loss_and_grad(graph, [grp], ctx)
        worst = max(worst, abs(loss - ce))
    ok = worst <= 1e-9
    record("4 cross-entropy recovery", ok, f"max |kb_loss - CE| = {worst:.2e} over 5 models, {len(tr)} supervised")
    assert ok


# 5 -----------------------------------------------------------------------------

def _fixtures():
    """(name, kb text, generator, features, given tables, groups builder)."""
    rng = np.random.default_rng(5)
    ids = [f"d{i}" for i in range(6)]
    feats = rng.normal(size=(6, 3))
    cite = GivenPredicate.from_tuples([("d0", "d1"), ("d1", "d2"), ("d3", "d5")], 2, symmetric=True)
    sup = {"P_a": GivenPredicate.from_tuples([("d0",), ("d3",)], 1),
           "P_b": GivenPredicate.from_tuples([("d4",)], 1)}
    manifold = citation_kb_text(["a", "b"], beta=0.1, domain="D")
    implication_rule = ("domain D ; pred p1/1 learnable ; pred p2/1 learnable ; pred p3/1 learnable ;"
              "rule forall x in D: p1(x) & p2(x) => p3(x) ;"
              "rule [weight=0.5] forall x in D: p3(x) <=> (p1(x) and not p2(x)) ;")
    mixed = ("domain D ; pred cite/2 given ; pred p/1 learnable ; pred q/1 learnable ;"
             "rule forall x in D: p(x) | q(x) ;"
             "rule forall x in D: exists y in D: cite(x, y) & q(y) ;")
    return [
        ("manifold/ss:-1 softmax", manifold, "ss:-1.0", feats, {"cite": cite, **sup},
         lambda: [MlpPredicateGroup(["p_a", "p_b"], 3, [4], "D")]),
        ("implication_rule/frank:2 sigmoid", implication_rule, "frank:2.0", feats, {},
         lambda: [MlpPredicateGroup(["p1", "p2", "p3"], 3, [4], "D", head="sigmoid")]),
        ("tconorm+exists/ss:0.5 two groups", mixed, "ss:0.5", feats, {"cite": cite},
         lambda: [MlpPredicateGroup(["p"], 3, [4], "D", head="sigmoid"),
                  MlpPredicateGroup(["q"], 3, [3], "D", head="sigmoid")]),
    ], ids


def test_c5_gradient_correctness():
    t0 = time.perf_counter()
    fixtures, ids = _fixtures()
    errs = {}
    for name, text, spec, feats, given, make in fixtures:
        kb = parse_kb(text)
        ctx = GroundingContext({"D": ids}, {"D": feats}, given)
        graph = kb_loss(kb, parse_generator(spec), ctx)
        rng = np.random.default_rng(zlib.crc32(name.encode()))
        worst, done = 0.0, 0
        while done < 20:
            groups = make()
            for grp in groups:
                grp.init_params(int(rng.integers(1 << 30)))
                for b in grp.params[1::2]:
                    b += rng.normal(0, 0.3, b.shape)
            tables = {}
            margins = []
            for grp in groups:
                out, cache = grp.forward(feats)
                margins.append(grp.relu_margin(cache))
                tables.update({s: out[:, j] for j, s in enumerate(grp.symbols)})
            tape = forward(graph, tables)
            if min(margins) < 1e-3 or kink_margin(tape) < 1e-3:
                continue
            params = [p for grp in groups for p in grp.params]

            def fn():
                loss, grads = loss_and_grad(graph, groups, ctx)
                return loss, [gr for gs in grads for gr in gs]

            worst = max(worst, grad_check(fn, params))
            done += 1
        errs[name] = worst
    elapsed = time.perf_counter() - t0
    ok = max(errs.values()) < 1e-4 and elapsed < 30
    record("5 gradient correctness", ok,
           "; ".join(f"{k}: {v:.1e}" for k, v in errs.items()) + f" (20 points each, {elapsed:.1f}s)")
    assert ok


# 6 -----------------------------------------------------------------------------

def test_c6_convergence_ordering():
    t0 = time.perf_counter()
    curves = {}
    for lam in (0.0, 1.0):
        cfg = ExperimentConfig(
            generator=f"ss:{lam}", test_fraction=0.1, manifold=False, beta_grid=[1.0], hidden=[32, 32],
            optimizer={"kind": "gd", "lr": 1e-2, "epochs": 300}, synth={**SYNTH, "seed": 0},
        )
        runs = []
        for s in SEEDS:
            ds = synth_relational(**{**SYNTH, "seed": s})
            runs.append(np.array([r.train_acc for r in run_experiment(cfg, s, ds=ds).trace]))
        curves[lam] = runs
    epochs = {0.0: [], 1.0: []}
    own = {0.0: [], 1.0: []}
    for k in range(len(SEEDS)):
        # common target: 90% of the better of the two final accuracies for this seed
        target = 0.9 * max(curves[0.0][k][-1], curves[1.0][k][-1])
        for lam in (0.0, 1.0):
            acc = curves[lam][k]
            hit = np.flatnonzero(acc >= target)
            epochs[lam].append(int(hit[0]) if hit.size else np.inf)
            own[lam].append(int(np.flatnonzero(acc >= 0.9 * acc[-1])[0]))
    m0, m1 = np.median(epochs[0.0]), np.median(epochs[1.0])
    elapsed = time.perf_counter() - t0
    ok = m0 < m1 and elapsed < 120
    record("6 convergence ordering (GD)", ok,
           f"median epochs to common 90% target: SS(0) {m0}, SS(1) {m1}; "
           f"final train acc SS(0) {np.median([c[-1] for c in curves[0.0]]):.3f}, "
           f"SS(1) {np.median([c[-1] for c in curves[1.0]]):.3f}; "
           f"per-run-own-final epochs SS(0) {np.median(own[0.0])}, SS(1) {np.median(own[1.0])}; {elapsed:.1f}s")
    assert ok


# 7 -----------------------------------------------------------------------------

def test_c7_manifold_gain():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(
        generator="ss:-1.0", test_fraction=0.9, beta_grid=[0.003], hidden=[32, 32],
        optimizer={"kind": "adam", "lr": 1e-3, "epochs": 200}, synth={**SYNTH, "seed": 0},
    )
    sup, man = [], []
    for s in SEEDS:
        ds = synth_relational(**{**SYNTH, "seed": s})
        sup.append(run_experiment(cfg, s, manifold=False, ds=ds).test_acc)
        man.append(run_experiment(cfg, s, manifold=True, ds=ds).test_acc)
    gain = 100 * float(np.median(np.subtract(man, sup)))
    ok = gain >= 2.0
    record("7 manifold gain (10% train)", ok,
           f"median gain {gain:.1f} points; supervised median {100 * np.median(sup):.1f}%, "
           f"manifold median {100 * np.median(man):.1f}% ({time.perf_counter() - t0:.1f}s)")
    assert ok


# 8 -----------------------------------------------------------------------------

def _citeseer_files():
    root = os.environ.get("CITESEER_DIR")
    if not root:
        return None
    root = Path(root)
    cf, ef = root / "citeseer.content", root / "citeseer.cites"
    return (cf, ef) if cf.exists() and ef.exists() else None


def test_c8_citeseer_reproduction():
    files = _citeseer_files()
    if files is None:
        ACCEPTANCE.append(("8 CiteSeer reproduction", "SKIP",
                           "set CITESEER_DIR to a directory with citeseer.content/.cites"))
        pytest.skip("CiteSeer files not provided")
    t0 = time.perf_counter()
    ds = load_dataset(*files)
    cfg = ExperimentConfig(generator="ss:-1.0", test_fraction=0.1, hidden=[100, 100, 100],
                           optimizer={"kind": "adam", "lr": 1e-3, "epochs": 200},
                           content=str(files[0]), edges=str(files[1]))
    sup = [run_experiment(cfg, s, manifold=False, ds=ds).test_acc for s in range(10)]
    man = [run_experiment(cfg, s, manifold=True, ds=ds).test_acc for s in range(10)]
    ms, mm = 100 * np.mean(sup), 100 * np.mean(man)
    elapsed = time.perf_counter() - t0
    ok = abs(ms - 72.26) <= 2.5 and abs(mm - 79.37) <= 2.5 and elapsed <= 1800
    record("8 CiteSeer reproduction", ok,
           f"supervised {ms:.2f} (target 72.26), manifold {mm:.2f} (target 79.37), {elapsed:.0f}s")
    assert ok


# 9 -----------------------------------------------------------------------------

def test_c9_determinism(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(ExperimentConfig(
        generator="ss:-1.0", test_fraction=0.5, beta_grid=[0.01], hidden=[8], seeds=[0, 1],
        lambdas=[-1.0, 1.0], splits=[0.25, 0.5], optimizer={"kind": "adam", "lr": 0.01, "epochs": 20},
        synth={"n_per_class": 10, "classes": 3, "d": 12, "intra_edge_p": 0.2,
               "inter_edge_p": 0.01, "noise": 0.3, "seed": 0},
    ).to_json())
    outs = {}
    for k in range(2):
        for cmd, extra in (("train", ["--seed", "7"]), ("sweep", ["--jobs", str(1 + 2 * k)])):
            out = tmp_path / f"{cmd}{k}.csv"
            assert run([cmd, "--config", str(cfg), "--out", str(out), *extra]) == 0
            outs[cmd, k] = out.read_bytes()
    same = outs["train", 0] == outs["train", 1] and outs["sweep", 0] == outs["sweep", 1]
    record("9 determinism", same,
           f"train CSV {len(outs['train', 0])} bytes, sweep CSV {len(outs['sweep', 0])} bytes "
           f"(sweep rerun with 1 and 3 threads); byte-identical = {same}")
    assert same


if __name__ == "__main__":
    import sys
    import tempfile

    for name, fn in list(globals().items()):
        if name.startswith("test_c"):
            try:
                if name == "test_c9_determinism":
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except (AssertionError, pytest.skip.Exception):
                pass
    sys.exit(0 if all(s != "FAIL" for _, s, _ in ACCEPTANCE) else 1)
