from pathlib import Path

import numpy as np
import pytest

from strategies import random_simplifiable
from tnormloss.autodiff import forward
from tnormloss.compiler import (
    ATOM_EPS,
    CompileError,
    CompileOptions,
    GroundingContext,
    compile_loss,
    compile_truth,
    geneval_on_atoms_only,
    kb_loss,
    random_tables,
    verify_simplification,
)
from tnormloss.generators import Lukasiewicz, Product, SchweizerSklar, parse_generator, tconorm_nary, tnorm_nary
from tnormloss.logic import parse_formula, parse_kb
from tnormloss.models import GivenPredicate

GOLDEN = Path(__file__).parent / "golden"
GENS = ["luk", "prod", "ss:-1.0", "ss:0.5", "frank:2.0"]


def ctx_of(n, **given):
    return GroundingContext({"D": [f"d{i}" for i in range(n)]}, {}, given)


def evaluate(graph, tables):
    return forward(graph, tables, allow_inf=True).output


class TestImplicationRuleListing:
    F = "forall x in D: p1(x) & p2(x) => p3(x)"

    def test_golden_listing(self):
        graph = compile_loss(parse_formula(self.F), SchweizerSklar(-1.0), ctx_of(3))
        assert graph.listing() == (GOLDEN / "implication_rule.txt").read_text()

    @pytest.mark.parametrize("spec", ["prod", "ss:-1.0", "ss:-0.5", "frank:3.0"])
    def test_closed_form(self, spec):
        g = parse_generator(spec)
        rng = np.random.default_rng(1)
        graph = compile_loss(parse_formula(self.F), g, ctx_of(5))
        t = {s: rng.uniform(0.05, 0.95, 5) for s in ("p1", "p2", "p3")}
        want = np.sum(np.maximum(0.0, g(t["p3"]) - g(t["p1"]) - g(t["p2"])))
        assert evaluate(graph, t) == pytest.approx(want, abs=1e-12)
        assert graph.count("genpinv") == 0


class TestSimplification:
    @pytest.mark.parametrize("spec", GENS)
    def test_random_simplifiable(self, spec):
        rng = np.random.default_rng(7)
        g = parse_generator(spec)
        for _ in range(10):
            f = random_simplifiable(rng)
            rep = verify_simplification(f, g, ctx_of(int(rng.integers(2, 5))), trials=3,
                                        seed=int(rng.integers(1 << 30)))
            assert rep.simplifiable
            assert rep.genpinv_nodes == 0
            assert rep.geneval_on_atoms_only
            assert rep.max_abs_diff <= 1e-9, (f, rep)

    def test_tconorm_needs_pseudo_inverse(self):
        f = parse_formula("forall x in D: p1(x) | p2(x)")
        graph = compile_loss(f, Product(), ctx_of(3))
        assert graph.count("genpinv") > 0
        rep = verify_simplification(f, Product(), ctx_of(3))
        assert not rep.simplifiable and rep.max_abs_diff <= 1e-9

    def test_negative_literal_has_no_pseudo_inverse(self):
        f = parse_formula("forall x in D: q(x) => not p(x)")
        graph = compile_loss(f, Product(), ctx_of(3))
        assert graph.count("genpinv") == 0 and geneval_on_atoms_only(graph)
        assert verify_simplification(f, Product(), ctx_of(3)).max_abs_diff <= 1e-9

    @pytest.mark.parametrize("mode", ["tconorm", "max"])
    def test_exists_modes_agree_with_truth(self, mode):
        f = parse_formula("forall x in D: exists y in D: r(x, y) => p(x)")
        opts = CompileOptions(exists_mode=mode)
        assert verify_simplification(f, Product(), ctx_of(4), opts).max_abs_diff <= 1e-9

    def test_minmax_mode(self):
        f = parse_formula("forall x in D: p(x)")
        opts = CompileOptions(quantifier_mode="minmax")
        graph = compile_loss(f, Product(), ctx_of(4), opts)
        t = {"p": np.array([0.9, 0.2, 0.5, 0.7])}
        assert evaluate(graph, t) == pytest.approx(-np.log(0.2))


class TestSemantics:
    @pytest.mark.parametrize("spec", GENS)
    def test_forall_is_nary_tnorm(self, spec):
        g = parse_generator(spec)
        t = {"p": np.array([0.9, 0.6, 0.8, 0.95])}
        graph = compile_truth(parse_formula("forall x in D: p(x)"), g, ctx_of(4))
        assert evaluate(graph, t) == pytest.approx(tnorm_nary(g, t["p"]), abs=1e-12)

    @pytest.mark.parametrize("spec", GENS)
    def test_exists_is_nary_tconorm(self, spec):
        g = parse_generator(spec)
        t = {"p": np.array([0.1, 0.3, 0.2])}
        graph = compile_truth(parse_formula("exists x in D: p(x)"), g, ctx_of(3))
        assert evaluate(graph, t) == pytest.approx(tconorm_nary(g, t["p"]), abs=1e-12)

    @pytest.mark.parametrize("spec", GENS)
    def test_satisfied_means_zero_loss(self, spec):
        g = parse_generator(spec)
        f = parse_formula("forall x in D: p(x) => q(x)")
        t = {"p": np.array([0.2, 0.5, 0.7]), "q": np.array([0.3, 0.5, 0.9])}
        assert evaluate(compile_truth(f, g, ctx_of(3)), t) == pytest.approx(1.0)
        assert evaluate(compile_loss(f, g, ctx_of(3)), t) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("spec", GENS)
    def test_monotone_in_atoms(self, spec):
        g = parse_generator(spec)
        graph = compile_loss(parse_formula("forall x in D: p(x)"), g, ctx_of(5))
        rng = np.random.default_rng(3)
        for _ in range(50):
            p = rng.uniform(0.05, 0.95, 5)
            k = rng.integers(5)
            up = p.copy()
            up[k] = min(1.0, up[k] + rng.uniform(0, 0.2))
            assert evaluate(graph, {"p": up}) <= evaluate(graph, {"p": p}) + 1e-12

    def test_convexity_spot_check(self):
        rng = np.random.default_rng(11)
        # linear g with a concave truth function, convex g with literals;
        # the nilpotent clamp min{1, .} is not convex, so the Lukasiewicz
        # fixtures stay ground
        cases = [
            (Lukasiewicz(), 'p("d0") and q("d1")'),
            (Lukasiewicz(), 'p("d0") and (q("d1") and p("d2"))'),
            (Product(), "forall x in D: p(x)"),
            (Product(), "forall x in D: p(x) & q(x)"),
        ]
        for g, text in cases:
            graph = compile_loss(parse_formula(text), g, ctx_of(3))
            for _ in range(250):
                a = {s: rng.uniform(0.05, 0.95, 3) for s in ("p", "q")}
                b = {s: rng.uniform(0.05, 0.95, 3) for s in ("p", "q")}
                mid = {s: (a[s] + b[s]) / 2 for s in a}
                la, lb, lm = (evaluate(graph, t) for t in (a, b, mid))
                assert lm <= (la + lb) / 2 + 1e-9

    def test_atom_clamp(self):
        graph = compile_loss(parse_formula("forall x in D: p(x)"), Product(), ctx_of(2))
        assert evaluate(graph, {"p": np.array([0.0, 1.0])}) == pytest.approx(-np.log(ATOM_EPS))

    def test_nilpotent_clamp(self):
        graph = compile_loss(parse_formula("forall x in D: p(x)"), Lukasiewicz(), ctx_of(4))
        assert evaluate(graph, {"p": np.full(4, 0.1)}) == pytest.approx(1.0)


class TestGroundingAndGuards:
    def _ctx(self, n=5):
        cite = GivenPredicate.from_tuples([("d0", "d1"), ("d2", "d4")], 2, symmetric=True)
        return ctx_of(n, cite=cite)

    @pytest.mark.parametrize("spec", GENS)
    def test_pruning_is_exact(self, spec):
        g = parse_generator(spec)
        f = parse_formula("forall x, y in D: cite(x, y) => (p(x) <=> p(y))")
        ctx = self._ctx()
        pruned = compile_loss(f, g, ctx, CompileOptions(prune=True))
        full = compile_loss(f, g, ctx, CompileOptions(prune=False))
        rng = np.random.default_rng(5)
        for _ in range(10):
            t = random_tables(full, ctx, rng)
            assert evaluate(pruned, t) == pytest.approx(evaluate(full, t), abs=1e-12)

    def test_pruned_rows(self):
        f = parse_formula("forall x, y in D: cite(x, y) => (p(x) <=> p(y))")
        graph = compile_loss(f, Product(), self._ctx())
        sums = [n for n in graph.nodes if n.op == "sum_groundings"]
        assert len(sums[0].attrs["segments"]) == 4  # two symmetric edges, both directions

    def test_manifold_closed_form(self):
        f = parse_formula("forall x, y in D: cite(x, y) => (p(x) <=> p(y))")
        p = np.array([0.9, 0.4, 0.5, 0.6, 0.2])
        graph = compile_loss(f, Product(), self._ctx())
        g = -np.log(p)
        want = 2 * (abs(g[0] - g[1]) + abs(g[2] - g[4]))
        assert evaluate(graph, {"p": p}) == pytest.approx(want)

    def test_constant_argument(self):
        f = parse_formula('forall x in D: cite("d0", x) => p(x)')
        graph = compile_loss(f, Product(), self._ctx())
        p = np.array([0.9, 0.4, 0.5, 0.6, 0.2])
        assert evaluate(graph, {"p": p}) == pytest.approx(-np.log(0.4))

    def test_unknown_constant(self):
        with pytest.raises(CompileError):
            compile_loss(parse_formula('p("zz")'), Product(), ctx_of(2))

    def test_free_variable_rejected(self):
        with pytest.raises(CompileError):
            compile_loss(parse_formula("p(x)", check_closed=False), Product(), ctx_of(2))


class TestKbLoss:
    TEXT = """
    domain D ;
    pred p/1 learnable ;
    pred P/1 given ;
    rule forall x in D: P(x) => p(x) ;
    rule [weight=0.5] forall x in D: p(x) ;
    rule [weight=0] forall x in D: not p(x) ;
    """

    def test_weighted_sum(self):
        kb = parse_kb(self.TEXT)
        ctx = ctx_of(3, P=GivenPredicate.from_tuples([("d1",)], 1))
        graph = kb_loss(kb, Product(), ctx)
        p = np.array([0.5, 0.25, 0.8])
        want = -np.log(0.25) + 0.5 * -np.log(p).sum()
        assert evaluate(graph, {"p": p}) == pytest.approx(want)
        assert set(graph.outputs) == {"rule0", "rule1"}

    def test_missing_given_table(self):
        with pytest.raises(CompileError):
            kb_loss(parse_kb(self.TEXT), Product(), ctx_of(3))

    def test_deterministic_listing(self):
        kb = parse_kb(self.TEXT)
        ctx = ctx_of(3, P=GivenPredicate.from_tuples([("d1",)], 1))
        assert kb_loss(kb, Product(), ctx).listing() == kb_loss(kb, Product(), ctx).listing()

    def test_topological(self):
        kb = parse_kb(self.TEXT)
        ctx = ctx_of(3, P=GivenPredicate.from_tuples([("d1",)], 1))
        graph = kb_loss(kb, Product(), ctx)
        assert all(i < n.id for n in graph.nodes for i in n.inputs)
