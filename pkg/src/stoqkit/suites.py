"""Invariant suites: lemma-level inequalities as named, tolerated checks.

A suite maps instances (plus a config carrying seeds and sweep sizes)
to CheckRecords with both sides of each inequality.  Reports are
order-stable: records are sorted by name before emission.  Suites are
deterministic given (instances, config['seed']).
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import collapse as clps
from .distances import (
    check_hellinger_kl,
    check_tensorization,
    coordinate_independence_gap,
    entropy,
    hellinger,
    JointDistribution,
    marginal,
    product_of_marginals,
)
from .dyadic import approx_projector, build_sampler, distribution, total_variation
from .io import (
    CheckRecord,
    InstanceFile,
    ReportFile,
    decode_instance,
    generate_instance,
)
from .product_value import ProductWitness, omega_plus_alternating, product_value
from .rounding import (
    BosonicState,
    RoundingSchedule,
    adaptive_round,
    condition_step,
    direct_round,
    measured_distribution,
    tested_value,
)
from .symmetric import (
    ExtensionLayout,
    extension_operator_compressed,
    sym_projector,
    top_eigenvalue,
)
from .tensor import RealOperator, is_entrywise_nonneg, lambda_max, psd_interval_check
from .verifier import (
    acceptance_as_overlap,
    acceptance_matrix,
    acceptance_probability,
    hermitian_overlap,
    raw_overlap,
    simulate_standard_model,
)

DEFAULT_SLACK = 1e-9


def _le(name: str, statement: str, lhs: float, rhs: float, tol: float, **values) -> CheckRecord:
    return CheckRecord(
        name=name,
        statement=statement,
        lhs=float(lhs),
        rhs=float(rhs),
        tolerance=float(tol),
        passed=bool(lhs <= rhs + tol),
        values={k: float(v) for k, v in values.items()},
    )


def _true(name: str, statement: str, ok: bool, **values) -> CheckRecord:
    return CheckRecord(
        name=name,
        statement=statement,
        lhs=0.0 if ok else 1.0,
        rhs=0.0,
        tolerance=0.0,
        passed=bool(ok),
        values={k: float(v) for k, v in values.items()},
    )


def _labels(instances: list[InstanceFile]) -> list[str]:
    out = []
    for i, inst in enumerate(instances):
        out.append(inst.metadata.get("name", f"inst{i:03d}"))
    return out


def _require_kind(instances, kind):
    for inst in instances:
        if inst.kind != kind:
            raise ValueError(f"suite needs {kind} instances, got {inst.kind}")


def _random_unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _random_bosonic(rng, layout: ExtensionLayout, signed: bool = True) -> BosonicState:
    v = rng.standard_normal(layout.compressed_dim)
    if not signed:
        v = np.abs(v)
    return BosonicState.from_compressed_vector(layout, v / np.linalg.norm(v))


# ------------------------------------------------------------------- suites


def suite_verifier_basic(instances, config) -> list[CheckRecord]:
    _require_kind(instances, "verifier")
    rng = np.random.default_rng(config.get("seed", 0))
    tol = config.get("tol", DEFAULT_SLACK)
    per = int(config.get("witnesses_per_instance", 1))
    checks = []
    for label, inst in zip(_labels(instances), instances):
        v = decode_instance(inst)
        g = raw_overlap(v)
        h = hermitian_overlap(v)
        m = acceptance_matrix(v)
        min_entry = float(min(g.entries.min(), h.entries.min()))
        checks.append(
            _le(f"{label}/overlap-nonneg", "min entry of G, H >= 0", -min_entry, 0.0, 1e-12)
        )
        gnorm = float(np.linalg.norm(g.entries, 2))
        checks.append(_le(f"{label}/raw-norm", "||G|| <= 1", gnorm, 1.0, tol))
        asym = float(np.abs(h.entries - h.entries.T).max())
        checks.append(_le(f"{label}/hermitian-symmetric", "H == H^T", asym, 0.0, 1e-14))
        hnorm = float(np.abs(np.linalg.eigvalsh(h.entries)).max())
        checks.append(_le(f"{label}/hermitian-norm", "||H|| <= 1", hnorm, 1.0, tol))
        checks.append(
            _true(
                f"{label}/acceptance-psd",
                "0 <= eigs((I+H)/2) <= 1",
                psd_interval_check(m, tol=tol),
            )
        )
        for j in range(per):
            psi = _random_unit(rng, 1 << v.witness_bits)
            direct = acceptance_probability(v, psi)
            simulated = simulate_standard_model(v, psi)
            checks.append(
                _le(
                    f"{label}/standard-model-{j}",
                    "|sim - (1+<psi,H psi>)/2| == 0",
                    abs(direct - simulated),
                    0.0,
                    tol,
                    direct=direct,
                    simulated=simulated,
                )
            )
    return checks


def suite_overlap_affine(instances, config) -> list[CheckRecord]:
    _require_kind(instances, "verifier")
    tol = config.get("tol", 1e-12)
    checks = []
    for label, inst in zip(_labels(instances), instances):
        v = decode_instance(inst)
        lifted = acceptance_as_overlap(v)
        gap = float(
            np.abs(hermitian_overlap(lifted).entries - acceptance_matrix(v).entries).max()
        )
        checks.append(
            _le(f"{label}/overlap-equals-acceptance", "H' == (I+H)/2 entrywise", gap, 0.0, tol)
        )
    return checks


def suite_entangled_family(instances, config) -> list[CheckRecord]:
    _require_kind(instances, "matrix")
    seed = config.get("seed", 0)
    restarts = int(config.get("restarts", 50))
    grid_points = int(config.get("grid_points", 400))
    checks = []
    for label, inst in zip(_labels(instances), instances):
        m_op = decode_instance(inst)
        d = m_op.layout.dims[0]
        lam = lambda_max(m_op)
        checks.append(
            _le(f"{label}/top-eigenvalue", "|lambda_max - 1| == 0", abs(lam - 1.0), 0.0, 1e-9)
        )
        ascent = omega_plus_alternating(m_op, restarts=restarts, seed=seed)
        checks.append(
            _le(
                f"{label}/ascent-value",
                "|omega_+ - 1/d| == 0",
                abs(ascent.value - 1.0 / d),
                0.0,
                1e-6,
            )
        )
        if all(dd <= 3 for dd in m_op.layout.dims) and len(m_op.layout.dims) <= 3:
            from .product_value import omega_plus_grid

            grid_val = omega_plus_grid(m_op, grid_points)
            grid_tol = 4.0 * len(m_op.layout.dims) * math.pi / grid_points
            checks.append(
                _le(
                    f"{label}/grid-value",
                    "|grid - 1/d| <= 4 m pi / points",
                    abs(grid_val - 1.0 / d),
                    0.0,
                    grid_tol,
                )
            )
    return checks


def suite_sandwich(instances, config) -> list[CheckRecord]:
    _require_kind(instances, "matrix")
    seed = config.get("seed", 0)
    r_max = int(config.get("r_max", 5))
    restarts = int(config.get("restarts", 30))
    tol = config.get("tol", DEFAULT_SLACK)
    checks = []
    for label, inst in zip(_labels(instances), instances):
        m_op = decode_instance(inst)
        omega_lower = omega_plus_alternating(m_op, restarts=restarts, seed=seed).value
        lams = [top_eigenvalue(m_op, r) for r in range(1, r_max + 1)]
        for r, lam in zip(range(1, r_max + 1), lams):
            checks.append(
                _le(
                    f"{label}/lift-r{r}",
                    "omega_+ lower bound <= Lambda_R",
                    omega_lower,
                    lam,
                    tol,
                )
            )
        for r in range(2, r_max + 1):
            checks.append(
                _le(
                    f"{label}/monotone-r{r}",
                    "Lambda_R <= Lambda_(R-1)",
                    lams[r - 1],
                    lams[r - 2],
                    tol,
                )
            )
    return checks


def suite_direct_rounding(instances, config) -> list[CheckRecord]:
    _require_kind(instances, "matrix")
    rng = np.random.default_rng(config.get("seed", 0))
    states_per = int(config.get("states_per_instance", 4))
    copies = int(config.get("copies", 3))
    tol = config.get("tol", DEFAULT_SLACK)
    checks = []
    for label, inst in zip(_labels(instances), instances):
        m_op = decode_instance(inst)
        if not _contractive(m_op):
            m_op = _shrink(m_op)
        layout = ExtensionLayout.uniform(m_op.layout, copies)
        for j in range(states_per):
            state = _random_bosonic(rng, layout, signed=bool(j % 2))
            result = direct_round(state, m_op)
            checks.append(
                _le(
                    f"{label}/round-bound-{j}",
                    "achieved >= V - 2 sqrt(2) gamma",
                    result.tested - 2.0 * math.sqrt(2.0) * result.gamma,
                    result.achieved,
                    tol,
                    gamma=result.gamma,
                )
            )
    return checks


def _contractive(m_op: RealOperator) -> bool:
    return float(np.abs(np.linalg.eigvalsh(m_op.entries)).max()) <= 1.0 + 1e-12


def _shrink(m_op: RealOperator) -> RealOperator:
    top = float(np.abs(np.linalg.eigvalsh(m_op.entries)).max())
    return RealOperator(m_op.layout, m_op.entries / top)


def suite_conditioning(instances, config) -> list[CheckRecord]:
    _require_kind(instances, "matrix")
    rng = np.random.default_rng(config.get("seed", 0))
    states_per = int(config.get("states_per_instance", 3))
    copies = int(config.get("copies", 3))
    tol = config.get("tol", DEFAULT_SLACK)
    margin = 1e-6
    checks = []
    for label, inst in zip(_labels(instances), instances):
        m_op = decode_instance(inst)
        if not _contractive(m_op):
            m_op = _shrink(m_op)
        mu = 0.1
        layout = ExtensionLayout.uniform(m_op.layout, copies)
        for j in range(states_per):
            state = _random_bosonic(rng, layout)
            value = tested_value(state, m_op)
            dist = measured_distribution(state)
            ent = entropy(dist)
            phi = value - mu * ent
            for block in range(layout.num_blocks):
                gap = coordinate_independence_gap(dist, block)
                outcomes = condition_step(state, block)
                weights = np.array([oc.weight for oc in outcomes])
                values = np.array([tested_value(oc.residual, m_op) for oc in outcomes])
                checks.append(
                    _le(
                        f"{label}/value-preserved-{j}-b{block}",
                        "|sum_a w_a V(rho_a) - V(rho)| == 0",
                        abs(float(weights @ values) - value),
                        0.0,
                        tol,
                    )
                )
                if gap > margin:
                    ents = np.array(
                        [entropy(measured_distribution(oc.residual)) for oc in outcomes]
                    )
                    checks.append(
                        _le(
                            f"{label}/entropy-drop-{j}-b{block}",
                            "sum_a w_a H(rho_a) <= H(rho) - 2 delta^2",
                            float(weights @ ents),
                            ent - 2.0 * gap * gap,
                            tol,
                            gap=gap,
                        )
                    )
                    phis = values - mu * ents
                    checks.append(
                        _le(
                            f"{label}/greedy-potential-{j}-b{block}",
                            "max_a Phi(rho_a) >= Phi(rho) + 2 mu delta^2",
                            phi + 2.0 * mu * gap * gap,
                            float(phis.max()),
                            tol,
                        )
                    )
                support_gap = max(
                    abs(float(np.linalg.norm(oc.residual.data)) - 1.0) for oc in outcomes
                )
                checks.append(
                    _le(
                        f"{label}/residual-support-{j}-b{block}",
                        "residuals stay normalized on the symmetric subspace",
                        support_gap,
                        0.0,
                        1e-9,
                    )
                )
    return checks


def suite_distances(instances, config) -> list[CheckRecord]:
    _require_kind(instances, "distribution")
    rng = np.random.default_rng(config.get("seed", 0))
    tol = config.get("tol", 1e-12)
    checks = []
    for label, inst in zip(_labels(instances), instances):
        p = decode_instance(inst)
        q_prod = product_of_marginals(p)
        mix = rng.random(p.flat().size)
        mix = mix / mix.sum()
        q_rand = JointDistribution.from_flat(p.layout, mix)
        for tag, q in (("product", q_prod), ("random", q_rand)):
            rep = check_hellinger_kl(p, q, slack=tol)
            checks.append(
                _le(
                    f"{label}/kl-bound-{tag}",
                    "KL(p,q) >= 2 dH(p,q)^2",
                    2.0 * rep.hellinger**2,
                    rep.kl if math.isfinite(rep.kl) else 1e300,
                    tol,
                )
            )
        if p.num_coordinates >= 2:
            gaps = [
                coordinate_independence_gap(p, i) for i in range(p.num_coordinates - 1)
            ]
            rep = check_tensorization(p, max(gaps) if gaps else 0.0, slack=tol)
            checks.append(
                _true(
                    f"{label}/tensorization",
                    "dH(P, prod p_i) <= (m-1) max_i dH(P, p_i x p_rest)",
                    rep.holds,
                    global_distance=rep.global_distance,
                )
            )
        sym_gap = abs(hellinger(p, q_rand) - hellinger(q_rand, p))
        checks.append(
            _le(f"{label}/metric-symmetry", "dH(p,q) == dH(q,p)", sym_gap, 0.0, 0.0)
        )
        third = rng.random(p.flat().size)
        third = third / third.sum()
        q3 = JointDistribution.from_flat(p.layout, third)
        tri = hellinger(p, q3) - (hellinger(p, q_rand) + hellinger(q_rand, q3))
        checks.append(
            _le(f"{label}/metric-triangle", "dH(p,r) <= dH(p,q) + dH(q,r)", tri, 0.0, tol)
        )
    return checks


def suite_symmetrizer(instances, config) -> list[CheckRecord]:
    if instances:
        raise ValueError("symmetrizer suite is configured, not instance-driven")
    r_values = config.get("r_values", (2, 3, 4))
    etas = config.get("etas", (0.5, 0.25, 0.1))
    local_dim = int(config.get("local_dim", 2))
    tol = config.get("tol", DEFAULT_SLACK)
    checks = []
    for r in r_values:
        for eta in etas:
            label = f"r{r}-eta{eta}"
            sampler = build_sampler(r, eta)
            probs = distribution(sampler)
            inv_ok = all(
                probs[tau] == probs[tuple(int(x) for x in np.argsort(tau))]
                for tau in probs
            )
            checks.append(
                _true(f"{label}/inverse-invariance", "p(tau) == p(tau^-1) exactly", inv_ok)
            )
            checks.append(
                _true(
                    f"{label}/probability-sum",
                    "sum_tau p(tau) == 1 exactly",
                    sum(probs.values()) == Fraction(1),
                )
            )
            tv = total_variation(sampler)
            checks.append(
                _true(
                    f"{label}/tv-bound",
                    "sum |p(tau) - 1/R!| <= eta exactly",
                    tv <= Fraction(eta),
                    tv=float(tv),
                )
            )
            approx = approx_projector(sampler, local_dim)
            ideal = sym_projector(local_dim, r)
            asym = float(np.abs(approx.entries - approx.entries.T).max())
            checks.append(
                _le(f"{label}/self-adjoint", "Pi_dyadic == Pi_dyadic^T", asym, 0.0, 1e-14)
            )
            diff = approx.entries - ideal.entries
            norm = float(np.abs(np.linalg.eigvalsh((diff + diff.T) / 2.0)).max())
            checks.append(
                _le(f"{label}/projector-norm", "||Pi_dyadic - Pi|| <= eta", norm, eta, tol)
            )
            formula_q = math.ceil(math.log2(2 * sampler.factorial / eta))
            checks.append(
                _true(
                    f"{label}/branch-bits",
                    "q == ceil(log2(2 R! / eta))",
                    sampler.q == formula_q,
                    q=sampler.q,
                    formula_q=formula_q,
                )
            )
    return checks


def suite_compiler(instances, config) -> list[CheckRecord]:
    seed = config.get("seed", 0)
    tol = config.get("tol", DEFAULT_SLACK)
    c = float(config.get("completeness", 0.7))
    s = float(config.get("soundness", 0.5))
    r_actual = int(config.get("r_actual", 2))
    checks = []
    for label, inst in zip(_labels(instances), instances):
        if inst.kind == "matrix":
            m_op = decode_instance(inst)
            verifier = None
        elif inst.kind == "verifier":
            verifier = decode_instance(inst)
            m_op = acceptance_matrix(verifier)
        else:
            raise ValueError("compiler suite needs matrix or verifier instances")
        k = len(m_op.layout.dims)
        the_plan = clps.plan(k, m_op.layout.dims, c, s, r_actual)
        compiled = clps.compile_matrices(m_op, the_plan)
        audit = clps.gap_audit(m_op, the_plan, compiled, restarts=20, seed=seed)
        bound = 2.0 * (k - 1) * the_plan.eta
        checks.append(
            _le(
                f"{label}/perturbation",
                "||E_dyadic - E|| <= 2 (k-1) eta",
                audit.perturbation_norm,
                bound,
                tol,
            )
        )
        checks.append(
            _le(
                f"{label}/eigenvalue-shift",
                "|lambda(E_dyadic) - lambda(E)| <= 2 (k-1) eta",
                abs(audit.lambda_dyadic - audit.lambda_ideal),
                bound,
                tol,
            )
        )
        checks.append(
            _le(
                f"{label}/yes-case",
                "lambda(E_dyadic) >= omega lower bound - 2 (k-1) eta",
                audit.omega_lower - bound,
                audit.lambda_dyadic,
                tol,
            )
        )
        if verifier is not None and all(g == 1 for g in verifier.witness_groups):
            circuit = clps.compile_circuit(verifier, the_plan)
            realized = hermitian_overlap(circuit)
            gap = float(np.abs(realized.entries - compiled.tilde_e.entries).max())
            checks.append(
                _le(
                    f"{label}/circuit-matrix-agreement",
                    "hermitian overlap of compiled circuit == E_dyadic",
                    gap,
                    0.0,
                    tol,
                )
            )
    return checks


def suite_plan_arithmetic(instances, config) -> list[CheckRecord]:
    if instances:
        raise ValueError("plan-arithmetic suite is configured, not instance-driven")
    rng = np.random.default_rng(config.get("seed", 0))
    count = int(config.get("count", 20))
    checks = []
    worked = clps.plan(2, (2, 2), 0.7, 0.5, 2)
    expected = {
        "epsilon": 0.05,
        "eta": 0.003125,
        "alpha": 0.00625,
        "gap_prime": 0.06875,
    }
    for field_name, value in expected.items():
        checks.append(
            _le(
                f"worked-example/{field_name}",
                f"{field_name} matches the evaluated schedule",
                abs(getattr(worked, field_name) - value),
                0.0,
                1e-12,
            )
        )
    checks.append(
        _true(
            "worked-example/r-analysis",
            "analysis copy count reproduces 1419566",
            worked.r_theoretical == 1_419_566,
            r_theoretical=worked.r_theoretical,
        )
    )
    for j in range(count):
        k = int(rng.integers(2, 5))
        s = float(rng.uniform(0.05, 0.8))
        c = float(rng.uniform(s + 0.05, 0.99))
        dims = tuple(int(rng.integers(2, 5)) for _ in range(k))
        p = clps.plan(k, dims, c, s, 1)
        gap_id = abs((p.c_prime - p.s_prime) - 11.0 * p.delta_gap / 32.0)
        checks.append(
            _le(f"random-{j:02d}/gap-identity", "c' - s' == 11 Delta / 32", gap_id, 0.0, 1e-14)
        )
        checks.append(
            _le(
                f"random-{j:02d}/alpha-identity",
                "alpha == Delta / 32",
                abs(p.alpha - p.delta_gap / 32.0),
                0.0,
                1e-14,
            )
        )
    return checks


def suite_adaptive_rounding(instances, config) -> list[CheckRecord]:
    _require_kind(instances, "matrix")
    tol = config.get("tol", DEFAULT_SLACK)
    r_values = config.get("r_values", (3, 4, 5, 6))
    epsilon = float(config.get("epsilon", 1.0))
    checks = []
    for label, inst in zip(_labels(instances), instances):
        m_op = decode_instance(inst)
        if not _contractive(m_op):
            m_op = _shrink(m_op)
        base = m_op.layout
        m = base.num_registers
        schedule = RoundingSchedule.for_instance(base, epsilon)
        for r in r_values:
            ext = extension_operator_compressed(m_op, r)
            evals, evecs = np.linalg.eigh(ext.entries)
            layout = ExtensionLayout.uniform(base, r)
            state = BosonicState.from_compressed_vector(layout, evecs[:, -1])
            run = adaptive_round(state, m_op, schedule)
            lam = float(evals[-1])
            checks.append(
                _le(
                    f"{label}/r{r}/tested-eigenvalue",
                    "V(top eigenvector) == Lambda_R",
                    abs(run.trace.initial_tested - lam),
                    0.0,
                    tol,
                )
            )
            for idx, step in enumerate(run.trace.steps):
                checks.append(
                    _le(
                        f"{label}/r{r}/step{idx}-value",
                        "|sum_a w_a V(rho_a) - V(rho)| == 0",
                        step.value_residual_gap,
                        0.0,
                        tol,
                    )
                )
                checks.append(
                    _le(
                        f"{label}/r{r}/step{idx}-potential",
                        "Phi never decreases along the chosen path",
                        -step.potential_gain,
                        0.0,
                        tol,
                    )
                )
            budget = (
                2.0 * math.sqrt(2.0) * run.trace.final_gamma
                + schedule.mu * schedule.entropy_budget
            )
            checks.append(
                _le(
                    f"{label}/r{r}/recovery",
                    "achieved >= V - 2 sqrt(2) gamma - mu L",
                    run.trace.initial_tested - budget,
                    run.achieved,
                    tol,
                    achieved=run.achieved,
                    tested=run.trace.initial_tested,
                )
            )
    return checks


SUITES = {
    "verifier-basic": suite_verifier_basic,
    "overlap-affine": suite_overlap_affine,
    "entangled-family": suite_entangled_family,
    "sandwich": suite_sandwich,
    "direct-rounding": suite_direct_rounding,
    "conditioning": suite_conditioning,
    "distances": suite_distances,
    "symmetrizer": suite_symmetrizer,
    "compiler": suite_compiler,
    "plan-arithmetic": suite_plan_arithmetic,
    "adaptive-rounding": suite_adaptive_rounding,
}


def run_suite(name: str, instances: list[InstanceFile], config: dict | None = None) -> ReportFile:
    """Run one named suite; the report is sorted by check name."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; available: {sorted(SUITES)}")
    config = dict(config or {})
    report = ReportFile(name)
    report.checks = SUITES[name](list(instances), config)
    return report.sorted()
