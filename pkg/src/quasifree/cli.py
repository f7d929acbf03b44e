"""Command line front end: analyze, oracle, and dirac pipelines.

Exit codes: 0 success, 2 malformed input or cap exceeded, 3 operator not in
the semigroup, 4 numerical failure (an invariant self-check failed).  Reports
are canonical JSON (sorted keys, fixed indent), so identical inputs, seed and
version produce byte-identical files; --threads only bounds parallelism and
never changes output bytes.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, dirac
from .car import car_charge_data, car_membership, extend_gauge, z2_index
from .ccr import ccr_charge_data, ccr_membership
from .errors import (
    CapExceeded,
    LevelOutOfRange,
    MalformedInput,
    NonzeroIndex,
    NotChargeDiagonal,
    NotGaugeCompatible,
    NotInSemigroup,
    QuasifreeError,
    ShapeMismatch,
    UnstableIndex,
    WindowTooSmall,
)
from .fock import (
    BoseFock,
    FermiFock,
    bose_implementer,
    car_implementers,
    charge_rep_blocks,
    compound_matrix,
    omega_alphas_bose,
    omega_alphas_fermi,
    omega_p_bose,
    omega_p_fermi,
)
from .report import (
    SCHEMA_VERSION,
    canonical_json,
    comparison,
    load_model,
)
from .sectors import (
    GaugeAction,
    char_det_h,
    compressed_action,
    oracle_compare,
    sector_table,
)

INPUT_ERRORS = (MalformedInput, CapExceeded, WindowTooSmall, ShapeMismatch,
                NotChargeDiagonal, NotGaugeCompatible, LevelOutOfRange)


def _parallel_map(fn, items, threads: int) -> list:
    """Order-preserving map; thread count never affects the result list."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _emit(payload: dict, args, summary_lines: list) -> None:
    for line in summary_lines:
        print(line)
    if args.report:
        text = canonical_json(payload)
        with open(args.report, "w", encoding="utf-8") as handle:
            handle.write(text)
        print(f"report written to {args.report}")


def _base_payload(command: str, args, model=None) -> dict:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "command": command,
    }
    if model is not None:
        payload["input"] = {"label": model.label,
                            "sha256": model.source_digest}
    return payload


def _membership_payload(mem, tol: float) -> dict:
    iso = getattr(mem, "isometry_defect", None)
    if iso is None:
        iso = mem.kappa_isometry_defect
    return {
        "is_member": mem.is_member,
        "isometry_defect": comparison(iso, tol),
        "selfdual_defect": comparison(mem.selfdual_defect, tol),
        "hs_defect": float(mem.hs_defect),
        "index": mem.index,
        "failures": list(mem.failures),
    }


def _sector_payload(table) -> dict:
    return {
        "algebra": table.algebra,
        "levels": [{"level": row.level, "dimension": row.dimension,
                    "characters": row.characters} for row in table.rows],
        "element_labels": list(table.element_labels),
        "equivalence_classes": [list(c) for c in table.equivalence_classes],
        "annotations": dict(table.annotations),
        "sample": dict(table.sample_meta),
    }


def _effective_seed(args, model) -> int:
    if args.seed is not None:
        return args.seed
    return model.gauge_seed if model.gauge is not None else 0


def cmd_analyze(args) -> int:
    model = load_model(args.input)
    algebra = args.algebra or model.algebra
    tol = args.tol if args.tol is not None else 1e-10
    seed = _effective_seed(args, model)
    v = model.operator
    payload = _base_payload("analyze", args, model)
    payload["algebra"] = algebra
    payload["seed"] = seed
    payload["tolerances"] = {"membership": tol, "recovery": 1e-8,
                             "character": 1e-9}

    mem = (car_membership if algebra == "car" else ccr_membership)(v, tol=tol)
    payload["membership"] = _membership_payload(mem, tol)
    if not mem.is_member:
        payload["status"] = "not-in-semigroup"
        _emit(payload, args, [
            f"{model.label}: NOT in the {algebra} semigroup "
            f"(failures: {', '.join(mem.failures)})"])
        return 3

    if algebra == "car":
        data = car_charge_data(v, tol=tol)
        dim_h = data.h.dim
        k_frame = data.k.frame
        stat_dim = data.statistics_dimension
    else:
        data = ccr_charge_data(v, tol=tol)
        dim_h = 0
        k_frame = data.k_frame
        stat_dim = data.statistics_dimension
    t_norm = float(np.linalg.norm(data.t, ord=2)) if data.t.size else 0.0
    charge = {
        "dim_h": dim_h,
        "dim_k": k_frame.shape[1],
        "index": data.index,
        "statistics_dimension": stat_dim,
        "t_norm": t_norm,
        "hs_defect": float(mem.hs_defect),
    }
    if algebra == "car" and data.index == 0:
        try:
            charge["z2_index"] = z2_index(v, tol=tol)
        except NonzeroIndex:
            pass
    payload["charge_data"] = charge

    if model.gauge is not None:
        h_frame = data.h.frame if algebra == "car" else np.zeros(
            (v.codomain.dim, 0))
        table = sector_table(algebra, v.codomain, h_frame, k_frame,
                             model.gauge, samples=model.gauge_samples,
                             seed=seed)
        payload["sector_table"] = _sector_payload(table)

    payload["status"] = "ok"
    stat_text = ("infinite" if stat_dim == math.inf
                 else f"{stat_dim:g}")
    lines = [
        f"{model.label}: member of the {algebra} semigroup, index {data.index}",
        f"dim h = {dim_h}, dim k = {k_frame.shape[1]}, "
        f"statistics dimension = {stat_text}, |T| = {t_norm:.6f}",
    ]
    if "sector_table" in payload:
        lines.append(
            f"sectors: {len(payload['sector_table']['levels'])} levels, "
            f"classes {payload['sector_table']['equivalence_classes']}")
    _emit(payload, args, lines)
    return 0


def _default_gauge(v, p_full: np.ndarray, tol: float = 1e-9
                   ) -> tuple[GaugeAction, int]:
    """All-ones U(1) when it preserves the vacuum projection, else trivial.

    The charge comparison only makes sense for gauge elements that leave the
    representing vacuum's projection invariant; pairing terms (bogoliubov,
    squeeze) break the all-ones phase action, so those fall back to the
    identity element alone.
    """
    n = v.codomain.n_modes
    u11 = np.diag(np.exp(0.9j * np.ones(n)))
    u_full = extend_gauge(u11, v.codomain)
    leak = float(np.max(np.abs(u_full @ p_full @ u_full.conj().T - p_full)))
    if leak <= tol:
        return GaugeAction("u1", n, charges=(1,) * n), 20
    return GaugeAction("custom", n,
                       unitaries=(np.eye(n, dtype=complex),)), 1


def _car_oracle(args, model, payload, lines) -> None:
    tol = args.tol if args.tol is not None else 1e-10
    v = model.operator
    data = car_charge_data(v, tol=tol)
    fock_d = FermiFock(v.domain.n_modes, dim_cap=args.fock_cap)
    fock_c = FermiFock(v.codomain.n_modes, dim_cap=args.fock_cap)
    omega_p = omega_p_fermi(fock_c, v.codomain, data.h.frame, data.t)
    alphas, omegas = omega_alphas_fermi(fock_c, v.codomain, omega_p,
                                        data.k.frame)
    imp = car_implementers(v, fock_d, fock_c, omegas, alphas)
    payload["implementers"] = {
        "count": len(imp.psis),
        "expected": 2 ** (data.index // 2),
        "intertwining": comparison(imp.intertwining_residual, 1e-10),
        "isometry": comparison(imp.isometry_residual, 1e-10),
        "completeness": comparison(imp.completeness_residual, 1e-10),
        "implementation": comparison(imp.implementation_residual, 1e-10),
    }
    lines.append(
        f"implementers: {len(imp.psis)} (expected {2 ** (data.index // 2)}), "
        f"implementation residual {imp.implementation_residual:.3e} <= 1e-10")

    if model.gauge is not None:
        gauge, samples = model.gauge, model.gauge_samples
    else:
        gauge, samples = _default_gauge(v, data.p)
    seed = _effective_seed(args, model)
    elements = gauge.elements(samples=samples, seed=seed)
    space = v.codomain

    def theorem_deviation(element) -> float:
        gamma = fock_c.gamma(element.u11)
        blocks = charge_rep_blocks(omegas, alphas, gamma)
        det_h = char_det_h(element.u11, data.h.frame, space)
        comp_k = compressed_action(element.u11, data.k.frame, space)
        dev = 0.0
        for level, block in blocks.items():
            target = det_h * compound_matrix(comp_k, level)
            dev = max(dev, float(np.max(np.abs(block - target))))
        return dev

    devs = _parallel_map(theorem_deviation, elements, args.threads)
    worst = max(devs)
    payload["charge_theorem"] = {
        "samples": len(elements),
        "gauge": gauge.kind,
        "max_block_deviation": comparison(worst, 1e-8),
    }
    lines.append(
        f"charge theorem: max blockwise deviation {worst:.3e} <= 1e-8 "
        f"over {len(elements)} gauge elements")


def _bose_gamma_vector(fock: BoseFock, u11: np.ndarray) -> np.ndarray:
    diag = np.diagonal(u11)
    if not np.allclose(u11, np.diag(diag), atol=1e-12):
        raise NotGaugeCompatible(
            "bosonic oracle supports phase-diagonal gauge elements only")
    return fock.gamma_phases(np.angle(diag))


def _ccr_oracle(args, model, payload, lines) -> None:
    tol = args.tol if args.tol is not None else 1e-10
    v = model.operator
    data = ccr_charge_data(v, tol=tol)
    cutoff = args.bose_cutoff
    fock_d = BoseFock(v.domain.n_modes, cutoff)
    fock_c = BoseFock(v.codomain.n_modes, cutoff)
    omega_p, tail = omega_p_bose(fock_c, v.codomain, data.t)
    l_max = 5 if data.k_frame.shape[1] else 0
    alphas, omegas, routes = omega_alphas_bose(
        fock_c, v.codomain, omega_p, data.k_frame, l_max, data.t)
    route_defect = max((r["angular_defect"] for r in routes), default=0.0)
    payload["vacuum"] = {
        "tail": float(tail),
        "route_cross_check": {
            "max_angular_defect": float(route_defect),
            "constants": [{"alpha": list(r["alpha"]),
                           "constant": r["constant"]} for r in routes],
        },
    }
    lines.append(f"bosonic vacuum tail bound: {tail:.3e} (cutoff M = {cutoff})")

    psi, inter, iso = bose_implementer(v, fock_d, fock_c, omega_p,
                                       occ_probe=max(1, cutoff // 2 - 1))
    payload["implementer_probe"] = {
        "intertwining": comparison(inter, 1e-6 + tail),
        "gram_defect_cutoff_limited": float(iso),
    }
    lines.append(
        f"implementer probe: intertwining {inter:.3e} <= 1e-6 + tail "
        f"{tail:.3e}")

    if model.gauge is not None:
        gauge, samples = model.gauge, model.gauge_samples
    else:
        gauge, samples = _default_gauge(v, data.p)
    seed = _effective_seed(args, model)
    table = sector_table("ccr", v.codomain, np.zeros((v.codomain.dim, 0)),
                         data.k_frame, gauge, samples=samples, seed=seed,
                         l_max=l_max)
    elements = gauge.elements(samples=samples, seed=seed)

    def element_blocks(element) -> dict:
        gamma_vec = _bose_gamma_vector(fock_c, element.u11)
        return charge_rep_blocks(omegas, alphas,
                                 lambda vec: gamma_vec * vec)

    blocks = _parallel_map(element_blocks, elements, args.threads)
    compare = oracle_compare(table, blocks, tol=1e-6, tail=tail,
                             strict=False)
    payload["charge_theorem"] = {
        "samples": len(elements),
        "gauge": gauge.kind,
        "levels": sorted(compare["per_level"]),
        "max_trace_deviation": comparison(compare["max_deviation"],
                                          compare["tolerance"]),
        "tail": float(tail),
    }
    lines.append(
        f"charge theorem (traces): max deviation {compare['max_deviation']:.3e}"
        f" <= 1e-6 + tail bound {tail:.3e}")
    if not compare["passed"]:
        raise QuasifreeError(
            f"bosonic charge comparison failed at {compare['worst_at']}")


def cmd_oracle(args) -> int:
    model = load_model(args.input)
    algebra = args.algebra or model.algebra
    payload = _base_payload("oracle", args, model)
    payload["algebra"] = algebra
    payload["seed"] = _effective_seed(args, model)
    payload["caps"] = {"fock_cap": args.fock_cap,
                       "bose_cutoff": args.bose_cutoff}
    lines = []
    if algebra == "car":
        _car_oracle(args, model, payload, lines)
    else:
        _ccr_oracle(args, model, payload, lines)
    payload["status"] = "ok"
    _emit(payload, args, lines)
    return 0


def _parse_cutoffs(text: str) -> tuple:
    try:
        cutoffs = tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise MalformedInput(f"bad cutoff list {text!r}") from exc
    if len(cutoffs) < 2:
        raise MalformedInput("need at least two cutoffs")
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise MalformedInput(f"cutoffs must be strictly ascending: {cutoffs}")
    return cutoffs


def cmd_dirac(args) -> int:
    cutoffs = _parse_cutoffs(args.cutoffs)
    # The localization residual decays like 1/W; the 1e-3 gate is calibrated
    # at W = 512, so the default tolerance scales with the largest cutoff.
    loc_tol = (args.tol if args.tol is not None
               else 1e-3 * 512.0 / cutoffs[-1])
    payload = _base_payload("dirac", args)
    payload["cutoffs"] = list(cutoffs)
    payload["cayley_audit"] = dirac.cayley_audit()

    builds = _parallel_map(dirac.build_v, cutoffs, args.threads)
    per_cutoff = {}
    for build in builds:
        diag = build.diagnostics
        per_cutoff[str(diag["w"])] = {
            "m_loc": diag["m_loc"],
            "row_normalization": comparison(diag["rownorm_deviation"],
                                            diag["rownorm_bound"]),
            "gram_off_identity": comparison(diag["gram_off_identity"], 2e-2),
            "probe_isometry_defect": float(diag["probe_isometry_defect"]),
            "seam_full_defect": float(diag["seam_full_defect"]),
            "shift_overlap_min": diag["shift_overlap_min"],
        }
    payload["window_diagnostics"] = per_cutoff

    counts = {}
    for build in builds[-2:]:
        svals = np.linalg.svd(build.matrix, compute_uv=False)
        counts[build.window.w] = int(np.sum(svals < 0.5))
    if len(set(counts.values())) != 1:
        raise UnstableIndex(f"cokernel count varies with cutoff: {counts}")
    index_value = next(iter(set(counts.values())))
    payload["index"] = {"counts": {str(k): v for k, v in counts.items()},
                        "value": index_value}

    study = dirac.hs_commutator_study(cutoffs, build=builds[-1])
    payload["hs_study"] = {
        "partial_norms": study.partial_norms,
        "increments": study.increments,
        "slopes": study.slopes,
        "verdicts": study.verdicts,
    }
    control = dirac.jump_symbol_control_study(cutoffs)
    payload["hs_control"] = {"slope": control.slopes["plus"],
                             "verdict": control.verdicts["plus"]}

    loc = dirac.prop_loc_check(builds[-1], tol=loc_tol)
    payload["localization"] = {
        "component": "complement",
        "tau": loc["complement"]["tau"],
        "residual": comparison(loc["complement"]["residual"], loc_tol),
        "residual_by_cutoff": {
            str(b.window.w): float(dirac.prop_loc_check(
                b, tol=1.0)["complement"]["residual"]) for b in builds},
    }

    species = dirac.assemble_species(args.gauge_n, index_value)
    payload["species_assembly"] = species
    payload["status"] = "ok"

    lines = [
        f"index estimate: {index_value} "
        f"(stable across cutoffs {sorted(counts)})",
        f"HS commutator verdicts: plus={study.verdicts['plus']}, "
        f"minus={study.verdicts['minus']} "
        f"(control: {control.verdicts['plus']})",
        f"localization: tau = {loc['complement']['tau']:.6f}, residual "
        f"{loc['complement']['residual']:.3e} <= {loc_tol:.1e}",
        f"species assembly: half-index V = {species['half_index']}, "
        f"statistics dimension = {species['statistics_dimension']}",
    ]
    _emit(payload, args, lines)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quasifree",
        description="Implementability and charge analysis for quasi-free "
                    "endomorphisms on truncated self-dual mode spaces.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input: bool) -> None:
        if needs_input:
            p.add_argument("--input", required=True,
                           help="model file (JSON)")
            p.add_argument("--algebra", choices=("car", "ccr"), default=None,
                           help="override the model's algebra tag")
        p.add_argument("--report", default=None, help="report output path")
        p.add_argument("--tol", type=float, default=None,
                       help="primary tolerance override")
        p.add_argument("--seed", type=int, default=None,
                       help="sampling seed override")
        p.add_argument("--threads", type=int, default=1,
                       help="parallelism bound (never affects output bytes)")

    p_analyze = sub.add_parser(
        "analyze", help="membership, charge data, sector table")
    common(p_analyze, needs_input=True)
    p_analyze.set_defaults(func=cmd_analyze)

    p_oracle = sub.add_parser(
        "oracle", help="Fock-space verification of the charge machinery")
    common(p_oracle, needs_input=True)
    p_oracle.add_argument("--fock-cap", type=int, default=4096,
                          help="fermionic Fock dimension cap")
    p_oracle.add_argument("--bose-cutoff", type=int, default=8,
                          help="bosonic per-mode occupation cutoff")
    p_oracle.set_defaults(func=cmd_oracle)

    p_dirac = sub.add_parser(
        "dirac", help="localized circle isometry: index, HS trend, "
                      "localization")
    common(p_dirac, needs_input=False)
    p_dirac.add_argument("--cutoffs", default="64,128,256,512",
                         help="comma-separated ascending mode cutoffs")
    p_dirac.add_argument("--gauge-n", type=int, default=1,
                         help="species count for the assembled operator")
    p_dirac.set_defaults(func=cmd_dirac)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error (input): {exc}", file=sys.stderr)
        return 2
    except NotInSemigroup as exc:
        print(f"error (not in semigroup): {exc}", file=sys.stderr)
        return 3
    except QuasifreeError as exc:
        print(f"error (numerical): {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
